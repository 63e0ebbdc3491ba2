#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>

using namespace dmmpose::cli;

namespace {

void add_common(CLI::App* sub, CommonOptions& c) {
  sub->add_option("--config", c.config, "Flat TOML file of option defaults");
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--out", c.out, "Output directory")->required();
}

// Turns the flat keys of the --config file into "--key=value" arguments
// placed before the command-line ones, which therefore take precedence.
std::vector<std::string> config_arguments(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::vector<std::string> args;
  for (auto item : CLI::ConfigTOML().from_config(in)) {
    std::replace(item.name.begin(), item.name.end(), '_', '-');
    if (!item.parents.empty() || item.name == "++" || item.name == "--")
      throw std::invalid_argument("config file " + path + ": sections are not supported");
    if (item.name == "config") throw std::invalid_argument("config file " + path + ": cannot nest configs");
    if (!sub->get_option_no_throw("--" + item.name))
      throw std::invalid_argument("config file " + path + ": unknown key '" + item.name + "' for " +
                                  sub->get_name());
    if (item.inputs.size() != 1)
      throw std::invalid_argument("config file " + path + ": key '" + item.name + "' needs a single value");
    args.push_back("--" + item.name + "=" + item.inputs.front());
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose forecasting with deep Markov models"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic labelled dataset and an actor split");
  add_common(g, gen.common);
  g->add_option("--num-sequences", gen.synthetic.num_sequences);
  g->add_option("--seconds", gen.synthetic.seconds);
  g->add_option("--fps", gen.synthetic.fps);
  g->add_option("--num-actors", gen.synthetic.num_actors);
  g->add_option("--noise-px", gen.synthetic.noise_px);
  g->add_option("--train-fraction", gen.train_fraction);
  g->add_option("--val-fraction", gen.val_fraction);
  g->add_option("--test-fraction", gen.test_fraction);

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train a forecaster or the action classifier");
  add_common(t, tr.common);
  t->add_option("--dataset", tr.dataset)->required();
  t->add_option("--split", tr.split)->required();
  t->add_option("--model", tr.model)
      ->check(CLI::IsMember({"dmm", "zero_velocity", "single_recurrent", "erd", "stacked3", "classifier"}));
  t->add_option("--width-scale", tr.width_scale);
  t->add_option("--epochs", tr.epochs);
  t->add_option("--batch-size", tr.batch_size);
  t->add_option("--window", tr.window);
  t->add_option("--learning-rate", tr.learning_rate);
  t->add_option("--clip-norm", tr.clip_norm);
  t->add_option("--kl-warmup-steps", tr.kl_warmup_steps);
  t->add_option("--samples-per-sequence", tr.samples_per_sequence);
  t->add_option("--latent-dim", tr.latent_dim);
  t->add_option("--inference-dim", tr.inference_dim);
  t->add_option("--hidden-dim", tr.hidden_dim);
  t->add_option("--recurrent-dim", tr.recurrent_dim);
  t->add_option("--classifier-hidden", tr.classifier_hidden);

  ForecastOptions fc;
  auto* f = app.add_subcommand("forecast", "Forecast continuations of held-out sequences");
  add_common(f, fc.common);
  f->add_option("--dataset", fc.dataset)->required();
  f->add_option("--split", fc.split)->required();
  f->add_option("--checkpoint", fc.checkpoint)->required();
  f->add_option("--subset", fc.subset);
  f->add_option("--observed-seconds", fc.observed_seconds);
  f->add_option("--horizon-seconds", fc.horizon_seconds);
  f->add_option("--samples", fc.samples);
  f->add_flag("--sample-emission", fc.sample_emission);

  EvaluateOptions ev;
  auto* e = app.add_subcommand("evaluate", "Score forecasts with PCK and the action classifier");
  add_common(e, ev.common);
  e->add_option("--dataset", ev.dataset)->required();
  e->add_option("--forecasts", ev.forecasts, "Comma-separated forecast files")->required();
  e->add_option("--classifier", ev.classifier);
  e->add_option("--thresholds", ev.thresholds);
  e->add_option("--normalizer", ev.normalizer)->check(CLI::IsMember({"bbox", "torso"}));
  e->add_option("--metrics", ev.metrics)->check(CLI::IsMember({"pck", "classifier", "all"}));
  e->add_option("--observed-seconds", ev.observed_seconds);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    const auto sub_at = std::find_if(args.begin(), args.end(),
                                     [&](const std::string& a) { return app.get_subcommand_no_throw(a) != nullptr; });
    std::string config;
    for (auto it = sub_at; it != args.end(); ++it) {
      if (*it == "--config" && std::next(it) != args.end()) config = *std::next(it);
      if (it->rfind("--config=", 0) == 0) config = it->substr(9);
    }
    if (sub_at != args.end() && !config.empty()) {
      const auto extra = config_arguments(app.get_subcommand(*sub_at), config);
      args.insert(std::next(sub_at), extra.begin(), extra.end());
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }

  try {
    if (*g) cmd_generate(gen);
    if (*t) cmd_train(tr);
    if (*f) cmd_forecast(fc);
    if (*e) cmd_evaluate(ev);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
