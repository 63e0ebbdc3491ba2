#include "dmmpose/state_space.hpp"

#include "dmmpose/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace dmmpose {

TimeBatch time_major(const Tensor& seq, Eigen::Index copies) {
  TimeBatch out;
  out.reserve(static_cast<std::size_t>(seq.rows()));
  for (Eigen::Index t = 0; t < seq.rows(); ++t) out.push_back(seq.row(t).replicate(copies, 1));
  return out;
}

TimeBatch time_major(std::span<const Tensor> seqs) {
  if (seqs.empty()) throw std::invalid_argument("time_major: empty batch");
  const Eigen::Index T = seqs.front().rows();
  const Eigen::Index F = seqs.front().cols();
  const auto B = static_cast<Eigen::Index>(seqs.size());
  TimeBatch out(static_cast<std::size_t>(T), Tensor(B, F));
  for (Eigen::Index b = 0; b < B; ++b) {
    const Tensor& s = seqs[static_cast<std::size_t>(b)];
    if (s.rows() != T || s.cols() != F)
      throw std::invalid_argument("time_major: sequences differ in shape");
    for (Eigen::Index t = 0; t < T; ++t) out[static_cast<std::size_t>(t)].row(b) = s.row(t);
  }
  return out;
}

TimeBatch draw_noise(std::size_t steps, Eigen::Index rows, Eigen::Index dim, Rng& rng) {
  TimeBatch eps;
  eps.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) eps.push_back(standard_normal(rows, dim, rng));
  return eps;
}

ElboTerms elbo_terms(Tape& tape, const StateSpaceModel& model, std::span<const Tensor> x,
                     std::span<const Tensor> eps, double kl_weight) {
  if (x.empty()) throw std::invalid_argument("elbo: empty sequence");
  if (eps.size() != x.size()) throw std::invalid_argument("elbo: need one noise row block per frame");
  if (kl_weight < 0 || kl_weight > 1) throw std::invalid_argument("elbo: kl_weight must lie in [0, 1]");
  const LatentPath path = model.infer(tape, x, eps);
  const Eigen::Index B = x.front().rows();

  std::vector<Var> recon, kl_rest;
  for (std::size_t t = 0; t < x.size(); ++t) {
    GaussianVar px = model.emission(tape, path.samples[t]);
    recon.push_back(ad::sum(ad::gaussian_log_pdf_rows(tape.constant(x[t]), px.mean, px.log_var)));
  }
  const GaussianVar prior = model.initial_prior(tape, B);
  const GaussianVar& q1 = path.posteriors.front();
  Var kl0 = ad::sum(ad::gaussian_kl_rows(q1.mean, q1.log_var, prior.mean, prior.log_var));
  for (std::size_t t = 1; t < x.size(); ++t) {
    const GaussianVar p = model.transition(tape, path.samples[t - 1]);
    const GaussianVar& q = path.posteriors[t];
    kl_rest.push_back(ad::sum(ad::gaussian_kl_rows(q.mean, q.log_var, p.mean, p.log_var)));
  }
  auto total = [&](const std::vector<Var>& v) {
    if (v.empty()) return tape.constant(Tensor::Zero(1, 1));
    Var acc = v.front();
    for (std::size_t i = 1; i < v.size(); ++i) acc = ad::add(acc, v[i]);
    return acc;
  };
  ElboTerms out;
  out.reconstruction = total(recon);
  out.kl_initial = kl0;
  out.kl_transitions = total(kl_rest);
  out.objective = ad::sub(out.reconstruction,
                          ad::scale(ad::add(out.kl_initial, out.kl_transitions), kl_weight));
  return out;
}

ElboBreakdown elbo(const StateSpaceModel& model, const Tensor& features, const Tensor& eps,
                   double kl_weight) {
  if (eps.rows() != features.rows() || eps.cols() != model.latent_dim())
    throw std::invalid_argument("elbo: eps must be (T x latent_dim), got " + shape_string(eps));
  Tape tape;
  tape.set_grad_enabled(false);
  const TimeBatch x = time_major(features);
  const TimeBatch e = time_major(eps);
  const ElboTerms terms = elbo_terms(tape, model, x, e, kl_weight);
  ElboBreakdown b;
  b.reconstruction = terms.reconstruction.value()(0, 0);
  b.kl_initial = terms.kl_initial.value()(0, 0);
  b.kl_transitions = terms.kl_transitions.value()(0, 0);
  b.kl_weight = kl_weight;
  b.total = terms.objective.value()(0, 0);
  b.frames = static_cast<int>(features.rows());
  b.per_frame = b.total / b.frames;
  return b;
}

double kl_weight_at(long step, int warmup_steps) {
  if (warmup_steps <= 0) return 1.0;
  return std::min(1.0, static_cast<double>(step) / warmup_steps);
}

namespace {

std::string norm_report(const StateSpaceModel& model) {
  std::ostringstream os;
  os << "generative norm " << model.generative().l2_norm() << ", inference norm "
     << model.inference().l2_norm();
  return os.str();
}

}  // namespace

TrainLog train(StateSpaceModel& model, std::span<const Tensor> dataset, const TrainConfig& cfg,
               const std::function<void(const TrainLogRow&)>& on_epoch) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.epochs < 0 || cfg.batch_size < 1 || cfg.window < 1 || cfg.samples_per_sequence < 1)
    throw std::invalid_argument("train: invalid configuration");
  Eigen::Index shortest = std::numeric_limits<Eigen::Index>::max();
  for (const auto& s : dataset) {
    if (s.cols() != model.feature_dim())
      throw std::invalid_argument("train: feature width " + std::to_string(s.cols()) +
                                  " does not match model " + std::to_string(model.feature_dim()));
    shortest = std::min(shortest, s.rows());
  }
  if (shortest < 1) throw std::invalid_argument("train: dataset contains an empty sequence");
  const Eigen::Index W = std::min<Eigen::Index>(cfg.window, shortest);

  // Clipping is applied jointly below, so the optimizers never clip.
  AdamConfig acfg;
  acfg.learning_rate = cfg.learning_rate;
  acfg.clip_norm = std::numeric_limits<double>::infinity();
  Adam opt_gen(model.generative(), acfg);
  Adam opt_inf(model.inference(), acfg);

  Rng rng = derive_rng(cfg.seed, 0x7472616e);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainLog log;
  long step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum_obj = 0, sum_recon = 0, sum_kl = 0, frames = 0, weight = 0;
    int batch_index = 0;
    for (std::size_t first = 0; first < order.size();
         first += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
      const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Tensor> crops;
      for (std::size_t k = first; k < last; ++k) {
        const Tensor& s = dataset[order[k]];
        std::uniform_int_distribution<Eigen::Index> start(0, s.rows() - W);
        const Eigen::Index s0 = start(rng);
        for (int r = 0; r < cfg.samples_per_sequence; ++r) crops.push_back(s.middleRows(s0, W));
      }
      const TimeBatch x = time_major(crops);
      const Eigen::Index B = x.front().rows();
      const TimeBatch eps = draw_noise(x.size(), B, model.latent_dim(), rng);
      weight = kl_weight_at(step, cfg.kl_warmup_steps);

      Tape tape;
      const ElboTerms terms = elbo_terms(tape, model, x, eps, weight);
      const double n = static_cast<double>(B * W);
      Var loss = ad::scale(terms.objective, -1.0 / n);
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) {
        std::ostringstream os;
        os << "train: non-finite loss at epoch " << epoch << ", batch " << batch_index << " (step "
           << step << "); " << norm_report(model);
        throw TrainingError(os.str());
      }
      tape.backward(loss);
      Gradients g_gen = tape.gradients(model.generative());
      Gradients g_inf = tape.gradients(model.inference());
      if (!cfg.train_generative) g_gen = zeros_like(model.generative());
      if (!cfg.train_inference) g_inf = zeros_like(model.inference());
      const double norm = std::hypot(global_norm(g_gen), global_norm(g_inf));
      if (std::isfinite(norm) && norm > cfg.clip_norm) {
        const double s = cfg.clip_norm / norm;
        for (auto& t : g_gen) t *= s;
        for (auto& t : g_inf) t *= s;
      }
      try {
        if (cfg.train_generative) opt_gen.step(model.generative(), std::move(g_gen));
        if (cfg.train_inference) opt_inf.step(model.inference(), std::move(g_inf));
      } catch (const std::runtime_error& e) {
        std::ostringstream os;
        os << e.what() << " at epoch " << epoch << ", batch " << batch_index << "; "
           << norm_report(model);
        throw TrainingError(os.str());
      }
      ++step;

      const double kl = terms.kl_initial.value()(0, 0) + terms.kl_transitions.value()(0, 0);
      sum_obj += terms.objective.value()(0, 0);
      sum_recon += terms.reconstruction.value()(0, 0);
      sum_kl += kl;
      frames += n;
    }
    TrainLogRow row;
    row.epoch = epoch;
    row.step = step;
    row.kl_weight = weight;
    row.objective_per_frame = sum_obj / frames;
    row.reconstruction_per_frame = sum_recon / frames;
    row.kl_per_frame = sum_kl / frames;
    row.elbo_per_frame = (sum_recon - sum_kl) / frames;
    log.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  return log;
}

std::vector<Tensor> forecast(const StateSpaceModel& model, const Tensor& observed,
                             const ForecastOptions& opt) {
  if (opt.horizon < 1) throw std::invalid_argument("forecast: horizon must be >= 1");
  if (opt.samples < 1) throw std::invalid_argument("forecast: need at least one sample");
  if (observed.rows() < 1) throw std::invalid_argument("forecast: empty observed window");
  if (observed.cols() != model.feature_dim())
    throw std::invalid_argument("forecast: observed feature width does not match model");
  const Eigen::Index S = opt.samples;
  const Eigen::Index Z = model.latent_dim();
  Rng rng = derive_rng(opt.seed, 0x666f7265);

  Tape tape;
  tape.set_grad_enabled(false);
  const TimeBatch x = time_major(observed, S);
  const TimeBatch eps = draw_noise(x.size(), S, Z, rng);
  const LatentPath path = model.infer(tape, x, eps);
  Var z = path.samples.back();

  std::vector<Tensor> out(static_cast<std::size_t>(S), Tensor(opt.horizon, model.feature_dim()));
  for (int h = 0; h < opt.horizon; ++h) {
    const GaussianVar p = model.transition(tape, z);
    z = ad::reparam_sample(p.mean, p.log_var, standard_normal(S, Z, rng));
    const GaussianVar e = model.emission(tape, z);
    Tensor frame = e.mean.value();
    if (opt.sample_emission)
      frame = ad::reparam_sample(e.mean, e.log_var, standard_normal(S, frame.cols(), rng)).value();
    for (Eigen::Index s = 0; s < S; ++s) out[static_cast<std::size_t>(s)].row(h) = frame.row(s);
  }
  return out;
}

}  // namespace dmmpose
