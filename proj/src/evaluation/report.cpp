#include "dmmpose/report.hpp"

#include "dmmpose/pipeline.hpp"

#include <charconv>
#include <stdexcept>

namespace dmmpose {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

MethodScorer::MethodScorer(std::string method, const EvalOptions& options) : opt_(options) {
  result_.method = std::move(method);
  result_.samples = 0;
  if ((opt_.classifier == nullptr) != (opt_.classifier_stats == nullptr))
    throw std::invalid_argument("evaluation: classifier and its stats go together");
}

void MethodScorer::add(const PoseSequence& observed, const PoseSequence& truth,
                       std::span<const PoseSequence> samples) {
  if (samples.empty()) throw std::invalid_argument("evaluation: window without continuations");
  if (result_.samples != 0 && result_.samples != static_cast<int>(samples.size()))
    throw std::invalid_argument("evaluation: method '" + result_.method + "' mixes sample counts");
  result_.samples = static_cast<int>(samples.size());
  for (const auto& s : samples)
    if (s.num_frames() != truth.num_frames() || !(s.skeleton == truth.skeleton))
      throw std::invalid_argument("evaluation: continuation of '" + truth.id + "' does not match its ground truth");
  ++result_.windows;

  if (opt_.pck) {
    PckCurve c = expected_pck(samples, truth, opt_.thresholds, {}, opt_.normalizer);
    if (result_.pck)
      *result_.pck += c;
    else
      result_.pck = std::move(c);
  }
  if (opt_.classifier) {
    if (!truth.actions) throw std::invalid_argument("evaluation: ground truth '" + truth.id + "' has no labels");
    const int C = opt_.classifier->config().num_classes;
    const int true_major = majority_label(*truth.actions, C);
    AccuracyReport frames, seqs;
    for (const auto& s : samples) {
      const AccuracyReport r = forecast_accuracy(*opt_.classifier, *opt_.classifier_stats, observed, s, *truth.actions);
      merge(frames, r);
      // Predicted majority is the column with the most frames.
      std::vector<int> predicted;
      for (int p = 0; p < C; ++p) {
        long n = 0;
        for (int t = 0; t < C; ++t) n += r.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
        predicted.insert(predicted.end(), static_cast<std::size_t>(n), p);
      }
      const int major = majority_label(predicted, C);
      merge(seqs, score_predictions(std::vector<int>{major}, std::vector<int>{true_major}, C));
    }
    merge(result_.frame_accuracy ? *result_.frame_accuracy : result_.frame_accuracy.emplace(), frames);
    merge(result_.sequence_accuracy ? *result_.sequence_accuracy : result_.sequence_accuracy.emplace(), seqs);
  }
}

namespace {

std::string pck_metric(const MethodResult& m) { return m.samples > 1 ? "expected_pck" : "pck"; }

}  // namespace

std::string report_csv(const EvalReport& report) {
  std::string out = "method,metric,joint,time_s,threshold,value\n";
  auto row = [&](const std::string& method, const std::string& metric, const std::string& joint,
                 const std::string& time, const std::string& thr, double value) {
    out += method + ',' + metric + ',' + joint + ',' + time + ',' + thr + ',' + format_double(value) + '\n';
  };
  for (const auto& m : report.methods) {
    if (m.pck) {
      const PckCurve& c = *m.pck;
      if (static_cast<int>(report.joint_names.size()) != c.num_joints)
        throw std::invalid_argument("report: joint names do not match the curves");
      const std::string metric = pck_metric(m);
      for (std::size_t ti = 0; ti < c.times.size(); ++ti)
        for (std::size_t k = 0; k < c.thresholds.size(); ++k) {
          const std::string t = format_double(c.times[ti]), thr = format_double(c.thresholds[k]);
          for (int j = 0; j < c.num_joints; ++j)
            row(m.method, metric, report.joint_names[static_cast<std::size_t>(j)], t, thr,
                c.value(j, static_cast<int>(ti), static_cast<int>(k)));
          row(m.method, metric, "all", t, thr, c.pooled(static_cast<int>(ti), static_cast<int>(k)));
        }
      for (std::size_t k = 0; k < c.thresholds.size(); ++k)
        row(m.method, metric, "all", "all", format_double(c.thresholds[k]), c.pooled(static_cast<int>(k)));
    }
    if (m.frame_accuracy) row(m.method, "frame_accuracy", "all", "all", "", m.frame_accuracy->accuracy);
    if (m.sequence_accuracy) row(m.method, "sequence_accuracy", "all", "all", "", m.sequence_accuracy->accuracy);
  }
  return out;
}

json report_summary(const EvalReport& report) {
  json rows = json::array();
  for (const auto& m : report.methods) {
    json r{{"method", m.method}, {"samples", m.samples}, {"windows", m.windows}};
    r["frame_accuracy"] = m.frame_accuracy ? json(m.frame_accuracy->accuracy) : json(nullptr);
    r["sequence_accuracy"] = m.sequence_accuracy ? json(m.sequence_accuracy->accuracy) : json(nullptr);
    if (m.frame_accuracy) r["confusion"] = m.frame_accuracy->confusion;
    if (m.pck) {
      json by = json::object();
      for (std::size_t k = 0; k < m.pck->thresholds.size(); ++k)
        by[format_double(m.pck->thresholds[k])] = m.pck->pooled(static_cast<int>(k));
      r[pck_metric(m) + "_by_threshold"] = by;
    }
    rows.push_back(r);
  }
  return json{{"methods", rows}};
}

}  // namespace dmmpose
