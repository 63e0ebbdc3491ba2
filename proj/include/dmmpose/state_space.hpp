#pragma once

#include "dmmpose/autodiff.hpp"
#include "dmmpose/gaussian.hpp"
#include "dmmpose/params.hpp"
#include "dmmpose/tensor.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmmpose {

// Sequences are processed time-major: x[t] holds frame t of every sequence in
// the batch as a (batch x F) tensor.
using TimeBatch = std::vector<Tensor>;

// Splits a (T x F) sequence into T rows, each repeated `copies` times.
TimeBatch time_major(const Tensor& seq, Eigen::Index copies = 1);
// Stacks equally long (T x F) sequences into a T-step batch.
TimeBatch time_major(std::span<const Tensor> seqs);
// eps[t] of shape (rows x dim) for t < steps, drawn in time order.
TimeBatch draw_noise(std::size_t steps, Eigen::Index rows, Eigen::Index dim, Rng& rng);

// Approximate posterior path: q_t and the reparametrized sample z_t per step.
struct LatentPath {
  std::vector<GaussianVar> posteriors;
  std::vector<Var> samples;
};

// A state-space model with Gaussian prior, transition and emission, plus an
// inference network. The ELBO, training loop and forecaster are written
// against this interface only.
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;

  virtual Eigen::Index latent_dim() const = 0;
  virtual Eigen::Index feature_dim() const = 0;

  virtual ParamSet& generative() = 0;
  virtual const ParamSet& generative() const = 0;
  virtual ParamSet& inference() = 0;
  virtual const ParamSet& inference() const = 0;

  // p(z_1), one row per sequence.
  virtual GaussianVar initial_prior(Tape& tape, Eigen::Index rows) const = 0;
  // p(z_t | z_{t-1}), batched over rows of z_prev.
  virtual GaussianVar transition(Tape& tape, Var z_prev) const = 0;
  // p(x_t | z_t), batched over rows of z.
  virtual GaussianVar emission(Tape& tape, Var z) const = 0;
  // q(z_1 | x_{1:T}) and q(z_t | z_{t-1}, x_{t:T}), sampled with eps.
  virtual LatentPath infer(Tape& tape, std::span<const Tensor> x,
                           std::span<const Tensor> eps) const = 0;
};

// Scalar ELBO components on the tape, summed over batch rows and time.
struct ElboTerms {
  Var reconstruction;
  Var kl_initial;
  Var kl_transitions;
  Var objective;  // reconstruction - kl_weight * (kl_initial + kl_transitions)
};

ElboTerms elbo_terms(Tape& tape, const StateSpaceModel& model, std::span<const Tensor> x,
                     std::span<const Tensor> eps, double kl_weight);

struct ElboBreakdown {
  double reconstruction = 0.0;
  double kl_initial = 0.0;
  double kl_transitions = 0.0;
  double kl_weight = 1.0;
  double total = 0.0;
  double per_frame = 0.0;
  int frames = 0;
};

// Single-sample estimate for one (T x F) sequence with eps of shape (T x Z).
ElboBreakdown elbo(const StateSpaceModel& model, const Tensor& features, const Tensor& eps,
                   double kl_weight = 1.0);

struct TrainConfig {
  int epochs = 10;
  int batch_size = 8;
  int window = 100;               // frames per training crop
  int samples_per_sequence = 1;   // independent eps streams per crop
  double learning_rate = 1e-3;
  double clip_norm = 10.0;
  int kl_warmup_steps = 5000;     // 0 disables annealing
  std::uint64_t seed = 0;
  bool train_generative = true;
  bool train_inference = true;
};

struct TrainLogRow {
  int epoch = 0;
  long step = 0;            // optimizer steps taken so far
  double kl_weight = 0.0;   // at the last step of the epoch
  double elbo_per_frame = 0.0;
  double objective_per_frame = 0.0;
  double reconstruction_per_frame = 0.0;
  double kl_per_frame = 0.0;
};

using TrainLog = std::vector<TrainLogRow>;

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double kl_weight_at(long step, int warmup_steps);

// Minibatch ELBO ascent over random crops of the (T x F) sequences. Crops are
// min(window, shortest sequence) frames long. Throws TrainingError on a
// non-finite loss.
TrainLog train(StateSpaceModel& model, std::span<const Tensor> dataset, const TrainConfig& cfg,
               const std::function<void(const TrainLogRow&)>& on_epoch = {});

struct ForecastOptions {
  int horizon = 75;
  int samples = 5;
  std::uint64_t seed = 0;
  bool sample_emission = false;
};

// S continuations of length H. Each sample draws its own posterior path over
// the observed frames, takes its final latent and rolls the transition
// forward; frames are emission means unless sample_emission is set.
std::vector<Tensor> forecast(const StateSpaceModel& model, const Tensor& observed,
                             const ForecastOptions& opt);

}  // namespace dmmpose
