#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rissc/ctensor.hpp"
#include "rissc/data.hpp"
#include "rissc/ris_layers.hpp"

namespace rissc {

/// Channel SNR used while training: a constant, or a fresh uniform draw
/// per batch.
struct SnrPolicy {
  enum class Kind { Fixed, UniformRandom };
  Kind kind = Kind::Fixed;
  double fixed_db = 19.0;
  double lo_db = 0.0;
  double hi_db = 20.0;

  static SnrPolicy fixed(double db);
  static SnrPolicy uniform(double lo_db, double hi_db);
  std::string describe() const;
};

double pick_train_snr(const SnrPolicy& policy, std::mt19937_64& rng);

struct TrainConfig {
  std::size_t epochs = 400;
  std::size_t batch_size = 128;
  double lr0 = 1e-3;
  std::vector<std::size_t> lr_drop_epochs = {150, 250, 350};
  double lr_factor = 0.1;
  SnrPolicy snr_policy;
  std::uint64_t seed = 1;
  double cr_target = 1.0 / 6.0;
  std::size_t checkpoint_every = 25;

  void validate() const;
};

/// lr0 * lr_factor^(number of drop epochs <= epoch).
double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch);

/// Mean squared difference of two real-valued tensors. Differentiable in
/// `estimate`; returns a real scalar.
CTensor mse_loss(const CTensor& estimate, const CTensor& target);
double mse_loss(const std::vector<double>& estimate,
                const std::vector<double>& target);

/// Adam with per-component moments: the real and imaginary parts of every
/// parameter are updated independently.
class AdamState {
 public:
  AdamState(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Applies one update from the parameters' accumulated gradients.
  /// Gradients are left untouched (callers zero them).
  void step(const std::vector<CTensor>& params, double lr);

  std::size_t step_count() const { return step_; }

 private:
  struct Moments {
    std::vector<double> m_re, m_im, v_re, v_im;
  };
  double beta1_, beta2_, eps_;
  std::size_t step_ = 0;
  std::vector<Moments> moments_;  // parallel to the param list
};

/// Optimizer step followed by the hardware projection of every layer.
void optimizer_step(SemanticModel& model, AdamState& state, double lr);

/// One pass through the transceiver: modulate -> encoder -> AWGN channel
/// -> decoder -> demodulate. `source` holds [0,1] values in surface
/// order; shape {atoms} or {atoms, batch}.
struct PipelineOutput {
  CTensor tx;      // encoder output entering the channel
  CTensor demod;   // real-valued estimates in [0,1]
};
PipelineOutput pipeline_forward(const SemanticModel& model,
                                const std::vector<double>& source,
                                std::vector<std::size_t> shape, double snr_db,
                                std::mt19937_64& noise_rng);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
  double snr_sample_mean = 0.0;
};

struct FitResult {
  std::vector<EpochStats> history;
};

/// Called at the checkpoint cadence and once after the last epoch.
using CheckpointSink = std::function<void(std::size_t epoch, const SemanticModel&)>;

/// End-to-end training loop. Items must match the model's input plane
/// (h * w * c == input_dim). Deterministic for a fixed seed.
FitResult fit(SemanticModel& model, const std::vector<ImageItem>& items,
              const TrainConfig& cfg, const CheckpointSink& sink = nullptr);

/// CSV with header epoch,mean_loss,lr,snr_policy_sample_mean.
std::string history_csv(const std::vector<EpochStats>& history);

}  // namespace rissc
