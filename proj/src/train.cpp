#include "rissc/train.hpp"

#include <cmath>
#include <stdexcept>

#include "rissc/channel.hpp"
#include "rissc/metrics.hpp"
#include "rissc/modem.hpp"

namespace rissc {

SnrPolicy SnrPolicy::fixed(double db) {
  SnrPolicy p;
  p.kind = Kind::Fixed;
  p.fixed_db = db;
  return p;
}

SnrPolicy SnrPolicy::uniform(double lo_db, double hi_db) {
  if (lo_db > hi_db) {
    throw std::invalid_argument("SnrPolicy::uniform: lo_db > hi_db");
  }
  SnrPolicy p;
  p.kind = Kind::UniformRandom;
  p.lo_db = lo_db;
  p.hi_db = hi_db;
  return p;
}

std::string SnrPolicy::describe() const {
  if (kind == Kind::Fixed) return format_double(fixed_db);
  return "uniform[" + format_double(lo_db) + "," + format_double(hi_db) + "]";
}

double pick_train_snr(const SnrPolicy& policy, std::mt19937_64& rng) {
  if (policy.kind == SnrPolicy::Kind::Fixed) return policy.fixed_db;
  if (policy.lo_db > policy.hi_db) {
    throw std::invalid_argument("pick_train_snr: lo_db > hi_db");
  }
  std::uniform_real_distribution<double> dist(policy.lo_db, policy.hi_db);
  return dist(rng);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (lr0 <= 0.0 && epochs > 0 && lr0 != 0.0) {
    throw std::invalid_argument("TrainConfig: lr0 must be nonnegative");
  }
  for (std::size_t i = 0; i + 1 < lr_drop_epochs.size(); ++i) {
    if (lr_drop_epochs[i] >= lr_drop_epochs[i + 1]) {
      throw std::invalid_argument("TrainConfig: lr_drop_epochs must be strictly increasing");
    }
  }
  for (std::size_t drop : lr_drop_epochs) {
    if (drop >= epochs) {
      throw std::invalid_argument("TrainConfig: lr drop epoch " +
                                  std::to_string(drop) + " is outside " +
                                  std::to_string(epochs) + " epochs");
    }
  }
}

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch) {
  if (epoch >= cfg.epochs) {
    throw std::invalid_argument("lr_at_epoch: epoch " + std::to_string(epoch) +
                                " outside 0.." + std::to_string(cfg.epochs) + ")");
  }
  std::size_t drops = 0;
  for (std::size_t drop : cfg.lr_drop_epochs) {
    if (drop <= epoch) ++drops;
  }
  return cfg.lr0 * std::pow(cfg.lr_factor, static_cast<double>(drops));
}

CTensor mse_loss(const CTensor& estimate, const CTensor& target) {
  if (!estimate.same_shape(target)) {
    throw std::invalid_argument("mse_loss: shape mismatch");
  }
  const std::size_t n = estimate.size();
  if (n == 0) throw std::invalid_argument("mse_loss: empty tensors");
  const auto er = estimate.re(), tr = target.re();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = er[i] - tr[i];
    acc += d * d;
  }
  CTensor out = CTensor::from_parts({1}, {acc / static_cast<double>(n)}, {0.0});
  out.set_requires_grad(estimate.requires_grad());
  if (estimate.requires_grad() && Tape::active()) {
    Tape::active()->record([estimate, target, out, n] {
      const double g = out.grad_re()[0];
      const auto er = estimate.re(), tr = target.re();
      auto ger = estimate.grad_re();
      const double scale = 2.0 * g / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        ger[i] += scale * (er[i] - tr[i]);
      }
    });
  }
  return out;
}

double mse_loss(const std::vector<double>& estimate,
                const std::vector<double>& target) {
  if (estimate.size() != target.size()) {
    throw std::invalid_argument("mse_loss: length mismatch");
  }
  if (estimate.empty()) throw std::invalid_argument("mse_loss: empty vectors");
  double acc = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(estimate.size());
}

// -- Adam ---------------------------------------------------------------------

AdamState::AdamState(double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamState::step(const std::vector<CTensor>& params, double lr) {
  if (lr <= 0.0 && lr != 0.0) throw std::invalid_argument("AdamState::step: bad lr");
  if (moments_.empty()) {
    moments_.resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      const std::size_t n = params[p].size();
      moments_[p].m_re.assign(n, 0.0);
      moments_[p].m_im.assign(n, 0.0);
      moments_[p].v_re.assign(n, 0.0);
      moments_[p].v_im.assign(n, 0.0);
    }
  }
  if (moments_.size() != params.size()) {
    throw std::invalid_argument("AdamState::step: parameter list changed size");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    const CTensor& param = params[p];
    Moments& mom = moments_[p];
    if (mom.m_re.size() != param.size()) {
      throw std::invalid_argument("AdamState::step: parameter shape changed");
    }
    auto re = param.values_re();
    auto im = param.values_im();
    const auto gre = param.grad_re();
    const auto gim = param.grad_im();
    for (std::size_t i = 0; i < param.size(); ++i) {
      mom.m_re[i] = beta1_ * mom.m_re[i] + (1.0 - beta1_) * gre[i];
      mom.v_re[i] = beta2_ * mom.v_re[i] + (1.0 - beta2_) * gre[i] * gre[i];
      re[i] -= lr * (mom.m_re[i] / bc1) / (std::sqrt(mom.v_re[i] / bc2) + eps_);

      mom.m_im[i] = beta1_ * mom.m_im[i] + (1.0 - beta1_) * gim[i];
      mom.v_im[i] = beta2_ * mom.v_im[i] + (1.0 - beta2_) * gim[i] * gim[i];
      im[i] -= lr * (mom.m_im[i] / bc1) / (std::sqrt(mom.v_im[i] / bc2) + eps_);
    }
  }
}

void optimizer_step(SemanticModel& model, AdamState& state, double lr) {
  state.step(model.parameters(), lr);
  for (auto* half : {&model.encoder, &model.decoder}) {
    for (StackStage& stage : *half) apply_constraints(stage.layer);
  }
}

// -- training loop ----------------------------------------------------------------

PipelineOutput pipeline_forward(const SemanticModel& model,
                                const std::vector<double>& source,
                                std::vector<std::size_t> shape, double snr_db,
                                std::mt19937_64& noise_rng) {
  PipelineOutput out;
  CTensor field = modulate(model.modem, source, std::move(shape));
  out.tx = stack_forward(model.encoder, field, "encoder");
  CTensor rx = awgn(out.tx, snr_db, noise_rng);
  CTensor decoded = stack_forward(model.decoder, rx, "decoder");
  out.demod = demodulate(model.modem, decoded);
  return out;
}

FitResult fit(SemanticModel& model, const std::vector<ImageItem>& items,
              const TrainConfig& cfg, const CheckpointSink& sink) {
  cfg.validate();
  if (items.empty()) throw std::invalid_argument("fit: no training items");
  const std::size_t dims = items.front().dims();
  if (dims != model.input_dim()) {
    throw std::invalid_argument("fit: items have " + std::to_string(dims) +
                                " values, model input plane has " +
                                std::to_string(model.input_dim()) + " atoms");
  }
  if (model.output_dim() != dims) {
    throw std::invalid_argument("fit: model output plane has " +
                                std::to_string(model.output_dim()) +
                                " atoms, items have " + std::to_string(dims));
  }
  for (const ImageItem& item : items) {
    if (item.dims() != dims) {
      throw std::invalid_argument("fit: items have mixed sizes");
    }
  }

  // normalized sources in surface order, one per item
  std::vector<std::vector<double>> sources(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    sources[i] = normalize_source(tile_pixels(items[i]));
  }

  Batcher batcher(items.size(), cfg.batch_size, cfg.seed);
  std::mt19937_64 snr_rng(cfg.seed ^ 0xA5A5A5A55A5A5A5AULL);
  std::mt19937_64 noise_rng(cfg.seed ^ 0xC3C3C3C33C3C3C3CULL);
  AdamState adam;
  FitResult result;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    double loss_sum = 0.0;
    double snr_sum = 0.0;
    std::size_t n_seen = 0;
    const auto batches = batcher.epoch_batches(epoch);
    for (const auto& batch : batches) {
      const std::size_t b = batch.size();
      std::vector<double> source(dims * b);
      std::vector<double> target(dims * b);
      for (std::size_t col = 0; col < b; ++col) {
        const auto& src = sources[batch[col]];
        for (std::size_t i = 0; i < dims; ++i) {
          source[i * b + col] = src[i];
          target[i * b + col] = src[i];
        }
      }
      const double snr_db = pick_train_snr(cfg.snr_policy, snr_rng);
      snr_sum += snr_db;

      Tape tape;
      PipelineOutput fwd =
          pipeline_forward(model, source, {dims, b}, snr_db, noise_rng);
      CTensor target_t = CTensor::from_real({dims, b}, target);
      CTensor loss = mse_loss(fwd.demod, target_t);
      const double loss_value = loss.re()[0];
      if (!std::isfinite(loss_value)) {
        throw std::runtime_error("fit: non-finite loss at epoch " +
                                 std::to_string(epoch) + " (lr " +
                                 format_double(lr) + ", snr " +
                                 format_double(snr_db) + " dB)");
      }
      tape.backward(loss);
      optimizer_step(model, adam, lr);
      for (const CTensor& p : model.parameters()) p.zero_grad();

      loss_sum += loss_value * static_cast<double>(b);
      n_seen += b;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(n_seen);
    stats.lr = lr;
    stats.snr_sample_mean = snr_sum / static_cast<double>(batches.size());
    result.history.push_back(stats);

    if (sink && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 &&
        epoch + 1 != cfg.epochs) {
      sink(epoch + 1, model);
    }
  }
  if (sink) sink(cfg.epochs, model);
  return result;
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::string csv = "epoch,mean_loss,lr,snr_policy_sample_mean\n";
  for (const EpochStats& row : history) {
    csv += std::to_string(row.epoch) + "," + format_double(row.mean_loss) + "," +
           format_double(row.lr) + "," + format_double(row.snr_sample_mean) + "\n";
  }
  return csv;
}

}  // namespace rissc
