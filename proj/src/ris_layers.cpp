#include "rissc/ris_layers.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rissc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Projection targets sit a hair inside the dB bounds so that the
// amplitude recovered from the rewritten coefficient still satisfies the
// bounds and a second projection takes the no-op branch bit-exactly.
constexpr double kInsideMargin = 1e-14;
constexpr double kPhaseSnapTol = 1e-12;

double quantize_phase(double phi, unsigned bits) {
  const double states = std::ldexp(1.0, static_cast<int>(bits));  // 2^bits
  long long k = std::llround(phi * states / kTwoPi);
  const long long n = static_cast<long long>(states);
  k = ((k % n) + n) % n;
  return kTwoPi * static_cast<double>(k) / states;
}

std::size_t field_rows(const CTensor& field) { return field.shape()[0]; }
std::size_t field_cols(const CTensor& field) {
  return field.rank() == 2 ? field.shape()[1] : 1;
}

}  // namespace

double ConstraintSpec::g_min() const { return std::pow(10.0, g_min_db / 20.0); }
double ConstraintSpec::g_max() const { return std::pow(10.0, g_max_db / 20.0); }

void ConstraintSpec::validate() const {
  if (g_min_db >= g_max_db) {
    throw std::invalid_argument("ConstraintSpec: g_min_db must be below g_max_db");
  }
  if (phase_bits && *phase_bits < 1) {
    throw std::invalid_argument("ConstraintSpec: phase_bits must be >= 1");
  }
}

MetaAtomLayer init_meta_atom_layer(const Geometry& geometry,
                                   const ConstraintSpec& constraints,
                                   std::mt19937_64& rng) {
  constraints.validate();
  const std::size_t n = geometry.atoms();
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::vector<double> re(n), im(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = phase(rng);
    re[i] = std::cos(phi);
    im[i] = std::sin(phi);
  }
  MetaAtomLayer layer;
  layer.coeffs = CTensor::from_parts({n}, std::move(re), std::move(im));
  layer.coeffs.set_requires_grad(true);
  layer.constraints = constraints;
  layer.geometry = geometry;
  return layer;
}

CTensor meta_forward(const MetaAtomLayer& layer, const CTensor& field_in) {
  if (field_rows(field_in) != layer.coeffs.size()) {
    throw std::invalid_argument(
        "meta_forward: layer has " + std::to_string(layer.coeffs.size()) +
        " atoms, field has " + std::to_string(field_rows(field_in)) + " rows");
  }
  return scale_columns(layer.coeffs, field_in);
}

void apply_constraints(MetaAtomLayer& layer) {
  const double g_min = layer.constraints.g_min();
  const double g_max = layer.constraints.g_max();
  const double lo_target = g_min * (1.0 + kInsideMargin);
  const double hi_target = g_max * (1.0 - kInsideMargin);
  const auto bits = layer.constraints.phase_bits;

  auto re = layer.coeffs.values_re();
  auto im = layer.coeffs.values_im();
  for (std::size_t i = 0; i < re.size(); ++i) {
    const double a = std::hypot(re[i], im[i]);
    const double phi = std::atan2(im[i], re[i]);

    const bool amp_ok = a >= g_min && a <= g_max;
    double phi_q = phi;
    bool phase_ok = true;
    if (bits) {
      phi_q = quantize_phase(phi, *bits);
      phase_ok = std::abs(std::remainder(phi - phi_q, kTwoPi)) <= kPhaseSnapTol;
    }
    if (amp_ok && phase_ok) continue;

    if (phase_ok) {
      // amplitude-only violation: real rescale keeps the phase untouched
      if (a == 0.0) {
        re[i] = lo_target;
        im[i] = 0.0;
      } else {
        const double s = std::clamp(a, lo_target, hi_target) / a;
        re[i] *= s;
        im[i] *= s;
      }
    } else {
      const double a_new = std::clamp(a, lo_target, hi_target);
      re[i] = a_new * std::cos(phi_q);
      im[i] = a_new * std::sin(phi_q);
    }
  }
}

CTensor modrelu(const CTensor& field, const CTensor& bias) {
  const std::size_t rows = field_rows(field);
  const std::size_t cols = field_cols(field);
  if (bias.rank() != 1 || bias.size() != rows) {
    throw std::invalid_argument("modrelu: bias must be rank 1 of length " +
                                std::to_string(rows));
  }
  const std::size_t n = field.size();
  std::vector<double> re(n), im(n);
  const auto xr = field.re(), xi = field.im(), br = bias.re();
  for (std::size_t i = 0; i < rows; ++i) {
    const double b = br[i];
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t idx = i * cols + c;
      const double r = std::hypot(xr[idx], xi[idx]);
      const double m = r + b;
      if (r > 0.0 && m > 0.0) {
        const double s = m / r;
        re[idx] = s * xr[idx];
        im[idx] = s * xi[idx];
      } else {
        re[idx] = 0.0;
        im[idx] = 0.0;
      }
    }
  }
  CTensor out = CTensor::from_parts(field.shape(), std::move(re), std::move(im));
  const bool track = field.requires_grad() || bias.requires_grad();
  out.set_requires_grad(track);
  if (track && Tape::active()) {
    Tape::active()->record([field, bias, out, rows, cols] {
      const auto gr = out.grad_re(), gi = out.grad_im();
      const auto xr = field.re(), xi = field.im(), br = bias.re();
      const bool wants_field = field.requires_grad();
      const bool wants_bias = bias.requires_grad();
      auto gxr = wants_field ? field.grad_re() : std::span<double>{};
      auto gxi = wants_field ? field.grad_im() : std::span<double>{};
      auto gbr = wants_bias ? bias.grad_re() : std::span<double>{};
      for (std::size_t i = 0; i < rows; ++i) {
        const double b = br[i];
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t idx = i * cols + c;
          const double r = std::hypot(xr[idx], xi[idx]);
          if (r == 0.0 || r + b <= 0.0) continue;
          const double zr = xr[idx], zi = xi[idx];
          if (wants_field) {
            // w = z + b*z/r: dw/dz = 1 + b/(2r), dw/dz* = -b*z^2/(2r^3)
            const double a_term = 1.0 + b / (2.0 * r);
            const double c_term = -b / (2.0 * r * r * r);
            const double z2r = zr * zr - zi * zi;
            const double z2i = 2.0 * zr * zi;
            // conj(g) * z^2
            const double cg_r = gr[idx] * z2r + gi[idx] * z2i;
            const double cg_i = gr[idx] * z2i - gi[idx] * z2r;
            gxr[idx] += c_term * cg_r + a_term * gr[idx];
            gxi[idx] += c_term * cg_i + a_term * gi[idx];
          }
          if (wants_bias) {
            gbr[i] += (gr[idx] * zr + gi[idx] * zi) / r;
          }
        }
      }
    });
  }
  return out;
}

CTensor conv2d_complex(const CTensor& input, const CTensor& kernels,
                       std::size_t stride, std::size_t padding) {
  if (input.rank() != 3 || kernels.rank() != 4) {
    throw std::invalid_argument("conv2d_complex: input must be [H x W x Cin], "
                                "kernels [k x k x Cin x Cout]");
  }
  if (stride < 1) throw std::invalid_argument("conv2d_complex: stride must be >= 1");
  const std::size_t h = input.shape()[0], w = input.shape()[1];
  const std::size_t cin = input.shape()[2];
  const std::size_t k = kernels.shape()[0];
  if (kernels.shape()[1] != k || kernels.shape()[2] != cin) {
    throw std::invalid_argument("conv2d_complex: kernel shape inconsistent with input");
  }
  const std::size_t cout = kernels.shape()[3];
  if (h + 2 * padding < k || w + 2 * padding < k) {
    throw std::invalid_argument("conv2d_complex: kernel larger than padded input");
  }
  if ((h + 2 * padding - k) % stride != 0 || (w + 2 * padding - k) % stride != 0) {
    throw std::invalid_argument("conv2d_complex: padded extent minus kernel size "
                                "must be divisible by stride");
  }
  const std::size_t ho = (h + 2 * padding - k) / stride + 1;
  const std::size_t wo = (w + 2 * padding - k) / stride + 1;

  const auto xr = input.re(), xi = input.im(), kr = kernels.re(), ki = kernels.im();
  auto in_idx = [w, cin](std::size_t y, std::size_t x, std::size_t c) {
    return (y * w + x) * cin + c;
  };
  auto ker_idx = [k, cin, cout](std::size_t u, std::size_t v, std::size_t c,
                                std::size_t o) {
    return ((u * k + v) * cin + c) * cout + o;
  };
  auto out_idx = [wo, cout](std::size_t y, std::size_t x, std::size_t o) {
    return (y * wo + x) * cout + o;
  };

  std::vector<double> re(ho * wo * cout, 0.0), im(ho * wo * cout, 0.0);
  for (std::size_t oy = 0; oy < ho; ++oy) {
    for (std::size_t ox = 0; ox < wo; ++ox) {
      for (std::size_t u = 0; u < k; ++u) {
        const long long y = static_cast<long long>(oy * stride + u) -
                            static_cast<long long>(padding);
        if (y < 0 || y >= static_cast<long long>(h)) continue;
        for (std::size_t v = 0; v < k; ++v) {
          const long long x = static_cast<long long>(ox * stride + v) -
                              static_cast<long long>(padding);
          if (x < 0 || x >= static_cast<long long>(w)) continue;
          for (std::size_t c = 0; c < cin; ++c) {
            const std::size_t ii = in_idx(y, x, c);
            const double vr = xr[ii], vi = xi[ii];
            for (std::size_t o = 0; o < cout; ++o) {
              const std::size_t kk = ker_idx(u, v, c, o);
              const std::size_t oo = out_idx(oy, ox, o);
              re[oo] += vr * kr[kk] - vi * ki[kk];
              im[oo] += vr * ki[kk] + vi * kr[kk];
            }
          }
        }
      }
    }
  }
  CTensor out = CTensor::from_parts({ho, wo, cout}, std::move(re), std::move(im));
  const bool track = input.requires_grad() || kernels.requires_grad();
  out.set_requires_grad(track);
  if (track && Tape::active()) {
    Tape::active()->record([input, kernels, out, stride, padding, h, w, cin, k,
                            cout, ho, wo, in_idx, ker_idx, out_idx] {
      const auto gr = out.grad_re(), gi = out.grad_im();
      const auto xr = input.re(), xi = input.im();
      const auto kr = kernels.re(), ki = kernels.im();
      const bool wants_in = input.requires_grad();
      const bool wants_ker = kernels.requires_grad();
      auto gxr = wants_in ? input.grad_re() : std::span<double>{};
      auto gxi = wants_in ? input.grad_im() : std::span<double>{};
      auto gkr = wants_ker ? kernels.grad_re() : std::span<double>{};
      auto gki = wants_ker ? kernels.grad_im() : std::span<double>{};
      for (std::size_t oy = 0; oy < ho; ++oy) {
        for (std::size_t ox = 0; ox < wo; ++ox) {
          for (std::size_t u = 0; u < k; ++u) {
            const long long y = static_cast<long long>(oy * stride + u) -
                                static_cast<long long>(padding);
            if (y < 0 || y >= static_cast<long long>(h)) continue;
            for (std::size_t v = 0; v < k; ++v) {
              const long long x = static_cast<long long>(ox * stride + v) -
                                  static_cast<long long>(padding);
              if (x < 0 || x >= static_cast<long long>(w)) continue;
              for (std::size_t c = 0; c < cin; ++c) {
                const std::size_t ii = in_idx(y, x, c);
                for (std::size_t o = 0; o < cout; ++o) {
                  const std::size_t kk = ker_idx(u, v, c, o);
                  const std::size_t oo = out_idx(oy, ox, o);
                  if (wants_in) {
                    // g * conj(kernel)
                    gxr[ii] += gr[oo] * kr[kk] + gi[oo] * ki[kk];
                    gxi[ii] += gi[oo] * kr[kk] - gr[oo] * ki[kk];
                  }
                  if (wants_ker) {
                    // g * conj(input)
                    gkr[kk] += gr[oo] * xr[ii] + gi[oo] * xi[ii];
                    gki[kk] += gi[oo] * xr[ii] - gr[oo] * xi[ii];
                  }
                }
              }
            }
          }
        }
      }
    });
  }
  return out;
}

CTensor stack_forward(const std::vector<StackStage>& stages,
                      const CTensor& field_in, const std::string& label) {
  CTensor field = field_in;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const StackStage& stage = stages[s];
    const std::string where = label + " stage " + std::to_string(s);
    if (field_rows(field) != stage.layer.coeffs.size()) {
      throw std::invalid_argument(where + ": layer expects " +
                                  std::to_string(stage.layer.coeffs.size()) +
                                  " atoms, field has " +
                                  std::to_string(field_rows(field)) + " rows");
    }
    field = meta_forward(stage.layer, field);
    if (stage.prop.w.shape()[1] != field_rows(field)) {
      throw std::invalid_argument(
          where + ": propagation expects " +
          std::to_string(stage.prop.w.shape()[1]) + " source atoms, field has " +
          std::to_string(field_rows(field)) + " rows");
    }
    field = matmul(stage.prop.w, field);
    if (stage.activation) {
      if (stage.act_bias.size() != field_rows(field)) {
        throw std::invalid_argument(where + ": activation bias length " +
                                    std::to_string(stage.act_bias.size()) +
                                    " does not match " +
                                    std::to_string(field_rows(field)) + " atoms");
      }
      field = modrelu(field, stage.act_bias);
    }
  }
  return field;
}

std::pair<CTensor, CTensor> dual_pol_forward(const MetaAtomLayer& layer_v,
                                             const MetaAtomLayer& layer_h,
                                             const CTensor& field_v,
                                             const CTensor& field_h) {
  const Geometry& a = layer_v.geometry;
  const Geometry& b = layer_h.geometry;
  if (a.rows != b.rows || a.cols != b.cols || a.pitch != b.pitch || a.z != b.z) {
    throw std::invalid_argument("dual_pol_forward: polarization layers must share one geometry");
  }
  return {meta_forward(layer_v, field_v), meta_forward(layer_h, field_h)};
}

// -- model assembly -----------------------------------------------------------

std::size_t SemanticModel::input_dim() const {
  return encoder.front().layer.coeffs.size();
}
std::size_t SemanticModel::tx_dim() const {
  return encoder.back().prop.w.shape()[0];
}
std::size_t SemanticModel::output_dim() const {
  return decoder.back().prop.w.shape()[0];
}

std::vector<CTensor> SemanticModel::parameters() const {
  std::vector<CTensor> params;
  for (const auto* half : {&encoder, &decoder}) {
    for (const StackStage& stage : *half) {
      params.push_back(stage.layer.coeffs);
      if (stage.activation) params.push_back(stage.act_bias);
    }
  }
  return params;
}

namespace {

// Near-square factorization for intermediate planes.
std::pair<std::size_t, std::size_t> plane_grid(std::size_t atoms) {
  std::size_t rows = static_cast<std::size_t>(std::sqrt(static_cast<double>(atoms)));
  while (rows > 1 && atoms % rows != 0) --rows;
  return {rows, atoms / rows};
}

CTensor make_bias(std::size_t n) {
  CTensor bias = CTensor::zeros({n});
  bias.set_requires_grad(true);
  return bias;
}

// Chain of `layers` surfaces from the in_geom plane to an out_atoms plane.
// Hidden planes use hidden_grid; planes advance by `gap`.
std::vector<StackStage> build_coder(const ModelConfig& cfg, Geometry in_geom,
                                    std::pair<std::size_t, std::size_t> hidden_grid,
                                    std::size_t out_atoms, double wavelength,
                                    double pitch, double gap,
                                    std::mt19937_64& rng) {
  std::vector<StackStage> stages;
  Geometry current = in_geom;
  for (std::size_t s = 0; s < cfg.coder_layers; ++s) {
    const bool last = s + 1 == cfg.coder_layers;
    Geometry next;
    if (last) {
      const auto [r, c] = plane_grid(out_atoms);
      next = make_geometry(r, c, pitch, current.z + gap);
    } else {
      next = make_geometry(hidden_grid.first, hidden_grid.second, pitch,
                           current.z + gap);
    }
    StackStage stage;
    stage.layer = init_meta_atom_layer(current, cfg.constraints, rng);
    stage.prop = rs_kernel(current, next, wavelength, cfg.energy_renorm);
    stage.activation = cfg.activation && !last;
    if (stage.activation) stage.act_bias = make_bias(next.atoms());
    stages.push_back(std::move(stage));
    current = next;
  }
  return stages;
}

}  // namespace

SemanticModel build_semantic_model(const ModelConfig& cfg,
                                   std::size_t input_rows,
                                   std::size_t input_cols,
                                   std::size_t tx_atoms,
                                   const ModemSpec& modem,
                                   const ChannelSpec& channel,
                                   std::uint64_t seed) {
  if (cfg.coder_layers < 1) {
    throw std::invalid_argument("build_semantic_model: need at least one layer per coder");
  }
  if (cfg.frequency_hz <= 0.0) {
    throw std::invalid_argument("build_semantic_model: frequency must be positive");
  }
  cfg.constraints.validate();
  modem.validate();
  const std::size_t source_dims = input_rows * input_cols;
  if (tx_atoms >= source_dims) {
    throw std::invalid_argument("build_semantic_model: encoder output (" +
                                std::to_string(tx_atoms) +
                                " atoms) must be smaller than its input (" +
                                std::to_string(source_dims) + ")");
  }
  if (tx_atoms < 1) {
    throw std::invalid_argument("build_semantic_model: encoder output must be nonempty");
  }

  const double wavelength = kSpeedOfLight / cfg.frequency_hz;
  const double pitch = cfg.pitch_over_lambda * wavelength;
  const double gap = cfg.gap_over_lambda * wavelength;

  std::mt19937_64 rng(seed);
  const Geometry source_plane = make_geometry(input_rows, input_cols, pitch, 0.0);
  const auto [tx_rows, tx_cols] = plane_grid(tx_atoms);
  const Geometry tx_plane = make_geometry(tx_rows, tx_cols, pitch, 0.0);

  SemanticModel model;
  // Encoder narrows only at its final plane; decoder widens right after
  // the receive plane so its trainable surfaces act on full-size fields.
  model.encoder = build_coder(cfg, source_plane, {input_rows, input_cols},
                              tx_atoms, wavelength, pitch, gap, rng);
  model.decoder = build_coder(cfg, tx_plane, {input_rows, input_cols},
                              source_dims, wavelength, pitch, gap, rng);
  model.modem = modem;
  model.channel = channel;
  model.cr = static_cast<double>(tx_atoms) / static_cast<double>(source_dims);
  return model;
}

void apply_hardware_mode(SemanticModel& model, unsigned phase_bits) {
  for (auto* half : {&model.encoder, &model.decoder}) {
    for (StackStage& stage : *half) {
      stage.layer.constraints.phase_bits = phase_bits;
      apply_constraints(stage.layer);
    }
  }
}

}  // namespace rissc
