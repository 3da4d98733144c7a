#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rissc/channel.hpp"
#include "rissc/ctensor.hpp"
#include "rissc/diffraction.hpp"
#include "rissc/modem.hpp"

namespace rissc {

/// Hardware bounds of one surface element: transmission gain confined to
/// [g_min_db, g_max_db], and optionally a phase grid of 2^phase_bits
/// states. No phase_bits means continuously adjustable phase.
struct ConstraintSpec {
  double g_min_db = -22.0;
  double g_max_db = 13.0;
  std::optional<unsigned> phase_bits;

  double g_min() const;
  double g_max() const;
  void validate() const;
};

/// One trainable surface: a complex transmission coefficient per meta-atom
/// plus the physical grid it lives on.
struct MetaAtomLayer {
  CTensor coeffs;  // rank-1, length geometry.atoms(), trainable
  ConstraintSpec constraints;
  Geometry geometry;
};

/// Fresh layer with unit-amplitude, uniformly random-phase coefficients.
MetaAtomLayer init_meta_atom_layer(const Geometry& geometry,
                                   const ConstraintSpec& constraints,
                                   std::mt19937_64& rng);

/// Field emitted by the layer: incident field times per-atom coefficient.
/// Accepts a rank-1 field or an [atoms x batch] matrix.
CTensor meta_forward(const MetaAtomLayer& layer, const CTensor& field_in);

/// Projects every coefficient onto the constraint set: amplitude clipped
/// into [g_min, g_max], phase snapped to the grid when quantization is
/// enabled. Amplitude-only violations are fixed by real scaling so the
/// phase is untouched. Idempotent: a second application is a bitwise
/// no-op.
void apply_constraints(MetaAtomLayer& layer);

/// modReLU: thresholds the magnitude, preserves the phase.
/// out = (|z| + b) * z/|z| where |z| + b > 0, else 0. `bias` is a real
/// rank-1 tensor of length rows(field), broadcast over batch columns.
CTensor modrelu(const CTensor& field, const CTensor& bias);

/// Complex 2-D cross-correlation. input [H x W x Cin], kernels
/// [k x k x Cin x Cout], zero padding. (H + 2*padding - k) must be
/// divisible by stride.
CTensor conv2d_complex(const CTensor& input, const CTensor& kernels,
                       std::size_t stride, std::size_t padding);

/// One step of a coder stack: trainable surface, fixed propagation to the
/// next plane, optional activation there.
struct StackStage {
  MetaAtomLayer layer;
  PropagationMatrix prop;
  bool activation = false;
  CTensor act_bias;  // real rank-1, length = prop destination atoms
};

/// Runs field_in through meta_forward -> propagation -> optional modReLU
/// for each stage. Errors name the failing stage.
CTensor stack_forward(const std::vector<StackStage>& stages,
                      const CTensor& field_in,
                      const std::string& label = "stack");

/// Two polarizations traversing the same physical plane independently:
/// no cross-terms. Both layers must share one geometry.
std::pair<CTensor, CTensor> dual_pol_forward(const MetaAtomLayer& layer_v,
                                             const MetaAtomLayer& layer_h,
                                             const CTensor& field_v,
                                             const CTensor& field_h);

/// Full transceiver: encoder stack, channel, decoder stack, modem.
struct SemanticModel {
  std::vector<StackStage> encoder;
  std::vector<StackStage> decoder;
  ModemSpec modem;
  ChannelSpec channel;
  double cr = 1.0;  // transmitted real dims / source real dims

  std::size_t input_dim() const;
  std::size_t tx_dim() const;      // encoder output atoms
  std::size_t output_dim() const;  // decoder output atoms

  /// Trainable tensors in a fixed order (per stage: coefficients, then
  /// activation bias when present; encoder before decoder). Propagation
  /// matrices are never included.
  std::vector<CTensor> parameters() const;
};

/// Architecture knobs shared by both coders.
struct ModelConfig {
  std::size_t coder_layers = 4;
  double frequency_hz = 25e9;
  double pitch_over_lambda = 0.5;
  double gap_over_lambda = 0.5;
  bool activation = true;
  bool energy_renorm = false;
  ConstraintSpec constraints;
};

/// Builds the transceiver for a source plane of input_rows x input_cols
/// atoms compressed to `tx_atoms` transmitted atoms. The decoder output
/// plane mirrors the input plane. Coefficients are seeded from `seed`.
SemanticModel build_semantic_model(const ModelConfig& cfg,
                                   std::size_t input_rows,
                                   std::size_t input_cols,
                                   std::size_t tx_atoms,
                                   const ModemSpec& modem,
                                   const ChannelSpec& channel,
                                   std::uint64_t seed);

/// Re-projects every layer with quantized phases (and the layer's gain
/// bounds): the evaluation-time hardware mode.
void apply_hardware_mode(SemanticModel& model, unsigned phase_bits);

}  // namespace rissc
