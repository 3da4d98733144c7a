#pragma once

#include <cstdint>
#include <numbers>
#include <vector>

#include "rissc/ctensor.hpp"

namespace rissc {

enum class ModemMode { AM, PM };

/// How digital values in [0,1] ride on the carrier field: either on the
/// amplitude (AM, amplitudes in [a_min, a_max]) or on the phase (PM, unit
/// amplitude, phases in [phase_lo, phase_hi]). The PM span stays strictly
/// below a full circle so the map is invertible.
struct ModemSpec {
  ModemMode mode = ModemMode::AM;
  double a_min = 0.1;
  double a_max = 1.0;
  double phase_lo = 0.0;
  double phase_hi = std::numbers::pi;

  double phase_span() const { return phase_hi - phase_lo; }
  void validate() const;
};

/// Linear map of 0..255 integer pixels onto [0,1]. Out-of-range input is
/// an error.
std::vector<double> normalize_source(const std::vector<int>& pixels);

/// Maps source values in [0,1] onto a complex field of the given shape
/// (defaults to rank-1). Values outside [0,1] are an error.
CTensor modulate(const ModemSpec& spec, const std::vector<double>& source,
                 std::vector<std::size_t> shape = {});

/// Reads the modulated dimension back out of a field: amplitude for AM,
/// unwrapped phase for PM, linearly mapped and clamped into [0,1].
/// Differentiable; the result is a real-valued tensor.
CTensor demodulate(const ModemSpec& spec, const CTensor& field);

/// Convenience: demodulate and extract plain values.
std::vector<double> demodulate_values(const ModemSpec& spec, const CTensor& field);

}  // namespace rissc
