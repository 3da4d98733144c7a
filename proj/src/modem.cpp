#include "rissc/modem.hpp"

#include <cmath>
#include <stdexcept>

namespace rissc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void ModemSpec::validate() const {
  if (a_min >= a_max) {
    throw std::invalid_argument("ModemSpec: a_min must be below a_max");
  }
  if (a_min <= 0.0) {
    throw std::invalid_argument("ModemSpec: a_min must be positive");
  }
  const double span = phase_span();
  if (span <= 0.0 || span >= kTwoPi) {
    throw std::invalid_argument("ModemSpec: phase span must lie in (0, 2*pi)");
  }
}

std::vector<double> normalize_source(const std::vector<int>& pixels) {
  std::vector<double> out(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (pixels[i] < 0 || pixels[i] > 255) {
      throw std::invalid_argument("normalize_source: pixel value " +
                                  std::to_string(pixels[i]) + " outside 0..255");
    }
    out[i] = static_cast<double>(pixels[i]) / 255.0;
  }
  return out;
}

CTensor modulate(const ModemSpec& spec, const std::vector<double>& source,
                 std::vector<std::size_t> shape) {
  spec.validate();
  if (shape.empty()) shape = {source.size()};
  std::vector<double> re(source.size()), im(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    const double v = source[i];
    if (v < 0.0 || v > 1.0) {
      throw std::invalid_argument("modulate: source value " + std::to_string(v) +
                                  " outside [0,1]");
    }
    if (spec.mode == ModemMode::AM) {
      re[i] = spec.a_min + v * (spec.a_max - spec.a_min);
      im[i] = 0.0;
    } else {
      const double phi = spec.phase_lo + v * spec.phase_span();
      re[i] = std::cos(phi);
      im[i] = std::sin(phi);
    }
  }
  return CTensor::from_parts(std::move(shape), std::move(re), std::move(im));
}

CTensor demodulate(const ModemSpec& spec, const CTensor& field) {
  spec.validate();
  if (spec.mode == ModemMode::AM) {
    CTensor amp = magnitude(field);
    CTensor v = real_affine(amp, 1.0 / (spec.a_max - spec.a_min),
                            -spec.a_min / (spec.a_max - spec.a_min));
    return clamp_real(v, 0.0, 1.0);
  }
  CTensor phase = angle_from(field, spec.phase_lo);
  CTensor v = real_affine(phase, 1.0 / spec.phase_span(),
                          -spec.phase_lo / spec.phase_span());
  return clamp_real(v, 0.0, 1.0);
}

std::vector<double> demodulate_values(const ModemSpec& spec, const CTensor& field) {
  CTensor v = demodulate(spec, field);
  const auto re = v.re();
  return {re.begin(), re.end()};
}

}  // namespace rissc
