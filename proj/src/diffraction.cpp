#include "rissc/diffraction.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace rissc {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::pair<double, double> Geometry::position(std::size_t index) const {
  const std::size_t r = index / cols;
  const std::size_t c = index % cols;
  const double x = (static_cast<double>(c) - (static_cast<double>(cols) - 1.0) / 2.0) * pitch;
  const double y = (static_cast<double>(r) - (static_cast<double>(rows) - 1.0) / 2.0) * pitch;
  return {x, y};
}

Geometry make_geometry(std::size_t rows, std::size_t cols, double pitch, double z) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("make_geometry: rows and cols must be >= 1");
  }
  if (pitch <= 0.0) {
    throw std::invalid_argument("make_geometry: pitch must be positive");
  }
  return Geometry{rows, cols, pitch, z};
}

cdouble rs_coefficient(double r, double dz, double wavelength, double area) {
  const double k = kTwoPi / wavelength;
  // (dz/r^2) * (1/(2*pi*r) - i/lambda) * e^{ikr} * area
  const double obliquity = dz / (r * r);
  const cdouble envelope(1.0 / (kTwoPi * r), -1.0 / wavelength);
  const cdouble phase(std::cos(k * r), std::sin(k * r));
  return obliquity * envelope * phase * area;
}

PropagationMatrix rs_kernel(const Geometry& src, const Geometry& dst,
                            double wavelength, bool energy_renorm) {
  if (wavelength <= 0.0) {
    throw std::invalid_argument("rs_kernel: wavelength must be positive");
  }
  if (dst.z <= src.z) {
    throw std::invalid_argument("rs_kernel: destination plane must lie after the source plane");
  }
  const std::size_t n_src = src.atoms();
  const std::size_t n_dst = dst.atoms();
  const double dz = dst.z - src.z;
  const double area = src.pitch * src.pitch;

  std::vector<double> re(n_dst * n_src), im(n_dst * n_src);
  std::vector<std::pair<double, double>> src_xy(n_src), dst_xy(n_dst);
  for (std::size_t j = 0; j < n_src; ++j) src_xy[j] = src.position(j);
  for (std::size_t i = 0; i < n_dst; ++i) dst_xy[i] = dst.position(i);

  for (std::size_t i = 0; i < n_dst; ++i) {
    for (std::size_t j = 0; j < n_src; ++j) {
      const double dx = dst_xy[i].first - src_xy[j].first;
      const double dy = dst_xy[i].second - src_xy[j].second;
      const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
      const cdouble w = rs_coefficient(r, dz, wavelength, area);
      re[i * n_src + j] = w.real();
      im[i * n_src + j] = w.imag();
    }
  }

  if (energy_renorm) {
    // Scale so that mean_i sum_j |w_ij|^2 = 1: incoherent unit-power input
    // keeps unit average output power.
    double power = 0.0;
    for (std::size_t t = 0; t < re.size(); ++t) power += re[t] * re[t] + im[t] * im[t];
    power /= static_cast<double>(n_dst);
    const double s = 1.0 / std::sqrt(power);
    for (std::size_t t = 0; t < re.size(); ++t) {
      re[t] *= s;
      im[t] *= s;
    }
  }

  PropagationMatrix pm;
  pm.w = CTensor::from_parts({n_dst, n_src}, std::move(re), std::move(im));
  pm.src_geometry = src;
  pm.dst_geometry = dst;
  pm.wavelength = wavelength;
  return pm;
}

double fly_latency(std::size_t num_gaps, double gap_distance) {
  if (gap_distance <= 0.0) {
    throw std::invalid_argument("fly_latency: gap distance must be positive");
  }
  return static_cast<double>(num_gaps) * gap_distance / kSpeedOfLight;
}

}  // namespace rissc
