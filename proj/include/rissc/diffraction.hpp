#pragma once

#include <cstddef>
#include <utility>

#include "rissc/ctensor.hpp"

namespace rissc {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

/// Physical meta-atom grid of one surface layer: a rows x cols lattice
/// with transverse spacing `pitch`, centered on the optical axis, lying in
/// the plane z = const. Atom (r, c) sits at
///   x = (c - (cols-1)/2) * pitch,  y = (r - (rows-1)/2) * pitch.
struct Geometry {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double pitch = 0.0;  // m
  double z = 0.0;      // m

  std::size_t atoms() const { return rows * cols; }
  /// Transverse coordinates (x, y) of the atom with linear index r*cols+c.
  std::pair<double, double> position(std::size_t index) const;
};

Geometry make_geometry(std::size_t rows, std::size_t cols, double pitch, double z);

/// Fixed free-space coupling coefficients between two layer planes,
/// w[dst x src]. Never trainable.
struct PropagationMatrix {
  CTensor w;
  Geometry src_geometry;
  Geometry dst_geometry;
  double wavelength = 0.0;  // m
};

/// First Rayleigh-Sommerfeld solution, discretized per source atom:
///   w[i][j] = (dz / r^2) * (1/(2*pi*r) + 1/(i*lambda)) * exp(i*2*pi*r/lambda) * A
/// with r the atom-pair distance, dz the plane separation and A the source
/// element area (pitch^2). With `energy_renorm` the matrix is scaled so a
/// unit-average-power incoherent input keeps unit average power.
PropagationMatrix rs_kernel(const Geometry& src, const Geometry& dst,
                            double wavelength, bool energy_renorm = false);

/// Single RS coefficient for a source/destination atom pair at distance r
/// with plane separation dz and source element area `area`.
cdouble rs_coefficient(double r, double dz, double wavelength, double area);

/// Time for a wavefront to traverse `num_gaps` inter-layer gaps of length
/// `gap_distance` at the speed of light. Independent of atom counts.
double fly_latency(std::size_t num_gaps, double gap_distance);

}  // namespace rissc
