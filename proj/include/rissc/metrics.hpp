#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rissc/ris_layers.hpp"

namespace rissc {

/// Peak signal-to-noise ratio in dB for images with unit dynamic range:
/// 10*log10(1/mse). Identical images return +infinity.
double psnr(std::span<const double> ref, std::span<const double> est);

/// Multi-scale SSIM on [0,1] images, 11x11 Gaussian window (sigma 1.5),
/// k1=0.01, k2=0.03, standard five-scale weights. The scale count is
/// reduced until the window fits the coarsest dyadic downsample
/// (min side >= 11 * 2^(scales-1)); the weights in use are renormalized.
/// Multi-channel images are scored per channel and averaged.
double ms_ssim(std::span<const double> ref, std::span<const double> est,
               std::size_t h, std::size_t w, std::size_t channels = 1,
               std::size_t scales = 5);

/// Transmitted real dimensions over source real dimensions. Each
/// transmitted atom carries one real dimension (the modulated one).
double compression_ratio(const SemanticModel& model, std::size_t source_dims);

struct EvalRow {
  double snr_test_db = 0.0;
  double psnr_db_mean = 0.0;
  double psnr_db_std = 0.0;
  double ms_ssim_mean = 0.0;
  double ms_ssim_std = 0.0;
  double cr = 0.0;
  std::size_t n_images = 0;
  std::uint64_t seed = 0;
};

/// CSV with header snr_test_db,psnr_db_mean,psnr_db_std,ms_ssim_mean,
/// ms_ssim_std,cr,n_images,seed. Locale-independent number formatting.
std::string eval_report_csv(const std::vector<EvalRow>& rows);

/// Shortest round-trip decimal form of a double ("inf"/-"inf"/"nan" for
/// non-finite values); never locale-dependent.
std::string format_double(double v);

}  // namespace rissc
