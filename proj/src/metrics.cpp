#include "rissc/metrics.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rissc {

double psnr(std::span<const double> ref, std::span<const double> est) {
  if (ref.size() != est.size()) {
    throw std::invalid_argument("psnr: shape mismatch");
  }
  if (ref.empty()) throw std::invalid_argument("psnr: empty image");
  double mse = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref[i] - est[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr double kMsWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

std::vector<double> gaussian_window(std::size_t n, double sigma) {
  std::vector<double> w(n);
  const double center = (static_cast<double>(n) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - center;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

struct Plane {
  std::size_t h = 0, w = 0;
  std::vector<double> v;
};

Plane downsample2(const Plane& p) {
  Plane out;
  out.h = p.h / 2;
  out.w = p.w / 2;
  out.v.resize(out.h * out.w);
  for (std::size_t y = 0; y < out.h; ++y) {
    for (std::size_t x = 0; x < out.w; ++x) {
      out.v[y * out.w + x] = 0.25 * (p.v[(2 * y) * p.w + 2 * x] +
                                     p.v[(2 * y) * p.w + 2 * x + 1] +
                                     p.v[(2 * y + 1) * p.w + 2 * x] +
                                     p.v[(2 * y + 1) * p.w + 2 * x + 1]);
    }
  }
  return out;
}

// Valid-mode separable Gaussian filtering.
Plane gauss_filter(const Plane& p, const std::vector<double>& win) {
  const std::size_t n = win.size();
  Plane tmp;  // horizontal pass
  tmp.h = p.h;
  tmp.w = p.w - n + 1;
  tmp.v.resize(tmp.h * tmp.w);
  for (std::size_t y = 0; y < tmp.h; ++y) {
    for (std::size_t x = 0; x < tmp.w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += win[k] * p.v[y * p.w + x + k];
      tmp.v[y * tmp.w + x] = acc;
    }
  }
  Plane out;  // vertical pass
  out.h = p.h - n + 1;
  out.w = tmp.w;
  out.v.resize(out.h * out.w);
  for (std::size_t y = 0; y < out.h; ++y) {
    for (std::size_t x = 0; x < out.w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += win[k] * tmp.v[(y + k) * tmp.w + x];
      out.v[y * out.w + x] = acc;
    }
  }
  return out;
}

struct ScaleStats {
  double luminance = 0.0;
  double contrast_structure = 0.0;
};

// Mean luminance and contrast-structure terms of one scale.
ScaleStats ssim_scale(const Plane& a, const Plane& b, const std::vector<double>& win) {
  const Plane mu_a = gauss_filter(a, win);
  const Plane mu_b = gauss_filter(b, win);

  Plane aa = a, bb = b, ab = a;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    aa.v[i] = a.v[i] * a.v[i];
    bb.v[i] = b.v[i] * b.v[i];
    ab.v[i] = a.v[i] * b.v[i];
  }
  const Plane m_aa = gauss_filter(aa, win);
  const Plane m_bb = gauss_filter(bb, win);
  const Plane m_ab = gauss_filter(ab, win);

  double lum = 0.0, cs = 0.0;
  for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i], mb = mu_b.v[i];
    const double var_a = m_aa.v[i] - ma * ma;
    const double var_b = m_bb.v[i] - mb * mb;
    const double cov = m_ab.v[i] - ma * mb;
    lum += (2.0 * ma * mb + kC1) / (ma * ma + mb * mb + kC1);
    cs += (2.0 * cov + kC2) / (var_a + var_b + kC2);
  }
  const double n = static_cast<double>(mu_a.v.size());
  return {lum / n, cs / n};
}

double ms_ssim_plane(Plane a, Plane b, std::size_t scales) {
  // reduce until the window fits the coarsest dyadic level
  std::size_t usable = 1;
  const std::size_t min_side = std::min(a.h, a.w);
  while (usable < scales && min_side >= kWindow * (std::size_t{1} << usable)) {
    ++usable;
  }
  std::size_t window = kWindow;
  if (min_side < window) window = min_side | 1;  // largest odd window that fits

  const std::vector<double> win = gaussian_window(window, kSigma);
  double weight_total = 0.0;
  for (std::size_t s = 0; s < usable; ++s) weight_total += kMsWeights[s];

  double score = 1.0;
  for (std::size_t s = 0; s < usable; ++s) {
    const ScaleStats stats = ssim_scale(a, b, win);
    const double weight = kMsWeights[s] / weight_total;
    // clamp keeps the product in [0,1] even for adversarial inputs
    const double cs = std::clamp(stats.contrast_structure, 0.0, 1.0);
    score *= std::pow(cs, weight);
    if (s + 1 == usable) {
      // luminance enters only at the coarsest scale
      const double lum = std::clamp(stats.luminance, 0.0, 1.0);
      score *= std::pow(lum, weight);
    } else {
      a = downsample2(a);
      b = downsample2(b);
    }
  }
  return score;
}

}  // namespace

double ms_ssim(std::span<const double> ref, std::span<const double> est,
               std::size_t h, std::size_t w, std::size_t channels,
               std::size_t scales) {
  if (ref.size() != est.size()) throw std::invalid_argument("ms_ssim: shape mismatch");
  if (ref.size() != h * w * channels) {
    throw std::invalid_argument("ms_ssim: size does not match h*w*channels");
  }
  if (scales < 1 || scales > 5) {
    throw std::invalid_argument("ms_ssim: scales must be in 1..5");
  }
  double total = 0.0;
  for (std::size_t ch = 0; ch < channels; ++ch) {
    Plane a, b;
    a.h = b.h = h;
    a.w = b.w = w;
    a.v.resize(h * w);
    b.v.resize(h * w);
    for (std::size_t p = 0; p < h * w; ++p) {
      a.v[p] = ref[p * channels + ch];
      b.v[p] = est[p * channels + ch];
    }
    total += ms_ssim_plane(std::move(a), std::move(b), scales);
  }
  return total / static_cast<double>(channels);
}

double compression_ratio(const SemanticModel& model, std::size_t source_dims) {
  return static_cast<double>(model.tx_dim()) / static_cast<double>(source_dims);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string eval_report_csv(const std::vector<EvalRow>& rows) {
  std::string csv =
      "snr_test_db,psnr_db_mean,psnr_db_std,ms_ssim_mean,ms_ssim_std,cr,"
      "n_images,seed\n";
  for (const EvalRow& r : rows) {
    csv += format_double(r.snr_test_db) + "," + format_double(r.psnr_db_mean) +
           "," + format_double(r.psnr_db_std) + "," +
           format_double(r.ms_ssim_mean) + "," + format_double(r.ms_ssim_std) +
           "," + format_double(r.cr) + "," + std::to_string(r.n_images) + "," +
           std::to_string(r.seed) + "\n";
  }
  return csv;
}

}  // namespace rissc
