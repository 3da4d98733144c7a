#include "rissc/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace rissc {

double avg_power(const CTensor& field) {
  if (field.size() == 0) {
    throw std::invalid_argument("avg_power: empty field");
  }
  const auto re = field.re(), im = field.im();
  double acc = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    acc += re[i] * re[i] + im[i] * im[i];
  }
  return acc / static_cast<double>(field.size());
}

CTensor awgn(const CTensor& field, double snr_db, std::mt19937_64& rng) {
  const double signal_power = avg_power(field);
  if (signal_power == 0.0 && std::isfinite(snr_db)) {
    throw std::invalid_argument("awgn: zero-power field, SNR undefined");
  }
  const double noise_power = signal_power * std::pow(10.0, -snr_db / 10.0);
  const double sigma_per_component = std::sqrt(noise_power / 2.0);

  const std::size_t n = field.size();
  std::vector<double> re(n), im(n);
  const auto xr = field.re(), xi = field.im();
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = xr[i] + sigma_per_component * gauss(rng);
    im[i] = xi[i] + sigma_per_component * gauss(rng);
  }
  CTensor out = CTensor::from_parts(field.shape(), std::move(re), std::move(im));
  out.set_requires_grad(field.requires_grad());
  if (field.requires_grad() && Tape::active()) {
    Tape::active()->record([field, out] {
      const auto gr = out.grad_re(), gi = out.grad_im();
      auto gxr = field.grad_re(), gxi = field.grad_im();
      for (std::size_t i = 0; i < field.size(); ++i) {
        gxr[i] += gr[i];
        gxi[i] += gi[i];
      }
    });
  }
  return out;
}

}  // namespace rissc
