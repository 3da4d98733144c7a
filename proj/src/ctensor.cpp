#include "rissc/ctensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace rissc {

struct CTensor::Impl {
  std::vector<std::size_t> shape;
  std::vector<double> re, im;
  std::vector<double> gre, gim;  // empty until first grad access
  bool requires_grad = false;
};

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

thread_local std::vector<Tape*> g_tape_stack;

}  // namespace

CTensor::CTensor() : impl_(std::make_shared<Impl>()) {
  impl_->shape = {0};
}

CTensor CTensor::create(std::vector<std::size_t> shape,
                        const std::vector<cdouble>& values) {
  const std::size_t n = shape_product(shape);
  if (values.size() != n) {
    throw std::invalid_argument("CTensor::create: " + std::to_string(values.size()) +
                                " values for a tensor of " + std::to_string(n) +
                                " elements");
  }
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->re.resize(n);
  impl->im.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    impl->re[i] = values[i].real();
    impl->im[i] = values[i].imag();
  }
  return CTensor(std::move(impl));
}

CTensor CTensor::zeros(std::vector<std::size_t> shape) {
  const std::size_t n = shape_product(shape);
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->re.assign(n, 0.0);
  impl->im.assign(n, 0.0);
  return CTensor(std::move(impl));
}

CTensor CTensor::from_parts(std::vector<std::size_t> shape,
                            std::vector<double> re, std::vector<double> im) {
  const std::size_t n = shape_product(shape);
  if (re.size() != n || im.size() != n) {
    throw std::invalid_argument("CTensor::from_parts: component size mismatch");
  }
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->re = std::move(re);
  impl->im = std::move(im);
  return CTensor(std::move(impl));
}

CTensor CTensor::from_real(std::vector<std::size_t> shape,
                           const std::vector<double>& re) {
  std::vector<double> im(re.size(), 0.0);
  return from_parts(std::move(shape), re, std::move(im));
}

CTensor CTensor::clone() const {
  auto impl = std::make_shared<Impl>();
  impl->shape = impl_->shape;
  impl->re = impl_->re;
  impl->im = impl_->im;
  return CTensor(std::move(impl));
}

const std::vector<std::size_t>& CTensor::shape() const { return impl_->shape; }
std::size_t CTensor::rank() const { return impl_->shape.size(); }
std::size_t CTensor::size() const { return impl_->re.size(); }

bool CTensor::same_shape(const CTensor& other) const {
  return impl_->shape == other.impl_->shape;
}

cdouble CTensor::at(std::size_t i) const {
  return {impl_->re[i], impl_->im[i]};
}

std::vector<cdouble> CTensor::to_vector() const {
  std::vector<cdouble> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i);
  return out;
}

std::span<const double> CTensor::re() const { return impl_->re; }
std::span<const double> CTensor::im() const { return impl_->im; }
std::span<double> CTensor::values_re() const { return impl_->re; }
std::span<double> CTensor::values_im() const { return impl_->im; }

bool CTensor::requires_grad() const { return impl_->requires_grad; }
void CTensor::set_requires_grad(bool v) const { impl_->requires_grad = v; }

bool CTensor::has_grad() const { return !impl_->gre.empty() || size() == 0; }

cdouble CTensor::grad_at(std::size_t i) const {
  if (impl_->gre.empty()) return {0.0, 0.0};
  return {impl_->gre[i], impl_->gim[i]};
}

std::span<double> CTensor::grad_re() const {
  if (impl_->gre.empty()) impl_->gre.assign(size(), 0.0);
  return impl_->gre;
}

std::span<double> CTensor::grad_im() const {
  if (impl_->gim.empty()) impl_->gim.assign(size(), 0.0);
  return impl_->gim;
}

void CTensor::zero_grad() const {
  impl_->gre.clear();
  impl_->gim.clear();
}

const void* CTensor::id() const { return impl_.get(); }

// -- tape -------------------------------------------------------------------

Tape::Tape() { g_tape_stack.push_back(this); }

Tape::~Tape() {
  if (!g_tape_stack.empty() && g_tape_stack.back() == this) {
    g_tape_stack.pop_back();
  }
}

Tape* Tape::active() {
  return g_tape_stack.empty() ? nullptr : g_tape_stack.back();
}

void Tape::record(std::function<void()> step) {
  records_.push_back(std::move(step));
}

std::size_t Tape::num_records() const { return records_.size(); }

void Tape::backward(const CTensor& loss) {
  if (!loss.is_scalar()) {
    throw std::invalid_argument("Tape::backward: loss must be scalar, got size " +
                                std::to_string(loss.size()));
  }
  if (loss.im()[0] != 0.0) {
    throw std::invalid_argument("Tape::backward: loss has nonzero imaginary part");
  }
  if (consumed_) {
    throw std::logic_error("Tape::backward: tape already traversed");
  }
  consumed_ = true;
  loss.grad_re()[0] += 1.0;
  loss.grad_im();
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
}

// -- op helpers ---------------------------------------------------------------

namespace {

bool should_record(bool any_input_grad) {
  return any_input_grad && Tape::active() != nullptr;
}

void require_same_shape(const CTensor& a, const CTensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

// C[m x n] += A[m x k] * B[k x n]
void mm_acc(const double* ar, const double* ai, const double* br,
            const double* bi, double* cr, double* ci, std::size_t m,
            std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow_r = ar + i * k;
    const double* arow_i = ai + i * k;
    double* crow_r = cr + i * n;
    double* crow_i = ci + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double xr = arow_r[p];
      const double xi = arow_i[p];
      if (xr == 0.0 && xi == 0.0) continue;
      const double* brow_r = br + p * n;
      const double* brow_i = bi + p * n;
      for (std::size_t j = 0; j < n; ++j) {
        crow_r[j] += xr * brow_r[j] - xi * brow_i[j];
        crow_i[j] += xr * brow_i[j] + xi * brow_r[j];
      }
    }
  }
}

// GA[m x k] += G[m x n] * B^H, with B[k x n]
void mm_acc_gbh(const double* gr, const double* gi, const double* br,
                const double* bi, double* gar, double* gai, std::size_t m,
                std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow_r = gr + i * n;
    const double* grow_i = gi + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow_r = br + p * n;
      const double* brow_i = bi + p * n;
      double sr = 0.0, si = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        // g * conj(b)
        sr += grow_r[j] * brow_r[j] + grow_i[j] * brow_i[j];
        si += grow_i[j] * brow_r[j] - grow_r[j] * brow_i[j];
      }
      gar[i * k + p] += sr;
      gai[i * k + p] += si;
    }
  }
}

// GB[k x n] += A^H * G, with A[m x k]
void mm_acc_ahg(const double* ar, const double* ai, const double* gr,
                const double* gi, double* gbr, double* gbi, std::size_t m,
                std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    double* gbrow_r = gbr + p * n;
    double* gbrow_i = gbi + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      // conj(a[i,p])
      const double xr = ar[i * k + p];
      const double xi = -ai[i * k + p];
      if (xr == 0.0 && xi == 0.0) continue;
      const double* grow_r = gr + i * n;
      const double* grow_i = gi + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        gbrow_r[j] += xr * grow_r[j] - xi * grow_i[j];
        gbrow_i[j] += xr * grow_i[j] + xi * grow_r[j];
      }
    }
  }
}

}  // namespace

// -- elementwise ---------------------------------------------------------------

CTensor ew_binary(const CTensor& a, const CTensor& b, EwOp op) {
  require_same_shape(a, b, "ew_binary");
  const std::size_t n = a.size();
  std::vector<double> re(n), im(n);
  const auto ar = a.re(), ai = a.im(), br = b.re(), bi = b.im();
  if (op == EwOp::Add) {
    for (std::size_t i = 0; i < n; ++i) {
      re[i] = ar[i] + br[i];
      im[i] = ai[i] + bi[i];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      re[i] = ar[i] * br[i] - ai[i] * bi[i];
      im[i] = ar[i] * bi[i] + ai[i] * br[i];
    }
  }
  CTensor out = CTensor::from_parts(a.shape(), std::move(re), std::move(im));
  const bool track = a.requires_grad() || b.requires_grad();
  out.set_requires_grad(track);
  if (should_record(track)) {
    Tape::active()->record([a, b, out, op] {
      const auto gr = out.grad_re(), gi = out.grad_im();
      const std::size_t n = out.size();
      if (op == EwOp::Add) {
        if (a.requires_grad()) {
          auto gar = a.grad_re(), gai = a.grad_im();
          for (std::size_t i = 0; i < n; ++i) {
            gar[i] += gr[i];
            gai[i] += gi[i];
          }
        }
        if (b.requires_grad()) {
          auto gbr = b.grad_re(), gbi = b.grad_im();
          for (std::size_t i = 0; i < n; ++i) {
            gbr[i] += gr[i];
            gbi[i] += gi[i];
          }
        }
      } else {
        // d/da (a*b): g * conj(b); symmetrically for b
        if (a.requires_grad()) {
          auto gar = a.grad_re(), gai = a.grad_im();
          const auto br = b.re(), bi = b.im();
          for (std::size_t i = 0; i < n; ++i) {
            gar[i] += gr[i] * br[i] + gi[i] * bi[i];
            gai[i] += gi[i] * br[i] - gr[i] * bi[i];
          }
        }
        if (b.requires_grad()) {
          auto gbr = b.grad_re(), gbi = b.grad_im();
          const auto ar = a.re(), ai = a.im();
          for (std::size_t i = 0; i < n; ++i) {
            gbr[i] += gr[i] * ar[i] + gi[i] * ai[i];
            gbi[i] += gi[i] * ar[i] - gr[i] * ai[i];
          }
        }
      }
    });
  }
  return out;
}

CTensor add(const CTensor& a, const CTensor& b) { return ew_binary(a, b, EwOp::Add); }
CTensor mul(const CTensor& a, const CTensor& b) { return ew_binary(a, b, EwOp::Mul); }

// -- matmul ---------------------------------------------------------------------

CTensor matmul(const CTensor& a, const CTensor& b) {
  if (a.rank() != 2) {
    throw std::invalid_argument("matmul: left operand must be rank 2");
  }
  const bool vec_rhs = b.rank() == 1;
  if (!vec_rhs && b.rank() != 2) {
    throw std::invalid_argument("matmul: right operand must be rank 1 or 2");
  }
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  const std::size_t kb = b.shape()[0];
  const std::size_t n = vec_rhs ? 1 : b.shape()[1];
  if (k != kb) {
    throw std::invalid_argument(
        "matmul: inner dimensions disagree (" + std::to_string(k) + " vs " +
        std::to_string(kb) + ")");
  }
  std::vector<double> re(m * n, 0.0), im(m * n, 0.0);
  mm_acc(a.re().data(), a.im().data(), b.re().data(), b.im().data(), re.data(),
         im.data(), m, k, n);
  std::vector<std::size_t> out_shape =
      vec_rhs ? std::vector<std::size_t>{m} : std::vector<std::size_t>{m, n};
  CTensor out = CTensor::from_parts(std::move(out_shape), std::move(re), std::move(im));
  const bool track = a.requires_grad() || b.requires_grad();
  out.set_requires_grad(track);
  if (should_record(track)) {
    Tape::active()->record([a, b, out, m, k, n] {
      const auto gr = out.grad_re(), gi = out.grad_im();
      if (a.requires_grad()) {
        mm_acc_gbh(gr.data(), gi.data(), b.re().data(), b.im().data(),
                   a.grad_re().data(), a.grad_im().data(), m, k, n);
      }
      if (b.requires_grad()) {
        mm_acc_ahg(a.re().data(), a.im().data(), gr.data(), gi.data(),
                   b.grad_re().data(), b.grad_im().data(), m, k, n);
      }
    });
  }
  return out;
}

// -- reductions and maps ----------------------------------------------------------

CTensor sum(const CTensor& x) {
  double sr = 0.0, si = 0.0;
  const auto xr = x.re(), xi = x.im();
  for (std::size_t i = 0; i < x.size(); ++i) {
    sr += xr[i];
    si += xi[i];
  }
  CTensor out = CTensor::from_parts({1}, {sr}, {si});
  out.set_requires_grad(x.requires_grad());
  if (should_record(x.requires_grad())) {
    Tape::active()->record([x, out] {
      const double gr = out.grad_re()[0], gi = out.grad_im()[0];
      auto gxr = x.grad_re(), gxi = x.grad_im();
      for (std::size_t i = 0; i < x.size(); ++i) {
        gxr[i] += gr;
        gxi[i] += gi;
      }
    });
  }
  return out;
}

CTensor real_part(const CTensor& x) {
  std::vector<double> re(x.re().begin(), x.re().end());
  CTensor out = CTensor::from_real(x.shape(), re);
  out.set_requires_grad(x.requires_grad());
  if (should_record(x.requires_grad())) {
    Tape::active()->record([x, out] {
      const auto gr = out.grad_re();
      auto gxr = x.grad_re();
      for (std::size_t i = 0; i < x.size(); ++i) gxr[i] += gr[i];
    });
  }
  return out;
}

CTensor magnitude(const CTensor& x) {
  const std::size_t n = x.size();
  std::vector<double> re(n);
  const auto xr = x.re(), xi = x.im();
  for (std::size_t i = 0; i < n; ++i) re[i] = std::hypot(xr[i], xi[i]);
  CTensor out = CTensor::from_real(x.shape(), re);
  out.set_requires_grad(x.requires_grad());
  if (should_record(x.requires_grad())) {
    Tape::active()->record([x, out] {
      const auto gr = out.grad_re();
      const auto vr = out.re();
      const auto xr = x.re(), xi = x.im();
      auto gxr = x.grad_re(), gxi = x.grad_im();
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (vr[i] == 0.0) continue;
        const double s = gr[i] / vr[i];
        gxr[i] += s * xr[i];
        gxi[i] += s * xi[i];
      }
    });
  }
  return out;
}

CTensor squared_magnitude(const CTensor& x) {
  const std::size_t n = x.size();
  std::vector<double> re(n);
  const auto xr = x.re(), xi = x.im();
  for (std::size_t i = 0; i < n; ++i) re[i] = xr[i] * xr[i] + xi[i] * xi[i];
  CTensor out = CTensor::from_real(x.shape(), re);
  out.set_requires_grad(x.requires_grad());
  if (should_record(x.requires_grad())) {
    Tape::active()->record([x, out] {
      const auto gr = out.grad_re();
      const auto xr = x.re(), xi = x.im();
      auto gxr = x.grad_re(), gxi = x.grad_im();
      for (std::size_t i = 0; i < x.size(); ++i) {
        gxr[i] += gr[i] * 2.0 * xr[i];
        gxi[i] += gr[i] * 2.0 * xi[i];
      }
    });
  }
  return out;
}

CTensor angle_from(const CTensor& x, double lo) {
  const std::size_t n = x.size();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> re(n);
  const auto xr = x.re(), xi = x.im();
  for (std::size_t i = 0; i < n; ++i) {
    double th = std::atan2(xi[i], xr[i]);
    while (th < lo) th += two_pi;
    while (th >= lo + two_pi) th -= two_pi;
    re[i] = th;
  }
  CTensor out = CTensor::from_real(x.shape(), re);
  out.set_requires_grad(x.requires_grad());
  if (should_record(x.requires_grad())) {
    Tape::active()->record([x, out] {
      const auto gr = out.grad_re();
      const auto xr = x.re(), xi = x.im();
      auto gxr = x.grad_re(), gxi = x.grad_im();
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double r2 = xr[i] * xr[i] + xi[i] * xi[i];
        if (r2 == 0.0) continue;
        gxr[i] += gr[i] * (-xi[i] / r2);
        gxi[i] += gr[i] * (xr[i] / r2);
      }
    });
  }
  return out;
}

CTensor real_affine(const CTensor& x, double scale, double shift) {
  const std::size_t n = x.size();
  std::vector<double> re(n), im(n);
  const auto xr = x.re(), xi = x.im();
  for (std::size_t i = 0; i < n; ++i) {
    re[i] = scale * xr[i] + shift;
    im[i] = scale * xi[i];
  }
  CTensor out = CTensor::from_parts(x.shape(), std::move(re), std::move(im));
  out.set_requires_grad(x.requires_grad());
  if (should_record(x.requires_grad())) {
    Tape::active()->record([x, out, scale] {
      const auto gr = out.grad_re(), gi = out.grad_im();
      auto gxr = x.grad_re(), gxi = x.grad_im();
      for (std::size_t i = 0; i < x.size(); ++i) {
        gxr[i] += scale * gr[i];
        gxi[i] += scale * gi[i];
      }
    });
  }
  return out;
}

CTensor clamp_real(const CTensor& x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp_real: lo > hi");
  const std::size_t n = x.size();
  std::vector<double> re(n);
  const auto xr = x.re(), xi = x.im();
  for (std::size_t i = 0; i < n; ++i) {
    if (xi[i] != 0.0) {
      throw std::invalid_argument("clamp_real: input has nonzero imaginary part");
    }
    re[i] = std::clamp(xr[i], lo, hi);
  }
  CTensor out = CTensor::from_real(x.shape(), re);
  out.set_requires_grad(x.requires_grad());
  if (should_record(x.requires_grad())) {
    Tape::active()->record([x, out, lo, hi] {
      const auto gr = out.grad_re();
      const auto xr = x.re();
      auto gxr = x.grad_re();
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (xr[i] > lo && xr[i] < hi) gxr[i] += gr[i];
      }
    });
  }
  return out;
}

CTensor scale_columns(const CTensor& coeffs, const CTensor& x) {
  if (coeffs.rank() != 1) {
    throw std::invalid_argument("scale_columns: coeffs must be rank 1");
  }
  if (x.rank() != 1 && x.rank() != 2) {
    throw std::invalid_argument("scale_columns: x must be rank 1 or 2");
  }
  const std::size_t rows = x.shape()[0];
  const std::size_t cols = x.rank() == 2 ? x.shape()[1] : 1;
  if (coeffs.size() != rows) {
    throw std::invalid_argument("scale_columns: coeffs length " +
                                std::to_string(coeffs.size()) + " vs " +
                                std::to_string(rows) + " rows");
  }
  std::vector<double> re(rows * cols), im(rows * cols);
  const auto cr = coeffs.re(), ci = coeffs.im(), xr = x.re(), xi = x.im();
  for (std::size_t i = 0; i < rows; ++i) {
    const double tr = cr[i], ti = ci[i];
    for (std::size_t b = 0; b < cols; ++b) {
      const std::size_t idx = i * cols + b;
      re[idx] = tr * xr[idx] - ti * xi[idx];
      im[idx] = tr * xi[idx] + ti * xr[idx];
    }
  }
  CTensor out = CTensor::from_parts(x.shape(), std::move(re), std::move(im));
  const bool track = coeffs.requires_grad() || x.requires_grad();
  out.set_requires_grad(track);
  if (should_record(track)) {
    Tape::active()->record([coeffs, x, out, rows, cols] {
      const auto gr = out.grad_re(), gi = out.grad_im();
      const auto xr = x.re(), xi = x.im();
      const auto cr = coeffs.re(), ci = coeffs.im();
      if (coeffs.requires_grad()) {
        auto gcr = coeffs.grad_re(), gci = coeffs.grad_im();
        for (std::size_t i = 0; i < rows; ++i) {
          double sr = 0.0, si = 0.0;
          for (std::size_t b = 0; b < cols; ++b) {
            const std::size_t idx = i * cols + b;
            // g * conj(x)
            sr += gr[idx] * xr[idx] + gi[idx] * xi[idx];
            si += gi[idx] * xr[idx] - gr[idx] * xi[idx];
          }
          gcr[i] += sr;
          gci[i] += si;
        }
      }
      if (x.requires_grad()) {
        auto gxr = x.grad_re(), gxi = x.grad_im();
        for (std::size_t i = 0; i < rows; ++i) {
          const double tr = cr[i], ti = -ci[i];  // conj(c)
          for (std::size_t b = 0; b < cols; ++b) {
            const std::size_t idx = i * cols + b;
            gxr[idx] += gr[idx] * tr - gi[idx] * ti;
            gxi[idx] += gi[idx] * tr + gr[idx] * ti;
          }
        }
      }
    });
  }
  return out;
}

// -- finite-difference gradient verification -------------------------------------

GradCheckReport grad_check(const std::function<CTensor(const CTensor&)>& f,
                           const CTensor& point, double step, double tol) {
  if (step <= 0.0) throw std::invalid_argument("grad_check: step must be > 0");

  CTensor x = point.clone();
  x.set_requires_grad(true);
  {
    Tape tape;
    CTensor loss = f(x);
    tape.backward(loss);
  }

  auto eval_at = [&f](const CTensor& p) {
    CTensor v = f(p);
    if (!v.is_scalar()) {
      throw std::invalid_argument("grad_check: f must return a scalar");
    }
    return v.re()[0];
  };

  GradCheckReport report;
  report.pass = true;
  const std::size_t n = point.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (int comp = 0; comp < 2; ++comp) {
      CTensor hi = point.clone();
      CTensor lo = point.clone();
      auto hi_v = comp == 0 ? hi.values_re() : hi.values_im();
      auto lo_v = comp == 0 ? lo.values_re() : lo.values_im();
      hi_v[i] += step;
      lo_v[i] -= step;
      const double fd = (eval_at(hi) - eval_at(lo)) / (2.0 * step);
      const double ad = comp == 0 ? x.grad_at(i).real() : x.grad_at(i).imag();
      const double denom =
          std::max({std::abs(fd), std::abs(ad), 1e-6});
      const double rel = std::abs(fd - ad) / denom;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_index = i;
        report.worst_is_imag = comp == 1;
        report.detail = "ad=" + std::to_string(ad) + " fd=" + std::to_string(fd);
      }
    }
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

}  // namespace rissc
