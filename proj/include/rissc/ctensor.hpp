#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rissc {

using cdouble = std::complex<double>;

/// Complex-valued N-D tensor backed by separate float64 real/imaginary
/// planes, with an optional gradient accumulator of the same shape.
///
/// Tensors are cheap handles onto shared storage. Values are treated as
/// immutable after construction; the only sanctioned writers are op
/// constructors (before publishing a result) and the optimizer, which
/// updates parameters between tapes. The gradient slot accumulates across
/// backward passes until zero_grad().
///
/// Gradient convention: for a real loss L and element z = x + iy, the
/// stored gradient is dL/dx + i*dL/dy (equal to twice the conjugate
/// Wirtinger derivative), so real-valued update rules apply per component.
class CTensor {
 public:
  CTensor();  // empty tensor, shape {0}

  static CTensor create(std::vector<std::size_t> shape,
                        const std::vector<cdouble>& values);
  static CTensor zeros(std::vector<std::size_t> shape);
  static CTensor from_parts(std::vector<std::size_t> shape,
                            std::vector<double> re, std::vector<double> im);
  static CTensor from_real(std::vector<std::size_t> shape,
                           const std::vector<double>& re);

  /// Deep copy of the values; the copy does not require grad and carries
  /// no gradient buffer.
  CTensor clone() const;

  const std::vector<std::size_t>& shape() const;
  std::size_t rank() const;
  std::size_t size() const;
  bool same_shape(const CTensor& other) const;
  bool is_scalar() const { return size() == 1; }

  cdouble at(std::size_t i) const;  // linear index
  std::vector<cdouble> to_vector() const;

  std::span<const double> re() const;
  std::span<const double> im() const;

  /// Mutable value access. Reserved for op construction and the optimizer.
  std::span<double> values_re() const;
  std::span<double> values_im() const;

  bool requires_grad() const;
  void set_requires_grad(bool v) const;

  bool has_grad() const;
  cdouble grad_at(std::size_t i) const;
  /// Gradient planes, allocated zero-filled on first use.
  std::span<double> grad_re() const;
  std::span<double> grad_im() const;
  void zero_grad() const;

  /// Identity of the underlying storage (two handles may alias).
  const void* id() const;

 private:
  struct Impl;
  explicit CTensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Impl> impl_;
};

enum class EwOp { Add, Mul };

/// Define-by-run reverse-mode tape. Constructing a Tape makes it the
/// active recorder for the current thread; ops record themselves when any
/// input requires grad. One backward() per tape.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Seeds d(loss)/d(loss) = 1 and walks the recorded ops once, in
  /// reverse execution order. The loss must be a real-valued scalar.
  void backward(const CTensor& loss);

  /// The innermost live tape on this thread, or nullptr.
  static Tape* active();

  /// Appends a reverse-pass step. Used by every differentiable op,
  /// including ones defined in other modules.
  void record(std::function<void()> step);

  std::size_t num_records() const;

 private:
  std::vector<std::function<void()>> records_;
  bool consumed_ = false;
};

// -- differentiable tensor math ------------------------------------------

CTensor ew_binary(const CTensor& a, const CTensor& b, EwOp op);
CTensor add(const CTensor& a, const CTensor& b);
CTensor mul(const CTensor& a, const CTensor& b);

/// [m x k] * [k x n] -> [m x n]. A rank-1 right operand [k] is treated as
/// a single column, producing [m].
CTensor matmul(const CTensor& a, const CTensor& b);

CTensor sum(const CTensor& x);        // -> shape {1}
CTensor real_part(const CTensor& x);  // Re(z), imaginary plane zero
CTensor magnitude(const CTensor& x);  // |z|
CTensor squared_magnitude(const CTensor& x);

/// Phase of each element unwrapped into [lo, lo + 2*pi).
CTensor angle_from(const CTensor& x, double lo);

/// scale * z + shift with real scale/shift (shift enters the real plane).
CTensor real_affine(const CTensor& x, double scale, double shift);

/// Clamps the real plane into [lo, hi]; gradient passes only strictly
/// inside the interval. Imaginary plane must be zero and stays zero.
CTensor clamp_real(const CTensor& x, double lo, double hi);

/// out[i, b] = coeffs[i] * x[i, b]: per-row complex scaling broadcast over
/// columns. coeffs is rank-1 of length rows(x); x is [n] or [n x b].
CTensor scale_columns(const CTensor& coeffs, const CTensor& x);

// -- gradient verification -------------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  bool worst_is_imag = false;
  bool pass = false;
  std::string detail;
};

/// Compares the tape gradient of f at `point` against central finite
/// differences applied independently to the real and imaginary parts.
/// f must evaluate to a real scalar and be re-evaluable near `point`
/// (any internal randomness must be frozen across calls).
GradCheckReport grad_check(const std::function<CTensor(const CTensor&)>& f,
                           const CTensor& point, double step, double tol);

}  // namespace rissc
