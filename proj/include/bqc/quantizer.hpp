#pragma once

// Rounding quantizer on the lattice {t * delta}, projection onto [-L, L], and
// the finite-bit bounded quantizer formed by composing the two.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bqc {

class QuantizerSpec {
 public:
  /// `range_l` must be a positive integer multiple of `delta` (checked to 1e-9 relative).
  QuantizerSpec(double delta, double range_l) : delta_(delta), range_l_(range_l) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("delta must be positive and finite");
    if (!(range_l > 0.0) || !std::isfinite(range_l)) throw std::invalid_argument("range_l must be positive and finite");
    const double ratio = range_l / delta;
    const double k = std::round(ratio);
    if (k < 1.0 || std::abs(ratio - k) > 1e-9 * ratio || k > 1e15)
      throw std::invalid_argument("range_l must be a positive integer multiple of delta (range_l/delta = " +
                                  std::to_string(ratio) + ")");
    max_level_ = static_cast<std::int64_t>(k);
  }

  double delta() const noexcept { return delta_; }
  double range_l() const noexcept { return range_l_; }
  /// L / delta: quantized outputs are t * delta with |t| <= max_level().
  std::int64_t max_level() const noexcept { return max_level_; }
  std::int64_t level_count() const noexcept { return 2 * max_level_ + 1; }

 private:
  double delta_;
  double range_l_;
  std::int64_t max_level_;
};

namespace detail {
inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::domain_error(std::string(what) + ": non-finite input");
}
}  // namespace detail

/// Lattice index t with (t - 1/2) delta < x <= (t + 1/2) delta; ties go down.
inline std::int64_t round_level(double x, double delta) {
  detail::require_finite(x, "round_quantize");
  return static_cast<std::int64_t>(std::ceil(x / delta - 0.5));
}

inline double round_quantize(double x, double delta) { return static_cast<double>(round_level(x, delta)) * delta; }

inline double project(double x, double range_l) {
  detail::require_finite(x, "project");
  return x > range_l ? range_l : (x < -range_l ? -range_l : x);
}

/// Level index of Q_b(x) = Q(T_X(x)), always within [-max_level, max_level].
inline std::int64_t bounded_level(double x, const QuantizerSpec& spec) {
  const std::int64_t t = round_level(project(x, spec.range_l()), spec.delta());
  const std::int64_t k = spec.max_level();
  return t > k ? k : (t < -k ? -k : t);
}

inline double bounded_quantize(double x, const QuantizerSpec& spec) {
  return static_cast<double>(bounded_level(x, spec)) * spec.delta();
}

/// ceil(log2(2L/delta + 1)).
inline int bit_width(const QuantizerSpec& spec) {
  const std::int64_t levels = spec.level_count();
  int bits = 0;
  while ((std::int64_t{1} << bits) < levels) ++bits;
  return bits;
}

}  // namespace bqc
