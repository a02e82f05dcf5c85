#pragma once

// Unquantized consensus ADMM for distributed averaging: the per-node update,
// its block-matrix form, the fixed point, and the linear-rate diagnostics
// measured in the G-norm on edge variables (z, beta).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>

#include "bqc/dense.hpp"
#include "bqc/graph.hpp"
#include "bqc/quantizer.hpp"

namespace bqc {

struct CadmmState {
  Vec x;
  Vec alpha;
  std::int64_t k = 0;

  static CadmmState zeros(int n) { return {Vec(static_cast<std::size_t>(n), 0.0), Vec(static_cast<std::size_t>(n), 0.0), 0}; }
};

inline double mean(std::span<const double> v) {
  long double acc = 0.0L;
  for (double x : v) acc += x;
  return static_cast<double>(acc / static_cast<long double>(v.size()));
}

inline void check_positive_rho(double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("rho must be positive and finite");
}

/// One synchronous CADMM sweep. The dual update uses the freshly computed x.
/// With `project_range` set, every value a node uses from x (its own and its
/// neighbours') is first projected onto [-L, L]: the constrained least-squares
/// variant whose rounding gives the bounded-quantizer algorithm.
inline CadmmState cadmm_step(const CadmmState& s, const Graph& g, double rho, std::span<const double> r,
                             std::optional<double> project_range = std::nullopt) {
  check_positive_rho(rho);
  const int n = g.n();
  if (s.x.size() != static_cast<std::size_t>(n) || s.alpha.size() != s.x.size() || r.size() != s.x.size())
    throw std::invalid_argument("cadmm_step: dimension mismatch");

  auto view = [&](double v) { return project_range ? project(v, *project_range) : v; };

  CadmmState out{Vec(static_cast<std::size_t>(n)), Vec(static_cast<std::size_t>(n)), s.k + 1};
  for (int i = 0; i < n; ++i) {
    const double deg = g.degree(i);
    double nb = 0.0;
    for (int j : g.neighbors(i)) nb += view(s.x[j]);
    out.x[i] = (rho * deg * view(s.x[i]) + rho * nb - s.alpha[i] + r[i]) / (1.0 + 2.0 * rho * deg);
  }
  for (int i = 0; i < n; ++i) {
    double lap = g.degree(i) * view(out.x[i]);
    for (int j : g.neighbors(i)) lap -= view(out.x[j]);
    out.alpha[i] = s.alpha[i] + rho * lap;
  }
  return out;
}

/// x* = 1 * mean(r), alpha* = r - 1 * mean(r).
inline std::pair<Vec, Vec> fixed_point(std::span<const double> r) {
  const double rbar = mean(r);
  Vec x(r.size(), rbar);
  Vec a(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) a[i] = r[i] - rbar;
  return {std::move(x), std::move(a)};
}

/// 3n x 3n iteration matrix acting on s = [x; alpha; r].
inline Matrix transition_matrix(const Graph& g, double rho) {
  check_positive_rho(rho);
  const auto n = static_cast<std::size_t>(g.n());
  const auto mats = matrices(g);
  Matrix d0(n, n);
  for (std::size_t i = 0; i < n; ++i) d0(i, i) = 1.0 / (1.0 + 2.0 * rho * mats.degree(i, i));

  const Matrix top_x = rho * (d0 * mats.l_plus);
  const Matrix ld0 = mats.l_minus * d0;
  const Matrix mid_x = (rho * rho) * (ld0 * mats.l_plus);
  const Matrix mid_a = Matrix::identity(n) - rho * ld0;
  const Matrix mid_r = rho * ld0;

  Matrix d(3 * n, 3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d(i, j) = top_x(i, j);
      d(i, n + j) = -d0(i, j);
      d(i, 2 * n + j) = d0(i, j);
      d(n + i, j) = mid_x(i, j);
      d(n + i, n + j) = mid_a(i, j);
      d(n + i, 2 * n + j) = mid_r(i, j);
    }
    d(2 * n + i, 2 * n + i) = 1.0;
  }
  return d;
}

struct RateInfo {
  double delta_rate;
  double mu;
};

/// Q-linear contraction constant of the G-norm error for a given mu > 1.
inline RateInfo delta_rate(const SpectralInfo& sp, double rho, double mu = 2.0) {
  check_positive_rho(rho);
  if (!(mu > 1.0)) throw std::invalid_argument("mu must exceed 1");
  const double l2 = sp.lambda2_minus;
  const double lp = sp.lambdan_plus;
  const double first = (mu - 1.0) * l2 / (mu * lp);
  const double second = 2.0 * rho * l2 / (rho * rho * lp * l2 + mu);
  return {std::min(first, second), mu};
}

/// Largest delta over a small grid of mu values.
inline RateInfo best_delta_rate(const SpectralInfo& sp, double rho,
                                std::initializer_list<double> mus = {1.1, 1.5, 2.0, 4.0, 8.0}) {
  RateInfo best{0.0, 2.0};
  for (double mu : mus) {
    const auto ri = delta_rate(sp, rho, mu);
    if (ri.delta_rate > best.delta_rate) best = ri;
  }
  return best;
}

class ColumnSpaceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct DualPair {
  Vec z;     // 1/2 M_+ x, one entry per arc
  Vec beta;  // row-space element of M_- with M_- beta = alpha
};

/// Recovers edge variables (z, beta) from node variables and measures the
/// distance to the optimum in the G-norm, G = diag(rho I, I / rho).
class GNorm {
 public:
  GNorm(const Graph& g, double rho, std::span<const double> r) : rho_(rho), arcs_(g.arcs()) {
    check_positive_rho(rho);
    const auto mats = matrices(g);
    const auto eig = jacobi_eigen(mats.l_minus);
    pinv_ = symmetric_pinv(eig, 1e-9 * std::max(1.0, eig.values.back()));
    projector_ = mats.l_minus * pinv_;
    auto [xs, as] = fixed_point(r);
    optimum_ = recover(xs, as);
    optimum_alpha_ = std::move(as);
    optimum_x_ = std::move(xs);
  }

  double rho() const noexcept { return rho_; }
  const DualPair& optimum() const noexcept { return optimum_; }

  /// beta = M_-^T (2 L_-)^+ alpha. Throws if alpha is not in the column
  /// space of L_- (residual above 1e-8 relative to max(1, |alpha|)).
  Vec recover_beta(std::span<const double> alpha) const {
    const Vec proj = projector_ * alpha;
    double res = 0.0;
    for (std::size_t i = 0; i < proj.size(); ++i) res += (proj[i] - alpha[i]) * (proj[i] - alpha[i]);
    if (std::sqrt(res) > 1e-8 * std::max(1.0, norm2(alpha)))
      throw ColumnSpaceError("alpha is outside the column space of the signed Laplacian");
    const Vec w = pinv_ * alpha;  // (2 L_-)^+ alpha = w / 2
    Vec beta(arcs_.size());
    for (std::size_t l = 0; l < arcs_.size(); ++l) beta[l] = 0.5 * (w[arcs_[l].from] - w[arcs_[l].to]);
    return beta;
  }

  Vec recover_z(std::span<const double> x) const {
    Vec z(arcs_.size());
    for (std::size_t l = 0; l < arcs_.size(); ++l) z[l] = 0.5 * (x[arcs_[l].from] + x[arcs_[l].to]);
    return z;
  }

  DualPair recover(std::span<const double> x, std::span<const double> alpha) const {
    return {recover_z(x), recover_beta(alpha)};
  }

  /// ||u - v||_G for two recovered pairs.
  double distance(const DualPair& u, const DualPair& v) const {
    double zz = 0.0;
    double bb = 0.0;
    for (std::size_t l = 0; l < u.z.size(); ++l) zz += (u.z[l] - v.z[l]) * (u.z[l] - v.z[l]);
    for (std::size_t l = 0; l < u.beta.size(); ++l) bb += (u.beta[l] - v.beta[l]) * (u.beta[l] - v.beta[l]);
    return std::sqrt(rho_ * zz + bb / rho_);
  }

  /// ||u^k - u*||_G, computed on the differences so it stays accurate near the optimum.
  double error(const CadmmState& s) const {
    Vec dx(s.x.size());
    Vec da(s.alpha.size());
    for (std::size_t i = 0; i < dx.size(); ++i) {
      dx[i] = s.x[i] - optimum_x_[i];
      da[i] = s.alpha[i] - optimum_alpha_[i];
    }
    const DualPair diff = recover(dx, da);
    const DualPair zero{Vec(diff.z.size(), 0.0), Vec(diff.beta.size(), 0.0)};
    return distance(diff, zero);
  }

  /// ||u^{k+1} - u^k||_G.
  double step_distance(const CadmmState& a, const CadmmState& b) const {
    Vec dx(a.x.size());
    Vec da(a.alpha.size());
    for (std::size_t i = 0; i < dx.size(); ++i) {
      dx[i] = b.x[i] - a.x[i];
      da[i] = b.alpha[i] - a.alpha[i];
    }
    const DualPair diff = recover(dx, da);
    const DualPair zero{Vec(diff.z.size(), 0.0), Vec(diff.beta.size(), 0.0)};
    return distance(diff, zero);
  }

 private:
  double rho_;
  std::vector<Arc> arcs_;
  Matrix pinv_;
  Matrix projector_;
  DualPair optimum_;
  Vec optimum_x_;
  Vec optimum_alpha_;
};

inline double g_norm_error(const CadmmState& s, const Graph& g, double rho, std::span<const double> r) {
  return GNorm(g, rho, r).error(s);
}

/// Rough iteration estimate from zero initialization:
/// (n T_X(rbar)^2 + |r - 1 T_X(rbar)|^2 / (2 rho^2 lambda2)) / delta^2.
inline double rough_time_bound(const Graph& g, const SpectralInfo& sp, double rho, std::span<const double> r,
                               const QuantizerSpec& spec) {
  check_positive_rho(rho);
  const double tr = project(mean(r), spec.range_l());
  double dev = 0.0;
  for (double v : r) dev += (v - tr) * (v - tr);
  const double first = g.n() * tr * tr;
  const double second = dev / (2.0 * rho * rho * sp.lambda2_minus);
  return (first + second) / (spec.delta() * spec.delta());
}

}  // namespace bqc
