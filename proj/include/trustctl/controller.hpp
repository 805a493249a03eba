#pragma once

// Infinite-horizon discounted LQR and the controller-side state estimates.

#include "trustctl/estimator.hpp"

#include <cmath>
#include <optional>
#include <span>

namespace trustctl {

struct LqrConfig {
  Matrix state_cost;    // Q
  Matrix control_cost;  // Pc
  double discount = 1.0;

  void validate(Index state_dim, Index input_dim) const {
    using detail::require;
    require(state_cost.rows() == state_dim && state_cost.cols() == state_dim,
            "Q must be " + std::to_string(state_dim) + "x" + std::to_string(state_dim) + ", got " +
                detail::shape(state_cost));
    require(control_cost.rows() == input_dim && control_cost.cols() == input_dim,
            "Pc must be " + std::to_string(input_dim) + "x" + std::to_string(input_dim) + ", got " +
                detail::shape(control_cost));
    require(detail::is_symmetric(state_cost) && detail::min_eigenvalue(state_cost) > 0.0,
            "Q must be symmetric positive definite");
    require(detail::is_symmetric(control_cost) && detail::min_eigenvalue(control_cost) > 0.0,
            "Pc must be symmetric positive definite");
    require(discount > 0.0 && discount <= 1.0, "beta must lie in (0, 1]");
  }

  friend bool operator==(const LqrConfig& l, const LqrConfig& r) {
    return detail::same(l.state_cost, r.state_cost) && detail::same(l.control_cost, r.control_cost) &&
           l.discount == r.discount;
  }
};

inline LqrConfig identity_lqr(Index state_dim, Index input_dim, double control_weight = 0.01) {
  return LqrConfig{Matrix::Identity(state_dim, state_dim), control_weight * Matrix::Identity(input_dim, input_dim),
                   1.0};
}

struct LqrSolution {
  Matrix cost_to_go;  // S
  Matrix gain;        // L, u = -L x
  double residual = 0.0;
  int iterations = 0;
};

enum class DareMethod {
  kDoubling,    // structure-preserving doubling, quadratic convergence
  kFixedPoint,  // plain Riccati-map iteration from S0 = Q
};

struct DareOptions {
  DareMethod method = DareMethod::kDoubling;
  double tolerance = 1e-12;
  int max_iterations = 100000;
  double residual_tolerance = 1e-8;
};

/// Frobenius norm of A'(S - S B (B'SB + R)^-1 B'S) A + Q - S.
inline double riccati_defect(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, const Matrix& s) {
  const Matrix btsb = b.transpose() * s * b + r;
  const Matrix inner = s - s * b * btsb.ldlt().solve(b.transpose() * s);
  return (a.transpose() * inner * a + q - s).norm();
}

namespace detail {

// Iterates S <- A'(S - S B (B'SB+R)^-1 B'S) A + Q until successive iterates agree.
inline Matrix dare_fixed_point(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                               const DareOptions& opt, int& iterations) {
  Matrix s = q;
  for (iterations = 1; iterations <= opt.max_iterations; ++iterations) {
    const Matrix btsb = b.transpose() * s * b + r;
    Matrix next = a.transpose() * (s - s * b * btsb.ldlt().solve(b.transpose() * s)) * a + q;
    next = symmetrize(next);
    const double delta = (next - s).norm();
    s = std::move(next);
    if (!s.allFinite()) break;
    if (delta < opt.tolerance * std::max(1.0, s.norm())) return s;
  }
  throw NumericalError("Riccati iteration did not converge in " + std::to_string(opt.max_iterations) +
                       " iterations (is (A, B) stabilizable?)");
}

// Doubling:  A_{k+1} = A_k (I + G_k H_k)^-1 A_k,
//            G_{k+1} = G_k + A_k (I + G_k H_k)^-1 G_k A_k',
//            H_{k+1} = H_k + A_k' H_k (I + G_k H_k)^-1 A_k,
// with A_0 = A, G_0 = B R^-1 B', H_0 = Q. H_k converges to S.
inline Matrix dare_doubling(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                            const DareOptions& opt, int& iterations) {
  const Index n = a.rows();
  const Matrix eye = Matrix::Identity(n, n);
  Matrix ak = a;
  Matrix g = symmetrize(b * r.ldlt().solve(b.transpose()));
  Matrix h = q;
  const int cap = std::min(opt.max_iterations, 200);
  for (iterations = 1; iterations <= cap; ++iterations) {
    Eigen::PartialPivLU<Matrix> lu(eye + g * h);
    const Matrix w_a = lu.solve(ak);
    const Matrix w_g = lu.solve(g);
    Matrix h_next = symmetrize(h + ak.transpose() * h * w_a);
    Matrix g_next = symmetrize(g + ak * w_g * ak.transpose());
    Matrix a_next = ak * w_a;
    const double delta = (h_next - h).norm();
    h = std::move(h_next);
    g = std::move(g_next);
    ak = std::move(a_next);
    if (!h.allFinite()) break;
    if (delta < opt.tolerance * std::max(1.0, h.norm())) return h;
  }
  throw NumericalError("Riccati doubling did not converge (is (A, B) stabilizable?)");
}

}  // namespace detail

/// Solves the discounted DARE with the discount folded in as A -> sqrt(beta) A,
/// B -> sqrt(beta) B, then L = (B'SB + Pc)^-1 B'SA on the scaled pair.
/// Throws NumericalError on non-convergence, a residual above
/// opt.residual_tolerance, or an unstable closed loop.
inline LqrSolution solve_dare(const LinearSystemModel& model, const LqrConfig& cfg, const DareOptions& opt = {}) {
  cfg.validate(model.state_dim(), model.input_dim());
  const double root_beta = std::sqrt(cfg.discount);
  const Matrix a = root_beta * model.A();
  const Matrix b = root_beta * model.B();
  const Matrix& q = cfg.state_cost;
  const Matrix& r = cfg.control_cost;

  LqrSolution sol;
  sol.cost_to_go = opt.method == DareMethod::kDoubling ? detail::dare_doubling(a, b, q, r, opt, sol.iterations)
                                                       : detail::dare_fixed_point(a, b, q, r, opt, sol.iterations);
  const Matrix& s = sol.cost_to_go;
  sol.gain = (b.transpose() * s * b + r).ldlt().solve(b.transpose() * s * a);
  sol.residual = riccati_defect(a, b, q, r, s);
  if (!(sol.residual < opt.residual_tolerance * std::max(1.0, s.norm()))) {
    throw NumericalError("Riccati residual " + std::to_string(sol.residual) + " exceeds tolerance");
  }
  const double rho = detail::spectral_radius(a - b * sol.gain);
  if (!(rho < 1.0)) {
    throw NumericalError("closed loop is not stable (spectral radius " + std::to_string(rho) + ")");
  }
  return sol;
}

/// u = -L xhat.
inline Vector act(const LqrSolution& sol, const Vector& xhat) {
  detail::require(xhat.size() == sol.gain.cols(), "estimate has length " + std::to_string(xhat.size()) +
                                                      ", gain expects " + std::to_string(sol.gain.cols()));
  return -sol.gain * xhat;
}

/// beta^t (x'Qx + u'Pc u).
inline double running_cost(const Vector& x, const Vector& u, const LqrConfig& cfg, std::int64_t t) {
  const double stage = x.dot(cfg.state_cost * x) + u.dot(cfg.control_cost * u);
  return cfg.discount == 1.0 ? stage : std::pow(cfg.discount, static_cast<double>(t)) * stage;
}

/// Suspicion-weighted average of the leave-one-out means. A suspicious sensor
/// n pulls the estimate toward x^n, the estimate that ignores it.
///
/// With `full_filter_weight` set, the all-sensor estimate enters with that
/// weight (typically the no-attacker probability 1 - sum(pi)).
///
/// Returns nullopt when every weight is zero; the caller falls back to the
/// all-sensor filter.
inline std::optional<Vector> weighted_estimate(const FilterBank& bank, std::span<const double> pi,
                                               double full_filter_weight = 0.0) {
  detail::require(static_cast<Index>(pi.size()) == bank.size(),
                  "suspicious-level vector has " + std::to_string(pi.size()) + " entries, bank has " +
                      std::to_string(bank.size()));
  detail::require(full_filter_weight >= 0.0, "full-filter weight must be non-negative");
  Vector acc = Vector::Zero(bank.model().state_dim());
  double total = 0.0;
  for (Index n = 0; n < bank.size(); ++n) {
    const double w = pi[static_cast<std::size_t>(n)];
    detail::require(w >= 0.0 && w <= 1.0 && std::isfinite(w), "suspicious levels must lie in [0, 1]");
    if (w == 0.0) continue;
    acc += w * bank.member(n).mean;
    total += w;
  }
  if (full_filter_weight > 0.0) {
    acc += full_filter_weight * bank.full().mean;
    total += full_filter_weight;
  }
  if (total <= 0.0) return std::nullopt;
  return Vector(acc / total);
}

}  // namespace trustctl
