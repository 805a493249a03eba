#pragma once

// Discrete-time linear plant
//
//   x(t+1) = A x(t) + B u(t) + w(t),   w ~ N(0, W)
//   y(t)   = C x(t) + n(t),            n ~ N(0, V)
//
// and the 7-state power-grid case study obtained by forward-Euler
// discretization of  dx/dt = -M^-1 K x - M^-1 u + w.

#include "trustctl/types.hpp"

#include <cstdint>
#include <utility>

namespace trustctl {

class LinearSystemModel {
 public:
  /// Validates dimensions and noise covariances; throws ValidationError.
  LinearSystemModel(Matrix a, Matrix b, Matrix c, Matrix w, Matrix v)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), w_(std::move(w)), v_(std::move(v)) {
    validate();
    w_sqrt_ = detail::psd_sqrt(w_);
    v_sqrt_ = detail::psd_sqrt(v_);
  }

  const Matrix& A() const noexcept { return a_; }
  const Matrix& B() const noexcept { return b_; }
  const Matrix& C() const noexcept { return c_; }
  const Matrix& W() const noexcept { return w_; }
  const Matrix& V() const noexcept { return v_; }

  Index state_dim() const noexcept { return a_.rows(); }
  Index input_dim() const noexcept { return b_.cols(); }
  Index sensor_count() const noexcept { return c_.rows(); }

  /// Symmetric square roots of W and V, cached for sampling.
  const Matrix& process_noise_sqrt() const noexcept { return w_sqrt_; }
  const Matrix& measurement_noise_sqrt() const noexcept { return v_sqrt_; }

  friend bool operator==(const LinearSystemModel& l, const LinearSystemModel& r) {
    return detail::same(l.a_, r.a_) && detail::same(l.b_, r.b_) && detail::same(l.c_, r.c_) &&
           detail::same(l.w_, r.w_) && detail::same(l.v_, r.v_);
  }

 private:
  void validate() const {
    using detail::require;
    using detail::shape;
    const Index n = a_.rows();
    require(n > 0, "A must be non-empty");
    require(a_.cols() == n, "A must be square, got " + shape(a_));
    require(b_.rows() == n, "B must have " + std::to_string(n) + " rows, got " + shape(b_));
    require(c_.cols() == n, "C must have " + std::to_string(n) + " columns, got " + shape(c_));
    require(c_.rows() > 0, "C must have at least one row");
    require(w_.rows() == n && w_.cols() == n, "W must be " + std::to_string(n) + "x" + std::to_string(n) + ", got " + shape(w_));
    const Index m = c_.rows();
    require(v_.rows() == m && v_.cols() == m, "V must be " + std::to_string(m) + "x" + std::to_string(m) + ", got " + shape(v_));
    require(a_.allFinite() && b_.allFinite() && c_.allFinite() && w_.allFinite() && v_.allFinite(),
            "model matrices must be finite");
    require(detail::is_symmetric(w_), "W must be symmetric");
    require(detail::is_symmetric(v_), "V must be symmetric");
    // V = 0 is allowed for noiseless observation; the filters then report a
    // singular innovation covariance if no process noise compensates.
    const double w_scale = std::max(1.0, w_.cwiseAbs().maxCoeff());
    const double v_scale = std::max(1.0, v_.cwiseAbs().maxCoeff());
    require(detail::min_eigenvalue(w_) >= -1e-12 * w_scale, "W must be positive semidefinite");
    require(detail::min_eigenvalue(v_) >= -1e-12 * v_scale, "V must be positive semidefinite");
  }

  Matrix a_, b_, c_, w_, v_;
  Matrix w_sqrt_, v_sqrt_;
};

struct PlantState {
  Vector x;
  std::int64_t t = 0;
};

/// Advances the plant one slot with a fresh process-noise draw.
inline PlantState step(const LinearSystemModel& model, const PlantState& state, const Vector& u, Rng& rng) {
  detail::require(state.x.size() == model.state_dim(),
                  "state has length " + std::to_string(state.x.size()) + ", model expects " +
                      std::to_string(model.state_dim()));
  detail::require(u.size() == model.input_dim(),
                  "control has length " + std::to_string(u.size()) + ", model expects " +
                      std::to_string(model.input_dim()));
  const Vector w = model.process_noise_sqrt() * detail::standard_normal(model.state_dim(), rng);
  return PlantState{model.A() * state.x + model.B() * u + w, state.t + 1};
}

/// Noisy sensor reports y = C x + n.
inline Vector observe(const LinearSystemModel& model, const PlantState& state, Rng& rng) {
  detail::require(state.x.size() == model.state_dim(),
                  "state has length " + std::to_string(state.x.size()) + ", model expects " +
                      std::to_string(model.state_dim()));
  return model.C() * state.x +
         model.measurement_noise_sqrt() * detail::standard_normal(model.sensor_count(), rng);
}

struct ContinuousCaseStudy {
  Matrix mass;       // M
  Matrix stiffness;  // K
  double dt = 0.01;

  friend bool operator==(const ContinuousCaseStudy& l, const ContinuousCaseStudy& r) {
    return detail::same(l.mass, r.mass) && detail::same(l.stiffness, r.stiffness) && l.dt == r.dt;
  }
};

/// Default noise levels for the case study.
inline constexpr double kDefaultProcessNoise = 1e-4;      // W_base = 1e-4 I
inline constexpr double kDefaultMeasurementNoise = 1e-2;  // V = 1e-2 I
inline constexpr double kDefaultStep = 0.01;

inline Matrix power_grid_mass() {
  Matrix m(7, 7);
  m << 2.1, 1.55, 1.55, 0, 0, 0, 0,
       1.55, 1.651, 1.55, 0, 0, 0, 0,
       1.55, 1.55, 1.605, 0, 0, 0, 0,
       0, 0, 0, 2.04, 1.49, 0, 0,
       0, 0, 0, 1.49, 1.526, 0, 0,
       0, 0, 0, 0, 0, -1786.9, 0,
       0, 0, 0, 0, 0, 0, 1;
  return m;
}

inline Matrix power_grid_stiffness() {
  Matrix k(7, 7);
  k << 0.0211, 0, 0, 2.04, 1.49, 1.43, -1.025,
       0, 0.0007, 0, 0, 0, 0, 0,
       0, 0, 0.0131, 0, 0, 0, 0,
       -2.1, -1.55, -1.55, 0.0211, 0, -1.039, -1.397,
       0, 0, 0, 0, 0.054, 0, 0,
       -0.014, -0.362, -0.362, -1.428, -0.79, 0, 0,
       0, 0, 0, 0, 0, -1, 0;
  return k;
}

inline ContinuousCaseStudy power_grid_case_study(double dt = kDefaultStep) {
  return ContinuousCaseStudy{power_grid_mass(), power_grid_stiffness(), dt};
}

/// Forward-Euler discretization:
///   A = I - dt M^-1 K,  B = -dt M^-1,  C = I,  W = dt^2 W_base.
/// dt = 0 is accepted and yields A = I, B = 0.
inline LinearSystemModel build_case_study(const ContinuousCaseStudy& cs, const Matrix& process_noise_base,
                                          const Matrix& measurement_noise) {
  using detail::require;
  const Index n = cs.mass.rows();
  require(n > 0 && cs.mass.cols() == n, "M must be square and non-empty, got " + detail::shape(cs.mass));
  require(cs.stiffness.rows() == n && cs.stiffness.cols() == n,
          "K must match M (" + detail::shape(cs.mass) + "), got " + detail::shape(cs.stiffness));
  require(std::isfinite(cs.dt) && cs.dt >= 0.0, "dt must be a non-negative finite number");

  Eigen::FullPivLU<Matrix> lu(cs.mass);
  if (!lu.isInvertible()) throw ValidationError("M is singular");
  const Matrix m_inv = lu.inverse();
  const Matrix eye = Matrix::Identity(n, n);
  return LinearSystemModel(eye - cs.dt * m_inv * cs.stiffness, -cs.dt * m_inv, eye,
                           cs.dt * cs.dt * process_noise_base, measurement_noise);
}

inline LinearSystemModel build_case_study(const ContinuousCaseStudy& cs) {
  const Index n = cs.mass.rows();
  return build_case_study(cs, kDefaultProcessNoise * Matrix::Identity(n, n),
                          kDefaultMeasurementNoise * Matrix::Identity(n, n));
}

}  // namespace trustctl
