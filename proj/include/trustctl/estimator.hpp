#pragma once

// Bank of Kalman filters used for cross-checking sensors. Member n runs on
// every report except sensor n's; one extra member runs on all reports.

#include "trustctl/linsys.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace trustctl {

struct FilterState {
  Vector mean;
  Matrix cov;
  std::optional<Index> excluded;  // nullopt for the all-sensor filter
};

/// Gaussian prediction of one sensor's next report, built without that sensor.
struct PredictiveDistribution {
  double mean = 0.0;
  double var = 1.0;
  Index sensor = 0;
};

/// Measurement update of a single filter on the rows `c` of the observation
/// model. An empty `c` leaves the state untouched.
inline void kalman_update(FilterState& f, const Matrix& c, const Matrix& v, const Vector& y) {
  if (c.rows() == 0) return;
  const Matrix ps = f.cov * c.transpose();
  const Matrix innovation_cov = detail::symmetrize(c * ps + v);
  Eigen::LLT<Matrix> llt(innovation_cov);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("innovation covariance is not positive definite");
  }
  // K = P C' S^-1, computed as (S^-1 C P)'.
  const Matrix gain = llt.solve(ps.transpose()).transpose();
  f.mean += gain * (y - c * f.mean);
  const Index n = f.cov.rows();
  f.cov = detail::symmetrize((Matrix::Identity(n, n) - gain * c) * f.cov);
}

class FilterBank {
 public:
  /// All members start from mean 0 and covariance prior_var * I.
  explicit FilterBank(std::shared_ptr<const LinearSystemModel> model, double prior_var = 1.0)
      : FilterBank(model, checked_zero_mean(model), default_prior_cov(model, prior_var)) {}

  /// All members start from the same prior x(0|-1) ~ N(prior_mean, prior_cov).
  FilterBank(std::shared_ptr<const LinearSystemModel> model, const Vector& prior_mean, const Matrix& prior_cov)
      : model_(std::move(model)) {
    detail::require(model_ != nullptr, "filter bank needs a model");
    const Index n = model_->state_dim();
    const Index m = model_->sensor_count();
    detail::require(prior_mean.size() == n, "prior mean has the wrong length");
    detail::require(prior_cov.rows() == n && prior_cov.cols() == n, "prior covariance has the wrong shape");
    const double scale = std::max(1.0, prior_cov.cwiseAbs().maxCoeff());
    detail::require(detail::is_symmetric(prior_cov) && detail::min_eigenvalue(prior_cov) >= -1e-12 * scale,
                    "prior covariance must be symmetric positive semidefinite");
    const FilterState init{prior_mean, prior_cov, std::nullopt};

    members_.reserve(static_cast<std::size_t>(m));
    views_.reserve(static_cast<std::size_t>(m));
    for (Index k = 0; k < m; ++k) {
      FilterState s = init;
      s.excluded = k;
      members_.push_back(std::move(s));
      views_.push_back(make_view(k));
    }
    full_ = init;
  }

  const LinearSystemModel& model() const noexcept { return *model_; }
  std::shared_ptr<const LinearSystemModel> model_ptr() const noexcept { return model_; }

  /// Number of leave-one-out members (one per sensor).
  Index size() const noexcept { return static_cast<Index>(members_.size()); }

  const FilterState& member(Index n) const {
    check_sensor(n);
    return members_[static_cast<std::size_t>(n)];
  }
  const FilterState& full() const noexcept { return full_; }

  /// Time update: mean <- A mean + B u, cov <- A cov A' + W.
  void predict(const Vector& u) {
    const auto& sys = *model_;
    detail::require(u.size() == sys.input_dim(), "control has length " + std::to_string(u.size()) +
                                                     ", model expects " + std::to_string(sys.input_dim()));
    const Vector drive = sys.B() * u;
    auto propagate = [&](FilterState& f) {
      f.mean = sys.A() * f.mean + drive;
      f.cov = detail::symmetrize(sys.A() * f.cov * sys.A().transpose() + sys.W());
    };
    for (auto& f : members_) propagate(f);
    propagate(full_);
  }

  /// Measurement update. Member n never reads y(n).
  void update(const Vector& y) {
    const auto& sys = *model_;
    detail::require(y.size() == sys.sensor_count(), "observation has length " + std::to_string(y.size()) +
                                                         ", model expects " + std::to_string(sys.sensor_count()));
    for (std::size_t k = 0; k < members_.size(); ++k) {
      const auto& view = views_[k];
      Vector reduced(static_cast<Index>(view.rows.size()));
      for (std::size_t i = 0; i < view.rows.size(); ++i) reduced(static_cast<Index>(i)) = y(view.rows[i]);
      kalman_update(members_[k], view.c, view.v, reduced);
    }
    kalman_update(full_, sys.C(), sys.V(), y);
  }

  /// Predictive law of y(n) given the member that excludes sensor n:
  /// mean c_n x^n, variance c_n P^n c_n' + V(n,n).
  PredictiveDistribution predictive_for_sensor(Index n) const {
    check_sensor(n);
    const auto& f = members_[static_cast<std::size_t>(n)];
    const auto c_n = model_->C().row(n);
    const double mean = c_n.dot(f.mean);
    const double var = c_n * f.cov * c_n.transpose() + model_->V()(n, n);
    return PredictiveDistribution{mean, var, n};
  }

  std::vector<PredictiveDistribution> predictive_all() const {
    std::vector<PredictiveDistribution> out;
    out.reserve(members_.size());
    for (Index n = 0; n < size(); ++n) out.push_back(predictive_for_sensor(n));
    return out;
  }

 private:
  static Vector checked_zero_mean(const std::shared_ptr<const LinearSystemModel>& model) {
    detail::require(model != nullptr, "filter bank needs a model");
    return Vector::Zero(model->state_dim());
  }

  static Matrix default_prior_cov(const std::shared_ptr<const LinearSystemModel>& model, double prior_var) {
    detail::require(model != nullptr, "filter bank needs a model");
    detail::require(std::isfinite(prior_var) && prior_var > 0.0, "filter prior variance must be positive");
    const Index n = model->state_dim();
    return prior_var * Matrix::Identity(n, n);
  }

  struct ReducedObservation {
    std::vector<Index> rows;
    Matrix c;
    Matrix v;
  };

  ReducedObservation make_view(Index excluded) const {
    const auto& sys = *model_;
    const Index m = sys.sensor_count();
    ReducedObservation view;
    for (Index i = 0; i < m; ++i) {
      if (i != excluded) view.rows.push_back(i);
    }
    const auto r = static_cast<Index>(view.rows.size());
    view.c.resize(r, sys.state_dim());
    view.v.resize(r, r);
    for (Index i = 0; i < r; ++i) {
      view.c.row(i) = sys.C().row(view.rows[static_cast<std::size_t>(i)]);
      for (Index j = 0; j < r; ++j) {
        view.v(i, j) = sys.V()(view.rows[static_cast<std::size_t>(i)], view.rows[static_cast<std::size_t>(j)]);
      }
    }
    return view;
  }

  void check_sensor(Index n) const {
    if (n < 0 || n >= size()) {
      throw ValidationError("sensor index " + std::to_string(n) + " out of range [0, " + std::to_string(size()) + ")");
    }
  }

  std::shared_ptr<const LinearSystemModel> model_;
  std::vector<FilterState> members_;
  std::vector<ReducedObservation> views_;
  FilterState full_;
};

}  // namespace trustctl
