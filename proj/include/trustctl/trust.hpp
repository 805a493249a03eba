#pragma once

// Suspicious levels from accumulated honest-report log-likelihoods.
//
// With l_n the running sum of log N(y_n; u^n, s^n) and prior odds L of "no
// attacker" versus "one attacker",
//
//   pi_n = exp(-l_n) / (L + sum_m exp(-l_m)).
//
// L = 0 is the one-attacker model, where the levels sum to one. The
// attacker-report density is a constant shared by all sensors; it cancels
// for L = 0 and is folded into L otherwise.

#include "trustctl/estimator.hpp"

#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace trustctl {

/// log N(y; mean, var).
inline double gaussian_log_density(double y, double mean, double var) {
  const double r = y - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + r * r / var);
}

/// Log-domain evaluation of the suspicious levels for log-likelihoods `loglik`.
inline std::vector<double> compute_pi(std::span<const double> loglik, double prior_odds) {
  detail::require(prior_odds >= 0.0 && std::isfinite(prior_odds), "prior odds must be finite and non-negative");
  std::vector<double> pi(loglik.size(), 0.0);
  if (loglik.empty()) return pi;

  double top = -std::numeric_limits<double>::infinity();
  for (double l : loglik) top = std::max(top, -l);
  const double log_prior = prior_odds > 0.0 ? std::log(prior_odds) : -std::numeric_limits<double>::infinity();
  top = std::max(top, log_prior);

  double denom = prior_odds > 0.0 ? std::exp(log_prior - top) : 0.0;
  for (std::size_t n = 0; n < loglik.size(); ++n) {
    pi[n] = std::exp(-loglik[n] - top);
    denom += pi[n];
  }
  for (double& p : pi) p /= denom;
  return pi;
}

/// Smallest-index sensor whose level exceeds `threshold`.
inline std::optional<Index> detect(std::span<const double> pi, double threshold) {
  detail::require(threshold > 0.0 && threshold < 1.0, "detection threshold must lie in (0, 1)");
  for (std::size_t n = 0; n < pi.size(); ++n) {
    if (pi[n] > threshold) return static_cast<Index>(n);
  }
  return std::nullopt;
}

enum class SlotOutcome { kAccepted, kRejectedNonFinite };

class TrustState {
 public:
  /// `forgetting` in (0, 1] discounts past evidence; 1 keeps the full sum.
  explicit TrustState(Index sensors, double prior_odds = 0.0, double forgetting = 1.0)
      : loglik_(static_cast<std::size_t>(sensors), 0.0), prior_odds_(prior_odds), forgetting_(forgetting) {
    detail::require(sensors > 0, "trust state needs at least one sensor");
    detail::require(forgetting > 0.0 && forgetting <= 1.0, "forgetting factor must lie in (0, 1]");
    pi_ = compute_pi(loglik_, prior_odds_);
  }

  /// Scores each report y(n) under preds[n]. A non-finite report or
  /// prediction rejects the whole slot and leaves the state unchanged.
  SlotOutcome slot_update(std::span<const PredictiveDistribution> preds, const Vector& y) {
    detail::require(preds.size() == loglik_.size() && y.size() == static_cast<Index>(loglik_.size()),
                    "trust update expects one prediction and one report per sensor");
    std::vector<double> contrib(loglik_.size());
    for (std::size_t n = 0; n < loglik_.size(); ++n) {
      const auto& p = preds[n];
      detail::require(p.sensor == static_cast<Index>(n), "predictions must be ordered by sensor");
      const double yn = y(static_cast<Index>(n));
      if (!std::isfinite(yn) || !std::isfinite(p.mean) || !std::isfinite(p.var) || !(p.var > 0.0)) {
        ++rejected_;
        return SlotOutcome::kRejectedNonFinite;
      }
      contrib[n] = gaussian_log_density(yn, p.mean, p.var);
    }
    for (std::size_t n = 0; n < loglik_.size(); ++n) loglik_[n] = forgetting_ * loglik_[n] + contrib[n];
    pi_ = compute_pi(loglik_, prior_odds_);
    return SlotOutcome::kAccepted;
  }

  const std::vector<double>& loglik() const noexcept { return loglik_; }
  const std::vector<double>& pi() const noexcept { return pi_; }
  double prior_odds() const noexcept { return prior_odds_; }
  double forgetting() const noexcept { return forgetting_; }
  std::size_t rejected_slots() const noexcept { return rejected_; }

  /// Probability that no sensor is the attacker, 1 - sum(pi); zero when L = 0.
  double no_attacker_probability() const {
    if (prior_odds_ == 0.0) return 0.0;
    double s = 0.0;
    for (double p : pi_) s += p;
    return std::max(0.0, 1.0 - s);
  }

 private:
  std::vector<double> loglik_;
  std::vector<double> pi_;
  double prior_odds_;
  double forgetting_;
  std::size_t rejected_ = 0;
};

}  // namespace trustctl
