#pragma once

// Batch aggregation: detection statistics, detection-time CDF, ROC sweep over
// the detection threshold, and average cost.

#include "trustctl/sim.hpp"

#include <limits>
#include <span>
#include <vector>

namespace trustctl {

/// Per-realization detection outcome. A realization whose first detection
/// names an honest sensor is a false alarm and is excluded from the detection
/// times and from the CDF population.
struct DetectionStats {
  std::vector<std::optional<std::int64_t>> detection_times;  // slot of first correct detection
  std::size_t false_alarms = 0;
  std::size_t undetected = 0;
  std::size_t failed = 0;  // realizations that errored; not counted elsewhere
  std::int64_t horizon = 0;

  std::size_t realizations() const noexcept { return detection_times.size(); }
  std::size_t detected() const noexcept { return realizations() - false_alarms - undetected; }
  /// Realizations that count toward the CDF.
  std::size_t population() const noexcept { return realizations() - false_alarms; }

  double false_alarm_rate() const {
    return realizations() == 0 ? 0.0 : static_cast<double>(false_alarms) / static_cast<double>(realizations());
  }
  double undetected_fraction() const {
    return population() == 0 ? 0.0 : static_cast<double>(undetected) / static_cast<double>(population());
  }
};

inline DetectionStats detection_stats(std::span<const BatchItem> batch, std::int64_t horizon) {
  DetectionStats stats;
  stats.horizon = horizon;
  for (const auto& item : batch) {
    if (!item.result) {
      ++stats.failed;
      continue;
    }
    const auto& res = *item.result;
    if (!res.first_detection) {
      ++stats.undetected;
      stats.detection_times.emplace_back();
    } else if (res.false_alarm) {
      ++stats.false_alarms;
      stats.detection_times.emplace_back();
    } else {
      stats.detection_times.emplace_back(res.first_detection->slot);
    }
  }
  return stats;
}

struct CdfPoint {
  std::int64_t slot = 0;  // number of elapsed slots
  double fraction = 0.0;
};

/// Fraction of the non-false-alarm population detected within the first k
/// slots, for k = 1..horizon.
inline std::vector<CdfPoint> detection_cdf(const DetectionStats& stats, std::int64_t horizon) {
  detail::require(stats.realizations() > 0, "detection statistics are empty");
  detail::require(horizon >= 1, "horizon must be at least 1");
  std::vector<std::size_t> hits(static_cast<std::size_t>(horizon) + 1, 0);
  for (const auto& t : stats.detection_times) {
    if (t && *t < horizon) ++hits[static_cast<std::size_t>(*t) + 1];
  }
  const double pop = static_cast<double>(stats.population());
  std::vector<CdfPoint> cdf;
  cdf.reserve(static_cast<std::size_t>(horizon));
  std::size_t cum = 0;
  for (std::int64_t k = 1; k <= horizon; ++k) {
    cum += hits[static_cast<std::size_t>(k)];
    cdf.push_back(CdfPoint{k, pop > 0 ? static_cast<double>(cum) / pop : 0.0});
  }
  return cdf;
}

/// Mean number of elapsed slots until correct detection; NaN if none.
inline double mean_detection_delay(const DetectionStats& stats) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& t : stats.detection_times) {
    if (t) {
      sum += static_cast<double>(*t + 1);
      ++count;
    }
  }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count);
}

struct RocPoint {
  double threshold = 0.0;
  double mean_delay = 0.0;
  double false_alarm_rate = 0.0;
  double undetected_fraction = 0.0;
};

/// One batch per threshold, all with the same realization seeds.
inline std::vector<RocPoint> roc_sweep(const SimConfig& cfg, std::span<const double> thresholds,
                                       std::size_t realizations, unsigned threads = 0) {
  std::vector<RocPoint> out;
  out.reserve(thresholds.size());
  for (double th : thresholds) {
    detail::require(th > 0.0 && th < 1.0, "ROC thresholds must lie in (0, 1)");
    SimConfig local = cfg;
    local.detection_threshold = th;
    const auto batch = run_batch(local, realizations, cfg.seed, threads);
    const auto stats = detection_stats(batch, cfg.horizon);
    out.push_back(RocPoint{th, mean_detection_delay(stats), stats.false_alarm_rate(), stats.undetected_fraction()});
  }
  return out;
}

/// Mean over realizations of total_cost / horizon. Failed realizations are skipped.
inline double average_cost(std::span<const ExperimentResult> results) {
  detail::require(!results.empty(), "average_cost needs at least one result");
  double sum = 0.0;
  for (const auto& r : results) {
    detail::require(!r.records.empty(), "result has no slots");
    sum += r.total_cost / static_cast<double>(r.records.size());
  }
  return sum / static_cast<double>(results.size());
}

inline double average_cost(std::span<const BatchItem> batch) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& item : batch) {
    if (!item.result) continue;
    detail::require(!item.result->records.empty(), "result has no slots");
    sum += item.result->total_cost / static_cast<double>(item.result->records.size());
    ++count;
  }
  detail::require(count > 0, "every realization in the batch failed");
  return sum / static_cast<double>(count);
}

enum class SweepParameter { kFrequency, kAmplitude };

struct CostPoint {
  double value = 0.0;
  double weighted_cost = 0.0;
  double full_trust_cost = 0.0;
};

/// Average cost of the weighted and full-trust controllers at each attacker
/// frequency or amplitude, with common seeds across points and modes.
inline std::vector<CostPoint> cost_sweep(const SimConfig& cfg, SweepParameter param, std::span<const double> values,
                                         std::size_t realizations, unsigned threads = 0) {
  std::vector<CostPoint> out;
  out.reserve(values.size());
  for (double v : values) {
    SimConfig local = cfg;
    if (param == SweepParameter::kFrequency) {
      local.attacker.frequency = v;
    } else {
      local.attacker.amplitude = v;
    }
    CostPoint p{v, 0.0, 0.0};
    local.control_mode = ControlMode::kWeighted;
    p.weighted_cost = average_cost(std::span<const BatchItem>(run_batch(local, realizations, cfg.seed, threads)));
    local.control_mode = ControlMode::kFullTrust;
    p.full_trust_cost = average_cost(std::span<const BatchItem>(run_batch(local, realizations, cfg.seed, threads)));
    out.push_back(p);
  }
  return out;
}

}  // namespace trustctl
