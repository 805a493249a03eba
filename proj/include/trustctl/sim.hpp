#pragma once

// Closed-loop realization of the trust-aware controller. Each slot:
//   observe -> corrupt -> filter update -> trust update -> estimate ->
//   control -> record -> plant step -> filter predict.

#include "trustctl/controller.hpp"
#include "trustctl/threat.hpp"
#include "trustctl/trust.hpp"

#include <atomic>
#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace trustctl {

enum class ControlMode {
  kFullTrust,     // all-sensor filter
  kWeighted,      // suspicion-weighted leave-one-out estimate
  kOmitDetected,  // all-sensor filter, then drop the first detected sensor for good
};

inline std::string_view to_string(ControlMode m) {
  switch (m) {
    case ControlMode::kFullTrust: return "full_trust";
    case ControlMode::kWeighted: return "weighted";
    case ControlMode::kOmitDetected: return "omit_detected";
  }
  return "weighted";
}

inline std::optional<ControlMode> parse_control_mode(std::string_view s) {
  if (s == "full_trust") return ControlMode::kFullTrust;
  if (s == "weighted") return ControlMode::kWeighted;
  if (s == "omit_detected") return ControlMode::kOmitDetected;
  return std::nullopt;
}

struct SimConfig {
  std::shared_ptr<const LinearSystemModel> model;
  LqrConfig lqr;
  AttackerConfig attacker;
  std::int64_t horizon = 200;
  std::uint64_t seed = 1;
  ControlMode control_mode = ControlMode::kWeighted;
  double prior_odds = 0.0;
  double detection_threshold = 0.7;
  double initial_state_var = 1.0;  // x(0) ~ N(0, s I)
  double filter_prior_var = 1.0;   // P(0|-1) = p I
  double forgetting = 1.0;
  bool include_full_filter_weight = false;

  void validate() const {
    using detail::require;
    require(model != nullptr, "simulation needs a model");
    require(horizon >= 1, "horizon must be at least 1");
    require(detection_threshold > 0.0 && detection_threshold < 1.0, "detection_threshold must lie in (0, 1)");
    require(prior_odds >= 0.0 && std::isfinite(prior_odds), "prior_odds must be finite and non-negative");
    require(initial_state_var >= 0.0 && std::isfinite(initial_state_var), "initial_state_var must be non-negative");
    require(filter_prior_var > 0.0 && std::isfinite(filter_prior_var), "filter_prior_var must be positive");
    require(forgetting > 0.0 && forgetting <= 1.0, "forgetting must lie in (0, 1]");
    lqr.validate(model->state_dim(), model->input_dim());
    attacker.validate(model->sensor_count());
  }
};

struct SlotRecord {
  std::int64_t t = 0;
  std::vector<double> pi;
  double cost = 0.0;
  double state_norm = 0.0;
  bool attacked = false;
  std::optional<Index> detection;
};

struct Detection {
  std::int64_t slot = 0;
  Index sensor = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct ExperimentResult {
  std::vector<SlotRecord> records;
  double total_cost = 0.0;
  std::optional<Detection> first_detection;
  bool false_alarm = false;  // first detection named an honest sensor
  std::size_t rejected_slots = 0;
};

/// Seeds of the plant-noise and attack streams of one realization.
inline std::uint64_t plant_stream_seed(std::uint64_t seed) { return derive_seed(seed, 1); }
inline std::uint64_t attack_stream_seed(std::uint64_t seed) { return derive_seed(seed, 2); }

/// Seed of realization r in a batch.
inline std::uint64_t realization_seed(std::uint64_t seed_base, std::uint64_t r) { return derive_seed(seed_base, r); }

/// Runs one realization against a precomputed LQR solution.
inline ExperimentResult run(const SimConfig& cfg, const LqrSolution& lqr) {
  cfg.validate();
  const auto& model = *cfg.model;
  const Index n = model.state_dim();
  const Index m = model.sensor_count();
  const bool attacker_active = cfg.attacker.mode != AttackMode::kNone;

  Rng plant_rng(plant_stream_seed(cfg.seed));
  Rng attack_rng(attack_stream_seed(cfg.seed));

  PlantState plant{std::sqrt(cfg.initial_state_var) * detail::standard_normal(n, plant_rng), 0};
  FilterBank bank(cfg.model, cfg.filter_prior_var);
  TrustState trust(m, cfg.prior_odds, cfg.forgetting);
  std::optional<Index> omitted;

  ExperimentResult result;
  result.records.reserve(static_cast<std::size_t>(cfg.horizon));

  for (std::int64_t t = 0; t < cfg.horizon; ++t) {
    const Vector clean = observe(model, plant, plant_rng);
    const Corruption reports = corrupt(cfg.attacker, clean, attack_rng);

    bank.update(reports.y);
    const auto preds = bank.predictive_all();
    trust.slot_update(preds, reports.y);
    const auto& pi = trust.pi();
    const auto detected = detect(pi, cfg.detection_threshold);
    if (detected && !result.first_detection) {
      result.first_detection = Detection{t, *detected};
      result.false_alarm = !attacker_active || *detected != cfg.attacker.target;
    }

    Vector xhat;
    switch (cfg.control_mode) {
      case ControlMode::kFullTrust:
        xhat = bank.full().mean;
        break;
      case ControlMode::kWeighted: {
        const double full_weight = cfg.include_full_filter_weight ? trust.no_attacker_probability() : 0.0;
        auto est = weighted_estimate(bank, pi, full_weight);
        xhat = est ? std::move(*est) : bank.full().mean;
        break;
      }
      case ControlMode::kOmitDetected:
        if (!omitted && detected) omitted = detected;
        xhat = omitted ? bank.member(*omitted).mean : bank.full().mean;
        break;
    }

    const Vector u = act(lqr, xhat);
    const double cost = running_cost(plant.x, u, cfg.lqr, t);
    result.total_cost += cost;
    result.records.push_back(SlotRecord{t, pi, cost, plant.x.norm(), reports.attacked, detected});

    plant = step(model, plant, u, plant_rng);
    bank.predict(u);
  }
  result.rejected_slots = trust.rejected_slots();
  return result;
}

inline ExperimentResult run(const SimConfig& cfg) {
  cfg.validate();
  return run(cfg, solve_dare(*cfg.model, cfg.lqr));
}

struct BatchItem {
  std::uint64_t seed = 0;
  std::optional<ExperimentResult> result;
  std::string error;  // set when the realization failed
};

/// Runs `realizations` independent realizations; realization r uses
/// realization_seed(seed_base, r). Output order and content do not depend on
/// `threads` (0 = hardware concurrency).
inline std::vector<BatchItem> run_batch(const SimConfig& cfg, std::size_t realizations, std::uint64_t seed_base,
                                        unsigned threads = 0) {
  detail::require(realizations >= 1, "a batch needs at least one realization");
  cfg.validate();
  const LqrSolution lqr = solve_dare(*cfg.model, cfg.lqr);

  std::vector<BatchItem> items(realizations);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next.fetch_add(1); r < realizations; r = next.fetch_add(1)) {
      auto& item = items[r];
      item.seed = realization_seed(seed_base, r);
      SimConfig local = cfg;
      local.seed = item.seed;
      try {
        item.result = run(local, lqr);
      } catch (const std::exception& e) {
        item.error = e.what();
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, realizations));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  return items;
}

}  // namespace trustctl
