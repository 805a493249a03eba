#pragma once

#include "trustctl/types.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace trustctl {

enum class AttackMode {
  kNone,
  kReplace,   // y[target] <- g
  kAdditive,  // y[target] <- y[target] + g
};

inline std::string_view to_string(AttackMode m) {
  switch (m) {
    case AttackMode::kNone: return "none";
    case AttackMode::kReplace: return "replace";
    case AttackMode::kAdditive: return "additive";
  }
  return "none";
}

inline std::optional<AttackMode> parse_attack_mode(std::string_view s) {
  if (s == "none") return AttackMode::kNone;
  if (s == "replace") return AttackMode::kReplace;
  if (s == "additive") return AttackMode::kAdditive;
  return std::nullopt;
}

/// One attacker against one sensor. g ~ N(0, amplitude) fires with
/// probability `frequency` each slot.
struct AttackerConfig {
  Index target = 0;
  AttackMode mode = AttackMode::kNone;
  double frequency = 0.0;
  double amplitude = 0.0;

  void validate(Index sensor_count) const {
    detail::require(target >= 0 && target < sensor_count,
                    "attacker target " + std::to_string(target) + " is not a sensor index");
    detail::require(frequency >= 0.0 && frequency <= 1.0, "attacker frequency must lie in [0, 1]");
    detail::require(amplitude >= 0.0 && std::isfinite(amplitude), "attacker amplitude must be non-negative");
  }

  friend bool operator==(const AttackerConfig&, const AttackerConfig&) = default;
};

struct Corruption {
  Vector y;
  bool attacked = false;
};

/// Applies the attack to a copy of `y`. Draws from `rng` only when an attack
/// is configured: one uniform per slot, plus one normal when it fires.
inline Corruption corrupt(const AttackerConfig& cfg, const Vector& y, Rng& rng) {
  Corruption out{y, false};
  if (cfg.mode == AttackMode::kNone) return out;
  detail::require(cfg.target >= 0 && cfg.target < y.size(), "attacker target outside the observation vector");

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (!(coin(rng) < cfg.frequency)) return out;

  std::normal_distribution<double> noise(0.0, std::sqrt(cfg.amplitude));
  const double g = cfg.amplitude > 0.0 ? noise(rng) : 0.0;
  if (cfg.mode == AttackMode::kReplace) {
    out.y(cfg.target) = g;
  } else {
    out.y(cfg.target) += g;
  }
  out.attacked = true;
  return out;
}

}  // namespace trustctl
