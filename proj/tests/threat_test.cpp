#include "trustctl/threat.hpp"

#include <gtest/gtest.h>

namespace trustctl {
namespace {

const Vector kClean{{1.0, 2.0, 3.0}};

TEST(Corrupt, NoAttackIsIdentityAndDrawsNothing) {
  Rng rng(1);
  Rng untouched(1);
  const auto out = corrupt(AttackerConfig{1, AttackMode::kNone, 1.0, 5.0}, kClean, rng);
  EXPECT_EQ(out.y, kClean);
  EXPECT_FALSE(out.attacked);
  EXPECT_EQ(rng(), untouched());
}

TEST(Corrupt, ZeroFrequencyNeverFires) {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const auto out = corrupt(AttackerConfig{0, AttackMode::kReplace, 0.0, 1.0}, kClean, rng);
    EXPECT_FALSE(out.attacked);
    EXPECT_EQ(out.y, kClean);
  }
}

TEST(Corrupt, ZeroAmplitudeReplaceWritesZero) {
  Rng rng(3);
  const auto out = corrupt(AttackerConfig{2, AttackMode::kReplace, 1.0, 0.0}, kClean, rng);
  EXPECT_TRUE(out.attacked);
  EXPECT_EQ(out.y, (Vector{{1.0, 2.0, 0.0}}));
  const auto add = corrupt(AttackerConfig{2, AttackMode::kAdditive, 1.0, 0.0}, kClean, rng);
  EXPECT_EQ(add.y, kClean);
  EXPECT_TRUE(add.attacked);
}

TEST(Corrupt, OnlyTargetChanges) {
  Rng rng(4);
  for (auto mode : {AttackMode::kReplace, AttackMode::kAdditive}) {
    for (int t = 0; t < 200; ++t) {
      const auto out = corrupt(AttackerConfig{1, mode, 1.0, 10.0}, kClean, rng);
      EXPECT_EQ(out.y(0), kClean(0));
      EXPECT_EQ(out.y(2), kClean(2));
      EXPECT_NE(out.y(1), kClean(1));
    }
  }
}

TEST(Corrupt, FiringFrequencyIsBinomial) {
  const int trials = 100000;
  for (double f : {0.1, 0.2, 0.5}) {
    Rng rng(5);
    int fired = 0;
    for (int t = 0; t < trials; ++t) fired += corrupt(AttackerConfig{0, AttackMode::kAdditive, f, 1.0}, kClean, rng).attacked;
    const double sd = std::sqrt(trials * f * (1.0 - f));
    EXPECT_LT(std::abs(fired - trials * f), 3.0 * sd) << "f = " << f;
  }
}

TEST(Corrupt, InjectedVarianceMatchesAmplitude) {
  for (auto mode : {AttackMode::kReplace, AttackMode::kAdditive}) {
    Rng rng(6);
    const int trials = 100000;
    double sum = 0.0;
    double sq = 0.0;
    for (int t = 0; t < trials; ++t) {
      const double g = corrupt(AttackerConfig{0, mode, 1.0, 0.1}, kClean, rng).y(0) -
                       (mode == AttackMode::kAdditive ? kClean(0) : 0.0);
      sum += g;
      sq += g * g;
    }
    const double mean = sum / trials;
    const double var = sq / trials - mean * mean;
    EXPECT_NEAR(var, 0.1, 0.005);
    EXPECT_LT(std::abs(mean), 0.01);
  }
}

TEST(AttackerConfig, Validation) {
  EXPECT_NO_THROW((AttackerConfig{0, AttackMode::kReplace, 0.5, 1.0}.validate(3)));
  EXPECT_THROW((AttackerConfig{3, AttackMode::kReplace, 0.5, 1.0}.validate(3)), ValidationError);
  EXPECT_THROW((AttackerConfig{-1, AttackMode::kReplace, 0.5, 1.0}.validate(3)), ValidationError);
  EXPECT_THROW((AttackerConfig{0, AttackMode::kReplace, 1.5, 1.0}.validate(3)), ValidationError);
  EXPECT_THROW((AttackerConfig{0, AttackMode::kReplace, 0.5, -1.0}.validate(3)), ValidationError);
}

TEST(AttackMode, RoundTrip) {
  for (auto m : {AttackMode::kNone, AttackMode::kReplace, AttackMode::kAdditive}) {
    EXPECT_EQ(parse_attack_mode(to_string(m)), m);
  }
  EXPECT_FALSE(parse_attack_mode("jam"));
}

}  // namespace
}  // namespace trustctl
