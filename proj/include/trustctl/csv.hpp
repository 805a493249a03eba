#pragma once

// Plot-ready CSV output. Every file may be prefixed with '#' metadata lines;
// column order is fixed.

#include "trustctl/metrics.hpp"

#include <cstdio>
#include <ostream>
#include <string>

namespace trustctl::csv {

inline std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// t,pi_1..pi_N,cost,state_norm,attacked
inline void write_trace(std::ostream& os, const ExperimentResult& res, Index sensors) {
  os << "t";
  for (Index n = 1; n <= sensors; ++n) os << ",pi_" << n;
  os << ",cost,state_norm,attacked\n";
  for (const auto& r : res.records) {
    os << r.t;
    for (double p : r.pi) os << ',' << number(p);
    os << ',' << number(r.cost) << ',' << number(r.state_norm) << ',' << (r.attacked ? 1 : 0) << '\n';
  }
}

/// slot,fraction
inline void write_cdf(std::ostream& os, const std::vector<CdfPoint>& cdf) {
  os << "slot,fraction\n";
  for (const auto& p : cdf) os << p.slot << ',' << number(p.fraction) << '\n';
}

/// threshold,mean_delay,false_alarm_rate,undetected_fraction
inline void write_roc(std::ostream& os, const std::vector<RocPoint>& roc) {
  os << "threshold,mean_delay,false_alarm_rate,undetected_fraction\n";
  for (const auto& p : roc) {
    os << number(p.threshold) << ',' << number(p.mean_delay) << ',' << number(p.false_alarm_rate) << ','
       << number(p.undetected_fraction) << '\n';
  }
}

/// <parameter>,weighted_cost,full_trust_cost
inline void write_cost(std::ostream& os, const std::vector<CostPoint>& points, SweepParameter param) {
  os << (param == SweepParameter::kFrequency ? "frequency" : "amplitude") << ",weighted_cost,full_trust_cost\n";
  for (const auto& p : points) {
    os << number(p.value) << ',' << number(p.weighted_cost) << ',' << number(p.full_trust_cost) << '\n';
  }
}

}  // namespace trustctl::csv
