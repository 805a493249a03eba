#pragma once

// JSON experiment specs and their execution.
//
// A spec names one experiment kind, the closed-loop configuration, an
// optional sweep and the output path:
//
//   {
//     "kind": "cdf",
//     "sim": {
//       "model": "case_study",
//       "attacker": {"mode": "replace", "target": 1, "frequency": 0.1, "amplitude": 0.1},
//       "horizon": 200, "prior_odds": 0.1
//     },
//     "realizations": 200,
//     "output": "fig5_f01.csv"
//   }
//
// Sensor numbers in files are 1-based. Unknown keys are rejected.

#include "trustctl/csv.hpp"
#include "trustctl/version.hpp"

#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace trustctl {

using Json = nlohmann::ordered_json;

enum class ExperimentKind { kTrace, kCdf, kRoc, kCostVsFrequency, kCostVsAmplitude };

inline std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kTrace: return "trace";
    case ExperimentKind::kCdf: return "cdf";
    case ExperimentKind::kRoc: return "roc";
    case ExperimentKind::kCostVsFrequency: return "cost_vs_frequency";
    case ExperimentKind::kCostVsAmplitude: return "cost_vs_amplitude";
  }
  return "trace";
}

inline std::optional<ExperimentKind> parse_experiment_kind(std::string_view s) {
  for (auto k : {ExperimentKind::kTrace, ExperimentKind::kCdf, ExperimentKind::kRoc, ExperimentKind::kCostVsFrequency,
                 ExperimentKind::kCostVsAmplitude}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

/// JSON key of the sweep grid for `kind`, or empty when the kind takes none.
inline std::string_view sweep_key(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kRoc: return "thresholds";
    case ExperimentKind::kCostVsFrequency: return "frequencies";
    case ExperimentKind::kCostVsAmplitude: return "amplitudes";
    default: return {};
  }
}

/// Where the plant comes from: the Euler-discretized case study, or explicit
/// matrices. For the case study `w` is the continuous-time W_base.
struct ModelSpec {
  std::optional<ContinuousCaseStudy> case_study;
  Matrix a, b, c;
  Matrix w, v;

  static ModelSpec power_grid() {
    ModelSpec s;
    s.case_study = power_grid_case_study();
    s.w = kDefaultProcessNoise * Matrix::Identity(7, 7);
    s.v = kDefaultMeasurementNoise * Matrix::Identity(7, 7);
    return s;
  }

  LinearSystemModel build() const {
    if (case_study) return build_case_study(*case_study, w, v);
    return LinearSystemModel(a, b, c, w, v);
  }

  friend bool operator==(const ModelSpec& l, const ModelSpec& r) {
    return l.case_study == r.case_study && detail::same(l.a, r.a) && detail::same(l.b, r.b) &&
           detail::same(l.c, r.c) && detail::same(l.w, r.w) && detail::same(l.v, r.v);
  }
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kTrace;
  ModelSpec model;
  SimConfig sim;  // sim.model is built from `model`
  std::vector<double> sweep;
  std::size_t realizations = 100;
  std::string output;

  friend bool operator==(const ExperimentSpec& l, const ExperimentSpec& r) {
    const auto& a = l.sim;
    const auto& b = r.sim;
    return l.kind == r.kind && l.model == r.model && l.sweep == r.sweep && l.realizations == r.realizations &&
           l.output == r.output && a.lqr == b.lqr && a.attacker == b.attacker && a.horizon == b.horizon &&
           a.seed == b.seed && a.control_mode == b.control_mode && a.prior_odds == b.prior_odds &&
           a.detection_threshold == b.detection_threshold && a.initial_state_var == b.initial_state_var &&
           a.filter_prior_var == b.filter_prior_var && a.forgetting == b.forgetting &&
           a.include_full_filter_weight == b.include_full_filter_weight;
  }
};

namespace detail {

inline void check_keys(const Json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError(path + ": unknown key \"" + key + "\"");
  }
}

inline std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

inline const Json& object_at(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  return j;
}

inline double number_at(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(path + ": expected a finite number");
  return v;
}

inline std::uint64_t unsigned_at(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
    throw ValidationError(path + ": expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

/// A nested row-major array, or a scalar meaning scalar * I(dim).
inline Matrix matrix_at(const Json& j, const std::string& path, std::optional<Index> dim) {
  if (j.is_number()) {
    if (!dim) throw ValidationError(path + ": a scalar is only accepted where the dimension is known");
    return number_at(j, path) * Matrix::Identity(*dim, *dim);
  }
  if (!j.is_array() || j.empty()) throw ValidationError(path + ": expected a non-empty array of rows");
  const auto rows = static_cast<Index>(j.size());
  Index cols = -1;
  Matrix m;
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!row.is_array()) throw ValidationError(rp + ": expected an array");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      if (cols == 0) throw ValidationError(rp + ": empty row");
      m.resize(rows, cols);
    } else if (static_cast<Index>(row.size()) != cols) {
      throw ValidationError(rp + ": ragged matrix");
    }
    for (Index k = 0; k < cols; ++k) {
      m(i, k) = number_at(row[static_cast<std::size_t>(k)], rp + "[" + std::to_string(k) + "]");
    }
  }
  return m;
}

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ModelSpec parse_model(const Json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() != "case_study") {
      throw ValidationError(path + ": the only built-in model is \"case_study\"");
    }
    return ModelSpec::power_grid();
  }
  object_at(j, path);
  check_keys(j, path, {"A", "B", "C", "W", "V", "case_study"});
  ModelSpec spec;
  if (j.contains("case_study")) {
    const std::string cp = join(path, "case_study");
    const auto& cj = object_at(j["case_study"], cp);
    check_keys(cj, cp, {"M", "K", "dt"});
    ContinuousCaseStudy cs = power_grid_case_study();
    if (cj.contains("M")) cs.mass = matrix_at(cj["M"], join(cp, "M"), std::nullopt);
    if (cj.contains("K")) cs.stiffness = matrix_at(cj["K"], join(cp, "K"), cs.mass.rows());
    if (cj.contains("dt")) cs.dt = number_at(cj["dt"], join(cp, "dt"));
    if (!(cs.dt > 0.0)) throw ValidationError(join(cp, "dt") + ": must be positive");
    const Index n = cs.mass.rows();
    spec.w = j.contains("W") ? matrix_at(j["W"], join(path, "W"), n) : kDefaultProcessNoise * Matrix::Identity(n, n);
    spec.v = j.contains("V") ? matrix_at(j["V"], join(path, "V"), n)
                             : kDefaultMeasurementNoise * Matrix::Identity(n, n);
    spec.case_study = std::move(cs);
    return spec;
  }
  for (auto key : {"A", "B", "C", "W", "V"}) {
    if (!j.contains(key)) throw ValidationError(join(path, key) + ": required when no case_study is given");
  }
  spec.a = matrix_at(j["A"], join(path, "A"), std::nullopt);
  spec.b = matrix_at(j["B"], join(path, "B"), std::nullopt);
  spec.c = matrix_at(j["C"], join(path, "C"), spec.a.rows());
  spec.w = matrix_at(j["W"], join(path, "W"), spec.a.rows());
  spec.v = matrix_at(j["V"], join(path, "V"), spec.c.rows());
  return spec;
}

inline Json model_json(const ModelSpec& m) {
  Json j = Json::object();
  if (m.case_study) {
    j["case_study"] = Json{{"M", matrix_json(m.case_study->mass)},
                           {"K", matrix_json(m.case_study->stiffness)},
                           {"dt", m.case_study->dt}};
  } else {
    j["A"] = matrix_json(m.a);
    j["B"] = matrix_json(m.b);
    j["C"] = matrix_json(m.c);
  }
  j["W"] = matrix_json(m.w);
  j["V"] = matrix_json(m.v);
  return j;
}

// Wraps constructor-level validation failures with the path of the offending block.
template <typename F>
auto with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace detail

/// Parses and validates a spec document, filling defaults. Throws ValidationError.
inline ExperimentSpec parse_spec(const Json& root) {
  using namespace detail;
  object_at(root, "spec");
  check_keys(root, "spec", {"kind", "sim", "sweep", "realizations", "output"});

  ExperimentSpec spec;
  if (!root.contains("kind") || !root["kind"].is_string()) throw ValidationError("kind: required string");
  const auto kind = parse_experiment_kind(root["kind"].get<std::string>());
  if (!kind) throw ValidationError("kind: unknown experiment kind \"" + root["kind"].get<std::string>() + "\"");
  spec.kind = *kind;

  const Json sim = root.contains("sim") ? root["sim"] : Json::object();
  object_at(sim, "sim");
  check_keys(sim, "sim",
             {"model", "lqr", "attacker", "horizon", "seed", "control_mode", "prior_odds", "detection_threshold",
              "initial_state_var", "filter_prior_var", "forgetting", "include_full_filter_weight"});

  spec.model = sim.contains("model") ? parse_model(sim["model"], "sim.model") : ModelSpec::power_grid();
  auto model = std::make_shared<const LinearSystemModel>(with_path("sim.model", [&] { return spec.model.build(); }));
  auto& cfg = spec.sim;
  cfg.model = model;
  const Index n = model->state_dim();
  const Index p = model->input_dim();
  const Index m = model->sensor_count();

  cfg.lqr = identity_lqr(n, p, 0.01);
  if (sim.contains("lqr")) {
    const auto& lj = object_at(sim["lqr"], "sim.lqr");
    check_keys(lj, "sim.lqr", {"Q", "Pc", "beta"});
    auto square = [](const Json& mj, const std::string& path, Index dim) {
      Matrix out = matrix_at(mj, path, dim);
      if (out.rows() != dim || out.cols() != dim) {
        throw ValidationError(path + ": expected " + std::to_string(dim) + "x" + std::to_string(dim) + ", got " +
                              shape(out));
      }
      return out;
    };
    if (lj.contains("Q")) cfg.lqr.state_cost = square(lj["Q"], "sim.lqr.Q", n);
    if (lj.contains("Pc")) cfg.lqr.control_cost = square(lj["Pc"], "sim.lqr.Pc", p);
    if (lj.contains("beta")) cfg.lqr.discount = number_at(lj["beta"], "sim.lqr.beta");
  }
  with_path("sim.lqr", [&] { cfg.lqr.validate(n, p); return 0; });

  if (sim.contains("attacker")) {
    const auto& aj = object_at(sim["attacker"], "sim.attacker");
    check_keys(aj, "sim.attacker", {"mode", "target", "frequency", "amplitude"});
    if (aj.contains("mode")) {
      const auto mode = aj["mode"].is_string() ? parse_attack_mode(aj["mode"].get<std::string>()) : std::nullopt;
      if (!mode) throw ValidationError("sim.attacker.mode: expected one of none, replace, additive");
      cfg.attacker.mode = *mode;
    }
    if (aj.contains("target")) {
      const auto t = unsigned_at(aj["target"], "sim.attacker.target");
      if (t < 1 || t > static_cast<std::uint64_t>(m)) {
        throw ValidationError("sim.attacker.target: must be a sensor number in 1.." + std::to_string(m));
      }
      cfg.attacker.target = static_cast<Index>(t - 1);
    }
    if (aj.contains("frequency")) cfg.attacker.frequency = number_at(aj["frequency"], "sim.attacker.frequency");
    if (aj.contains("amplitude")) cfg.attacker.amplitude = number_at(aj["amplitude"], "sim.attacker.amplitude");
  }
  if (!(cfg.attacker.frequency >= 0.0 && cfg.attacker.frequency <= 1.0)) {
    throw ValidationError("sim.attacker.frequency: must lie in [0, 1]");
  }
  if (!(cfg.attacker.amplitude >= 0.0)) throw ValidationError("sim.attacker.amplitude: must be non-negative");

  if (sim.contains("horizon")) {
    const auto h = unsigned_at(sim["horizon"], "sim.horizon");
    if (h < 1) throw ValidationError("sim.horizon: must be at least 1");
    cfg.horizon = static_cast<std::int64_t>(h);
  }
  if (sim.contains("seed")) cfg.seed = unsigned_at(sim["seed"], "sim.seed");
  if (sim.contains("control_mode")) {
    const auto& cm = sim["control_mode"];
    const auto mode = cm.is_string() ? parse_control_mode(cm.get<std::string>()) : std::nullopt;
    if (!mode) throw ValidationError("sim.control_mode: expected one of full_trust, weighted, omit_detected");
    cfg.control_mode = *mode;
  }
  auto number_field = [&](const char* key, double& out) {
    if (sim.contains(key)) out = number_at(sim[key], join("sim", key));
  };
  number_field("prior_odds", cfg.prior_odds);
  number_field("detection_threshold", cfg.detection_threshold);
  number_field("initial_state_var", cfg.initial_state_var);
  number_field("filter_prior_var", cfg.filter_prior_var);
  number_field("forgetting", cfg.forgetting);
  if (sim.contains("include_full_filter_weight")) {
    if (!sim["include_full_filter_weight"].is_boolean()) {
      throw ValidationError("sim.include_full_filter_weight: expected a boolean");
    }
    cfg.include_full_filter_weight = sim["include_full_filter_weight"].get<bool>();
  }
  with_path("sim", [&] { cfg.validate(); return 0; });
  try {
    solve_dare(*model, cfg.lqr);
  } catch (const NumericalError& e) {
    throw ValidationError(std::string("sim.lqr: ") + e.what());
  }

  const auto key = sweep_key(spec.kind);
  if (root.contains("sweep")) {
    if (key.empty()) throw ValidationError("sweep: kind " + std::string(to_string(spec.kind)) + " takes no sweep");
    const auto& sj = object_at(root["sweep"], "sweep");
    check_keys(sj, "sweep", {key});
    if (!sj.contains(key)) throw ValidationError(join("sweep", key) + ": required");
    const auto& arr = sj[std::string(key)];
    if (!arr.is_array() || arr.empty()) throw ValidationError(join("sweep", key) + ": expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ip = join("sweep", key) + "[" + std::to_string(i) + "]";
      const double v = number_at(arr[i], ip);
      const bool ok = spec.kind == ExperimentKind::kRoc ? (v > 0.0 && v < 1.0)
                      : spec.kind == ExperimentKind::kCostVsFrequency ? (v >= 0.0 && v <= 1.0)
                                                                       : v >= 0.0;
      if (!ok) {
        throw ValidationError(ip + (spec.kind == ExperimentKind::kRoc ? ": thresholds must lie in (0, 1)"
                                    : spec.kind == ExperimentKind::kCostVsFrequency
                                        ? ": frequencies must lie in [0, 1]"
                                        : ": amplitudes must be non-negative"));
      }
      spec.sweep.push_back(v);
    }
  } else if (!key.empty()) {
    throw ValidationError("sweep: kind " + std::string(to_string(spec.kind)) + " requires sweep." + std::string(key));
  }
  if ((spec.kind == ExperimentKind::kCostVsFrequency || spec.kind == ExperimentKind::kCostVsAmplitude) &&
      cfg.attacker.mode == AttackMode::kNone) {
    throw ValidationError("sim.attacker.mode: cost sweeps need an attack mode");
  }

  if (root.contains("realizations")) {
    const auto r = unsigned_at(root["realizations"], "realizations");
    if (r < 1) throw ValidationError("realizations: must be at least 1");
    spec.realizations = static_cast<std::size_t>(r);
  }
  if (root.contains("output")) {
    if (!root["output"].is_string() || root["output"].get<std::string>().empty()) {
      throw ValidationError("output: expected a non-empty path");
    }
    spec.output = root["output"].get<std::string>();
  } else {
    spec.output = std::string(to_string(spec.kind)) + ".csv";
  }
  return spec;
}

inline ExperimentSpec parse_spec_text(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  return parse_spec(root);
}

inline ExperimentSpec parse_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open spec file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec_text(buf.str());
}

/// Fully resolved spec; parse_spec(to_json(s)) == s.
inline Json to_json(const ExperimentSpec& spec) {
  const auto& cfg = spec.sim;
  Json sim = Json::object();
  sim["model"] = detail::model_json(spec.model);
  sim["lqr"] = Json{{"Q", detail::matrix_json(cfg.lqr.state_cost)},
                    {"Pc", detail::matrix_json(cfg.lqr.control_cost)},
                    {"beta", cfg.lqr.discount}};
  sim["attacker"] = Json{{"mode", std::string(to_string(cfg.attacker.mode))},
                         {"target", cfg.attacker.target + 1},
                         {"frequency", cfg.attacker.frequency},
                         {"amplitude", cfg.attacker.amplitude}};
  sim["horizon"] = cfg.horizon;
  sim["seed"] = cfg.seed;
  sim["control_mode"] = std::string(to_string(cfg.control_mode));
  sim["prior_odds"] = cfg.prior_odds;
  sim["detection_threshold"] = cfg.detection_threshold;
  sim["initial_state_var"] = cfg.initial_state_var;
  sim["filter_prior_var"] = cfg.filter_prior_var;
  sim["forgetting"] = cfg.forgetting;
  sim["include_full_filter_weight"] = cfg.include_full_filter_weight;

  Json root = Json::object();
  root["kind"] = std::string(to_string(spec.kind));
  root["sim"] = std::move(sim);
  if (const auto key = sweep_key(spec.kind); !key.empty()) root["sweep"] = Json{{std::string(key), spec.sweep}};
  root["realizations"] = spec.realizations;
  root["output"] = spec.output;
  return root;
}

/// Path of the JSON metadata written next to a CSV output.
inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  return std::filesystem::path(csv.string() + ".meta.json");
}

struct ExecutionReport {
  std::size_t rows = 0;
  std::size_t failed_realizations = 0;
  double wall_seconds = 0.0;
  Json summary = Json::object();
};

namespace detail {

inline std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

inline void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace detail

/// Runs the experiment and writes the CSV (with a '#' metadata header holding
/// the resolved spec) and the JSON sidecar. On failure neither file is left
/// behind. Output bytes depend only on the spec, never on `threads`.
inline ExecutionReport execute(const ExperimentSpec& spec, unsigned threads = 0) {
  const auto started = std::chrono::steady_clock::now();
  const auto& cfg = spec.sim;
  ExecutionReport report;

  std::ostringstream body;
  body << "# trustctl " << kVersion << '\n';
  body << "# kind: " << to_string(spec.kind) << '\n';
  body << "# spec: " << to_json(spec).dump() << '\n';

  switch (spec.kind) {
    case ExperimentKind::kTrace: {
      SimConfig local = cfg;
      local.seed = realization_seed(cfg.seed, 0);
      const auto res = run(local);
      csv::write_trace(body, res, cfg.model->sensor_count());
      Json first = nullptr;
      if (res.first_detection) {
        first = Json{{"slot", res.first_detection->slot}, {"sensor", res.first_detection->sensor + 1}};
      }
      report.summary = Json{{"realization_seed", local.seed},
                            {"total_cost", res.total_cost},
                            {"first_detection", first},
                            {"false_alarm", res.false_alarm},
                            {"rejected_slots", res.rejected_slots}};
      break;
    }
    case ExperimentKind::kCdf: {
      const auto batch = run_batch(cfg, spec.realizations, cfg.seed, threads);
      const auto stats = detection_stats(batch, cfg.horizon);
      report.failed_realizations = stats.failed;
      if (stats.realizations() == 0) throw NumericalError("every realization failed");
      csv::write_cdf(body, detection_cdf(stats, cfg.horizon));
      report.summary = Json{{"detected", stats.detected()},
                            {"false_alarms", stats.false_alarms},
                            {"undetected", stats.undetected},
                            {"false_alarm_rate", stats.false_alarm_rate()},
                            {"undetected_fraction", stats.undetected_fraction()},
                            {"mean_delay", nullptr}};
      if (const double d = mean_detection_delay(stats); std::isfinite(d)) report.summary["mean_delay"] = d;
      break;
    }
    case ExperimentKind::kRoc:
      csv::write_roc(body, roc_sweep(cfg, spec.sweep, spec.realizations, threads));
      break;
    case ExperimentKind::kCostVsFrequency:
      csv::write_cost(body, cost_sweep(cfg, SweepParameter::kFrequency, spec.sweep, spec.realizations, threads),
                      SweepParameter::kFrequency);
      break;
    case ExperimentKind::kCostVsAmplitude:
      csv::write_cost(body, cost_sweep(cfg, SweepParameter::kAmplitude, spec.sweep, spec.realizations, threads),
                      SweepParameter::kAmplitude);
      break;
  }

  const std::string text = body.str();
  report.rows = detail::count_lines(text) - 4;  // 3 metadata lines + column header
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  Json meta = Json::object();
  meta["version"] = std::string(kVersion);
  meta["spec"] = to_json(spec);
  meta["seed"] = cfg.seed;
  meta["realizations"] = spec.realizations;
  meta["rows"] = report.rows;
  meta["failed_realizations"] = report.failed_realizations;
  meta["wall_time_seconds"] = report.wall_seconds;
  meta["summary"] = report.summary;

  const std::filesystem::path out(spec.output);
  const std::filesystem::path side = sidecar_path(out);
  const std::filesystem::path tmp(out.string() + ".partial");
  try {
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    detail::write_file(tmp, text);
    detail::write_file(side, meta.dump(2) + "\n");
    std::filesystem::rename(tmp, out);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    std::filesystem::remove(side, ec);
    throw;
  }
  return report;
}

}  // namespace trustctl
