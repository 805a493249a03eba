// trustctl: run trust-aware control experiments from JSON specs.
//
//   trustctl run <spec.json> [--seed N] [--realizations N] [--output PATH] [--threads N]
//   trustctl validate <spec.json>
//   trustctl show-model [--model FILE] [--dt SECONDS]
//
// Exit codes: 0 success, 1 validation failure, 2 runtime failure.

#include "trustctl/trustctl.hpp"

#include "CLI11.hpp"

#include <iomanip>
#include <iostream>

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

void print_matrix(std::ostream& os, const char* name, const trustctl::Matrix& m) {
  const Eigen::IOFormat fmt(Eigen::FullPrecision, 0, ", ", "\n", "  [", "]");
  os << name << " (" << m.rows() << "x" << m.cols() << "):\n" << m.format(fmt) << "\n";
}

trustctl::ModelSpec load_model(const std::string& path, std::optional<double> dt) {
  trustctl::ModelSpec spec = trustctl::ModelSpec::power_grid();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw trustctl::ValidationError("cannot open model file " + path);
    trustctl::Json j;
    try {
      j = trustctl::Json::parse(in);
    } catch (const trustctl::Json::parse_error& e) {
      throw trustctl::ValidationError(std::string("malformed JSON: ") + e.what());
    }
    spec = trustctl::detail::parse_model(j, "model");
  }
  if (dt) {
    if (!spec.case_study) throw trustctl::ValidationError("--dt only applies to case-study models");
    if (!(*dt > 0.0)) throw trustctl::ValidationError("--dt must be positive");
    spec.case_study->dt = *dt;
  }
  return spec;
}

int show_model(const std::string& path, std::optional<double> dt) {
  const auto spec = load_model(path, dt);
  const auto model = spec.build();
  std::cout << std::setprecision(17);
  if (spec.case_study) {
    std::cout << "case study, dt = " << spec.case_study->dt << "\n";
    print_matrix(std::cout, "M", spec.case_study->mass);
    print_matrix(std::cout, "K", spec.case_study->stiffness);
  }
  print_matrix(std::cout, "A", model.A());
  print_matrix(std::cout, "B", model.B());
  print_matrix(std::cout, "C", model.C());
  print_matrix(std::cout, "W", model.W());
  print_matrix(std::cout, "V", model.V());

  const auto sol = trustctl::solve_dare(model, trustctl::identity_lqr(model.state_dim(), model.input_dim()));
  std::cout << "LQR (Q = I, Pc = 0.01 I): residual " << sol.residual << ", closed-loop spectral radius "
            << trustctl::detail::spectral_radius(model.A() - model.B() * sol.gain) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trust-aware networked control experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(trustctl::kVersion));

  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> realizations;
  std::optional<std::string> output;
  unsigned threads = 0;

  auto* run_cmd = app.add_subcommand("run", "Run an experiment spec and write CSV plus metadata");
  run_cmd->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  run_cmd->add_option("--seed", seed, "Override sim.seed");
  run_cmd->add_option("--realizations", realizations, "Override realizations");
  run_cmd->add_option("--output", output, "Override the output CSV path");
  run_cmd->add_option("--threads", threads, "Worker threads for batches (0 = all cores)");

  auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a spec, then print it resolved");
  validate_cmd->add_option("spec", spec_path, "Experiment spec (JSON)")->required();

  std::string model_path;
  std::optional<double> dt;
  auto* show_cmd = app.add_subcommand("show-model", "Print the resolved plant matrices");
  show_cmd->add_option("--model", model_path, "Model file (JSON); defaults to the built-in case study");
  show_cmd->add_option("--dt", dt, "Override the case-study time step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*show_cmd) return show_model(model_path, dt);

    auto spec = trustctl::parse_spec_file(spec_path);
    if (seed) spec.sim.seed = *seed;
    if (realizations) {
      if (*realizations < 1) throw trustctl::ValidationError("--realizations must be at least 1");
      spec.realizations = *realizations;
    }
    if (output) {
      if (output->empty()) throw trustctl::ValidationError("--output must be a non-empty path");
      spec.output = *output;
    }

    if (*validate_cmd) {
      std::cout << trustctl::to_json(spec).dump(2) << "\n";
      return 0;
    }

    const auto report = trustctl::execute(spec, threads);
    std::cerr << "wrote " << report.rows << " rows to " << spec.output << " in " << std::setprecision(3)
              << report.wall_seconds << " s";
    if (report.failed_realizations > 0) std::cerr << " (" << report.failed_realizations << " realizations failed)";
    std::cerr << "\n";
    return 0;
  } catch (const trustctl::ValidationError& e) {
    std::cerr << "trustctl: invalid spec: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "trustctl: " << e.what() << "\n";
    return kExitRuntime;
  }
}
