// Experiment driver: one run per invocation, configured by a JSON file and/or flags.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "dqap/error.hpp"
#include "experiment.hpp"

namespace {

int fail(const std::string& type, const std::string& message, int code) {
  const nlohmann::ordered_json err{{"error", {{"type", type}, {"message", message}}}};
  std::cerr << err.dump() << std::endl;
  return code;
}

void setup_logging() {
  auto logger = spdlog::stderr_logger_mt("dqap");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("DQAP_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

}  // namespace

int main(int argc, char** argv) {
  using dqap::cli::ExperimentConfig;
  setup_logging();

  CLI::App app{"Variational adiabatic state preparation for the SSH ring"};
  app.set_version_flag("--version", std::string("dqap ") + dqap::cli::kToolVersion);

  std::string experiment, config_path, L, M, bc, out, format;
  double v = 0, w = 0;
  std::uint64_t seed = 0;
  int shots = 0, workers = 0;
  app.add_option("--experiment", experiment,
                 "energy-scan, entropy-scan, entropy-fit, mutual-info, polarization-scan, "
                 "mstar-scan, param-dump, emit-circuit, verify, hadamard-emulate");
  app.add_option("--config", config_path, "JSON config file; flags override its values")
      ->check(CLI::ExistingFile);
  app.add_option("--v", v, "intra-cell hopping");
  app.add_option("--w", w, "inter-cell hopping");
  app.add_option("--L", L, "ring size(s): 40, 16,24,32 or 16..40");
  app.add_option("--bc", bc, "boundary condition")->check(CLI::IsMember({"pbc", "apbc"}));
  app.add_option("--M", M, "depth range: 1..10, 0:4, 2,5 or 3");
  app.add_option("--seed", seed, "seed for random schedules and shot sampling");
  app.add_option("--shots", shots, "measurements per basis for hadamard-emulate");
  app.add_option("--workers", workers, "parallel grid points (default: all cores)");
  app.add_option("--out", out, "output path (default: stdout)");
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        return fail("config", e.what(), 2);
      }
    }
    auto set = [&](const char* flag, const char* key, const auto& value) {
      if (app.count(flag)) j[key] = value;
    };
    set("--experiment", "experiment", experiment);
    set("--v", "v", v);
    set("--w", "w", w);
    set("--bc", "bc", bc);
    set("--seed", "seed", seed);
    set("--shots", "shots", shots);
    set("--workers", "workers", workers);
    set("--out", "out", out);
    set("--format", "format", format);
    set("--L", "L", L);
    set("--M", "M", M);
    if (!j.contains("experiment")) return fail("usage", "--experiment is required", 2);

    ExperimentConfig cfg;
    dqap::cli::apply_json(cfg, j);
    return dqap::cli::run(cfg);
  } catch (const dqap::ParseError& e) {
    return fail("parse", e.what(), 2);
  } catch (const dqap::InvalidArgument& e) {
    return fail("invalid_argument", e.what(), 2);
  } catch (const nlohmann::json::exception& e) {
    return fail("config", e.what(), 2);
  } catch (const dqap::NumericalError& e) {
    return fail("numerical", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
