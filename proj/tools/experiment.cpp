#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "dqap/error.hpp"
#include "dqap/format.hpp"
#include "dqap/observables.hpp"
#include "dqap/statevector.hpp"

namespace dqap::cli {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr std::pair<Experiment, const char*> kExperimentNames[] = {
    {Experiment::EnergyScan, "energy-scan"},
    {Experiment::EntropyScan, "entropy-scan"},
    {Experiment::EntropyFit, "entropy-fit"},
    {Experiment::MutualInfo, "mutual-info"},
    {Experiment::PolarizationScan, "polarization-scan"},
    {Experiment::MstarScan, "mstar-scan"},
    {Experiment::ParamDump, "param-dump"},
    {Experiment::EmitCircuit, "emit-circuit"},
    {Experiment::Verify, "verify"},
    {Experiment::HadamardEmulate, "hadamard-emulate"},
};

constexpr double kOracleTolerance = 1e-9;

std::vector<int> default_sizes(Experiment e) {
  switch (e) {
    case Experiment::EnergyScan: return {40};
    case Experiment::EntropyScan: return {64};
    case Experiment::EntropyFit: return {32, 64, 96, 128, 160, 200};
    case Experiment::MutualInfo: return {64};
    case Experiment::MstarScan: return {16, 24, 32, 40};
    case Experiment::Verify: return {4, 6, 8, 10, 12};
    default: return {18};
  }
}

SshParams params_for(const ExperimentConfig& cfg, int L) {
  SshParams p{cfg.v, cfg.w, L,
              cfg.bc.value_or(L % 4 == 0 ? Boundary::AntiPeriodic : Boundary::Periodic)};
  p.validate();
  return p;
}

std::vector<int> depths_for(const ExperimentConfig& cfg, const SshParams& p, int first) {
  if (!cfg.M.empty()) return cfg.M;
  std::vector<int> out;
  for (int m = first; m <= exact_depth(p); ++m) out.push_back(m);
  return out;
}

// Runs fn(0..n-1) on up to `workers` threads. The first exception by index is rethrown.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  const int threads = std::max(1, std::min(n, workers));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(n, 0)));
  std::atomic<int> next{0};
  auto body = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// JSON-lines record of finished grid points, keyed by a point label. The first
// line holds the config echo; a file written for another config is ignored.
class Checkpoint {
 public:
  Checkpoint() = default;
  Checkpoint(std::string path, const std::string& config) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    if (in && std::getline(in, line)) {
      try {
        if (json::parse(line).at("config").get<std::string>() == config) {
          while (std::getline(in, line)) {
            const json rec = json::parse(line);
            done_[rec.at("key").get<std::string>()] = rec.at("value");
          }
          spdlog::info("resuming from {} ({} points)", path_, done_.size());
        }
      } catch (const json::exception&) {
        // A truncated last line from an interrupted run; keep what parsed.
      }
    }
    std::ofstream outf(path_, std::ios::trunc);
    outf << json{{"config", config}}.dump() << '\n';
    for (const auto& [k, v] : done_) outf << json{{"key", k}, {"value", v}}.dump() << '\n';
  }

  bool enabled() const { return !path_.empty(); }

  std::optional<json> find(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = done_.find(key);
    if (it == done_.end()) return std::nullopt;
    return it->second;
  }

  void store(const std::string& key, const json& value) {
    if (!enabled()) return;
    std::lock_guard lock(mu_);
    done_[key] = value;
    std::ofstream outf(path_, std::ios::app);
    outf << json{{"key", key}, {"value", value}}.dump() << '\n';
  }

  void finish() {
    if (enabled()) std::filesystem::remove(path_);
  }

 private:
  std::string path_;
  mutable std::mutex mu_;
  std::map<std::string, json> done_;
};

using Cell = std::variant<long long, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  ojson summary = ojson::object();
  int exit_code = 0;
};

class Runner {
 public:
  explicit Runner(const ExperimentConfig& cfg)
      : cfg_(cfg),
        workers_(cfg.workers > 0 ? cfg.workers
                                 : std::max(1u, std::thread::hardware_concurrency())) {
    if (!cfg.out.empty()) ckpt_.emplace(cfg.out + ".ckpt", config_echo(cfg).dump());
    if (!cfg.schedules_file.empty()) load_schedules();
  }

  Checkpoint* checkpoint() { return ckpt_ ? &*ckpt_ : nullptr; }

  // Optimized schedules for depths 1..max_depth, resumed from the checkpoint.
  std::vector<OptimizationResult> chain(const SshParams& p, int max_depth) {
    const std::string prefix = fmt::format("chain/v={}/w={}/L={}/bc={}/M=", format_real(p.v),
                                           format_real(p.w), p.L, to_string(p.bc));
    std::vector<OptimizationResult> done;
    if (ckpt_) {
      for (int m = 1; m <= max_depth; ++m) {
        auto hit = ckpt_->find(prefix + std::to_string(m));
        if (!hit) break;
        done.push_back(hit->get<OptimizationResult>());
      }
    }
    return optimize_depth_scan(p, max_depth, cfg_.optimizer, std::move(done),
                               [&](int m, const OptimizationResult& r) {
                                 spdlog::info("L={} M={} E={} iterations={}{}", p.L, m,
                                              format_real(r.energy), r.iterations,
                                              r.converged ? "" : " (not converged)");
                                 if (ckpt_) ckpt_->store(prefix + std::to_string(m), r);
                               });
  }

  // Schedule for depth M from the schedules file when present, else optimized.
  ParamSchedule schedule(const SshParams& p, int M) {
    if (M == 0) return {};
    if (auto it = file_schedules_.find({p.L, M}); it != file_schedules_.end()) return it->second;
    if (auto it = file_schedules_.find({0, M}); it != file_schedules_.end()) return it->second;
    return chain(p, M).back().schedule;
  }

  std::map<int, ParamSchedule> schedules(const SshParams& p, const std::vector<int>& depths) {
    std::map<int, ParamSchedule> out;
    int need = 0;
    for (int m : depths) {
      if (m == 0 || file_schedules_.count({p.L, m}) || file_schedules_.count({0, m})) {
        out[m] = schedule(p, m);
      } else {
        need = std::max(need, m);
      }
    }
    if (need > 0) {
      const auto results = chain(p, need);
      for (int m : depths)
        if (!out.count(m)) out[m] = results[m - 1].schedule;
    }
    return out;
  }

  int workers() const { return workers_; }
  const ExperimentConfig& cfg() const { return cfg_; }

 private:
  void load_schedules() {
    std::ifstream in(cfg_.schedules_file);
    if (!in) throw InvalidArgument("cannot read schedules file " + cfg_.schedules_file);
    const json doc = json::parse(in);
    // param-dump output nests by L; a hand-written file maps M directly.
    if (doc.contains("summary")) {
      for (const auto& [L, by_m] : doc.at("summary").at("schedules").items())
        for (const auto& [m, s] : by_m.items())
          file_schedules_[{std::stoi(L), std::stoi(m)}] = s.get<ParamSchedule>();
    } else {
      for (const auto& [m, s] : doc.at("schedules").items())
        file_schedules_[{0, std::stoi(m)}] = s.get<ParamSchedule>();
    }
    for (const auto& [key, s] : file_schedules_)
      if (s.depth() != key.second) throw InvalidArgument("schedule depth does not match its key");
  }

  const ExperimentConfig& cfg_;
  int workers_;
  std::optional<Checkpoint> ckpt_;
  std::map<std::pair<int, int>, ParamSchedule> file_schedules_;
};

double half_cut_entropy(const SshParams& p, const ParamSchedule& s) {
  return entanglement_entropy(correlation(evolve(s, p)), Subsystem::half_cut_on_w_bonds(p.L));
}

Table energy_scan(Runner& run, const std::vector<int>& sizes) {
  Table t{{"L", "M", "energy", "exact_energy", "delta_energy", "iterations", "converged"}, {}};
  std::vector<std::vector<std::vector<Cell>>> per_size(sizes.size());
  parallel_for(static_cast<int>(sizes.size()), run.workers(), [&](int i) {
    const SshParams p = params_for(run.cfg(), sizes[i]);
    const double exact = exact_ground_state(build_hamiltonians(p), p.particles()).energy;
    const std::vector<int> depths = depths_for(run.cfg(), p, 1);
    const int max_m = *std::max_element(depths.begin(), depths.end());
    const auto results = max_m > 0 ? run.chain(p, max_m) : std::vector<OptimizationResult>{};
    for (int m : depths) {
      double e;
      long long iters = 0;
      std::string converged = "true";
      if (m == 0) {
        e = energy(initial_state(p), build_hamiltonians(p));
      } else {
        const OptimizationResult& r = results[m - 1];
        e = r.energy;
        iters = r.iterations;
        converged = r.converged ? "true" : "false";
      }
      per_size[i].push_back({(long long)p.L, (long long)m, e, exact, e - exact, iters, converged});
    }
  });
  for (auto& rows : per_size)
    for (auto& r : rows) t.rows.push_back(std::move(r));
  return t;
}

Table entropy_scan(Runner& run, const std::vector<int>& sizes) {
  Table t{{"L", "M", "observable", "value"}, {}};
  std::vector<std::vector<std::vector<Cell>>> per_size(sizes.size());
  parallel_for(static_cast<int>(sizes.size()), run.workers(), [&](int i) {
    const SshParams p = params_for(run.cfg(), sizes[i]);
    const auto scheds = run.schedules(p, depths_for(run.cfg(), p, 1));
    for (const auto& [m, s] : scheds)
      per_size[i].push_back({(long long)p.L, (long long)m, std::string("S_A"), half_cut_entropy(p, s)});
    const GroundState gs = exact_ground_state(build_hamiltonians(p), p.particles());
    per_size[i].push_back({(long long)p.L, (long long)exact_depth(p), std::string("S_A_ground_state"),
                           entanglement_entropy(correlation(gs.state),
                                                Subsystem::half_cut_on_w_bonds(p.L))});
  });
  for (auto& rows : per_size)
    for (auto& r : rows) t.rows.push_back(std::move(r));
  return t;
}

Table entropy_fit(Runner& run, const std::vector<int>& sizes) {
  Table t{{"L", "M", "observable", "value"}, {}};
  const int largest = *std::max_element(sizes.begin(), sizes.end());
  for (int L : sizes)
    if (L % 8 != 0) throw InvalidArgument("entropy-fit needs L divisible by 8, got " + std::to_string(L));
  // Below the exact depth the optimum does not depend on L, so one chain on
  // the largest ring serves every size.
  const SshParams big = params_for(run.cfg(), largest);
  const auto results = run.chain(big, largest / 8);
  std::vector<EntropyPoint> points(sizes.size());
  parallel_for(static_cast<int>(sizes.size()), run.workers(), [&](int i) {
    const SshParams p = params_for(run.cfg(), sizes[i]);
    const int m = p.L / 8;
    points[i] = {double(m), half_cut_entropy(p, results[m - 1].schedule)};
  });
  for (std::size_t i = 0; i < sizes.size(); ++i)
    t.rows.push_back({(long long)sizes[i], (long long)(sizes[i] / 8), std::string("S_A"), points[i].S});
  const LogFit fit = fit_log_entropy(points);
  t.summary["fit_a"] = fit.a;
  t.summary["fit_b"] = fit.b;
  t.summary["fit_r2"] = fit.r2;
  return t;
}

Table mutual_info(Runner& run, const std::vector<int>& sizes) {
  if (sizes.size() != 1) throw InvalidArgument("mutual-info takes a single L");
  const ExperimentConfig& cfg = run.cfg();
  const SshParams p = params_for(cfg, sizes.front());
  const Subsystem a = Subsystem::central_pair(p.L);
  Table t{{"M", "m", "site", "I"}, {}};

  std::vector<std::pair<int, ParamSchedule>> jobs;  // (M, applied schedule)
  if (cfg.heatmap_mode == HeatmapMode::PerDepth) {
    for (const auto& [m, s] : run.schedules(p, depths_for(cfg, p, 1))) jobs.emplace_back(m, s);
  } else {
    const int depth = cfg.schedule_depth > 0 ? cfg.schedule_depth : exact_depth(p);
    const ParamSchedule full = run.schedule(p, depth);
    std::vector<int> ms = cfg.M;
    if (ms.empty())
      for (int m = 1; m <= depth; ++m) ms.push_back(m);
    for (int m : ms) {
      if (m > depth) throw InvalidArgument("truncation depth exceeds the schedule depth");
      jobs.emplace_back(depth, full.truncated(m));
    }
  }
  std::vector<std::vector<std::vector<Cell>>> blocks(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), run.workers(), [&](int i) {
    const auto& [depth, s] = jobs[i];
    const CorrelationMatrix c = correlation(evolve(s, p));
    for (int site = 1; site <= p.L; ++site) {
      if (std::binary_search(a.sites().begin(), a.sites().end(), site)) continue;
      blocks[i].push_back({(long long)depth, (long long)s.depth(), (long long)site,
                           mutual_information(c, a, Subsystem({site}, p.L))});
    }
  });
  for (auto& rows : blocks)
    for (auto& r : rows) t.rows.push_back(std::move(r));
  t.summary["subsystem_A"] = a.sites();
  t.summary["mode"] = cfg.heatmap_mode == HeatmapMode::PerDepth ? "per-depth" : "truncated";
  return t;
}

std::vector<PolarizationRecord> polarization_series(Runner& run, const SshParams& p,
                                                    const std::vector<int>& depths) {
  for (std::size_t i = 0; i < depths.size(); ++i)
    if (depths[i] != static_cast<int>(i))
      throw InvalidArgument("polarization scans need depths 0, 1, 2, ... without gaps");
  const auto scheds = run.schedules(p, depths);
  std::vector<RestaValue> values;
  for (const auto& [m, s] : scheds) values.push_back(polarization(evolve(s, p)));
  return polarization_records(values);
}

Table polarization_scan(Runner& run, const std::vector<int>& sizes) {
  Table t{{"L", "M", "P_R", "delta_P_R", "x", "y"}, {}};
  std::vector<std::vector<PolarizationRecord>> series(sizes.size());
  parallel_for(static_cast<int>(sizes.size()), run.workers(), [&](int i) {
    const SshParams p = params_for(run.cfg(), sizes[i]);
    series[i] = polarization_series(run, p, depths_for(run.cfg(), p, 0));
  });
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    for (const auto& r : series[i])
      t.rows.push_back({(long long)sizes[i], (long long)r.M, r.value, r.delta, r.x, r.y});
    const auto mstar = critical_depth(series[i]);
    t.summary["critical_depth"][std::to_string(sizes[i])] = mstar ? ojson(*mstar) : ojson(nullptr);
  }
  return t;
}

Table mstar_scan(Runner& run, const std::vector<int>& sizes) {
  Table t{{"L", "bc", "M_star", "lower_bound", "upper_bound", "exact_depth", "within_bounds"}, {}};
  std::vector<std::vector<Cell>> rows(sizes.size());
  parallel_for(static_cast<int>(sizes.size()), run.workers(), [&](int i) {
    const SshParams p = params_for(run.cfg(), sizes[i]);
    std::vector<int> depths;
    for (int m = 0; m <= exact_depth(p); ++m) depths.push_back(m);
    const auto mstar = critical_depth(polarization_series(run, p, depths));
    const double span = p.bc == Boundary::AntiPeriodic ? p.L : p.L - 2;
    const double lo = span / 8;
    const double hi = span / 4;
    const bool inside = mstar && *mstar >= lo && *mstar <= hi;
    rows[i] = {(long long)p.L, std::string(to_string(p.bc)), mstar ? Cell((long long)*mstar) : Cell(std::string("none")),
               lo, hi, (long long)exact_depth(p), std::string(inside ? "true" : "false")};
  });
  t.rows = std::move(rows);
  return t;
}

Table param_dump(Runner& run, const std::vector<int>& sizes) {
  Table t{{"L", "M", "m", "theta1", "theta2", "energy"}, {}};
  for (int L : sizes) {
    const SshParams p = params_for(run.cfg(), L);
    for (const auto& [M, s] : run.schedules(p, depths_for(run.cfg(), p, 1))) {
      const double e = schedule_energy(s, p);
      for (int m = 1; m <= s.depth(); ++m)
        t.rows.push_back({(long long)L, (long long)M, (long long)m, s.layers[m - 1].theta1,
                          s.layers[m - 1].theta2, e});
      ojson layers = ojson::array();
      for (const auto& l : s.layers) layers.push_back({l.theta1, l.theta2});
      t.summary["schedules"][std::to_string(L)][std::to_string(M)] = layers;
    }
  }
  return t;
}

Table verify(Runner& run, const std::vector<int>& sizes) {
  Table t{{"L", "trial", "M", "energy_diff", "correlation_diff", "resta_diff"}, {}};
  const ExperimentConfig& cfg = run.cfg();
  std::vector<std::vector<std::vector<Cell>>> per_size(sizes.size());
  std::vector<double> worst(sizes.size(), 0.0);
  parallel_for(static_cast<int>(sizes.size()), run.workers(), [&](int i) {
    const SshParams p = params_for(cfg, sizes[i]);
    const SingleParticleHamiltonians hams = build_hamiltonians(p);
    std::mt19937_64 rng(splitmix64(cfg.seed ^ static_cast<std::uint64_t>(p.L)));
    std::uniform_int_distribution<int> depth(1, 4);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    for (int trial = 0; trial < cfg.trials; ++trial) {
      ParamSchedule s;
      const int m = depth(rng);
      for (int k = 0; k < m; ++k) s.layers.push_back({angle(rng), angle(rng)});
      const SlaterState st = evolve(s, p);
      const Statevector sv = build_dqap_state(p, s);
      const RestaValue r = polarization(st);
      const double de = std::abs(energy(st, hams) - fermionic_energy(sv, p));
      const double dc = (correlation(st).values - correlation_from_statevector(sv, p.L).values)
                            .cwiseAbs().maxCoeff();
      const double dz = std::abs(Complex(r.x, r.y) - resta_expectation(sv, p.L));
      worst[i] = std::max({worst[i], de, dc, dz});
      per_size[i].push_back({(long long)p.L, (long long)trial, (long long)m, de, dc, dz});
    }
  });
  double max_diff = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    max_diff = std::max(max_diff, worst[i]);
    for (auto& r : per_size[i]) t.rows.push_back(std::move(r));
  }
  t.summary["max_diff"] = max_diff;
  t.summary["tolerance"] = kOracleTolerance;
  t.summary["pass"] = max_diff <= kOracleTolerance;
  if (max_diff > kOracleTolerance) t.exit_code = 3;
  return t;
}

Table hadamard_emulate(Runner& run, const std::vector<int>& sizes) {
  if (sizes.size() != 1) throw InvalidArgument("hadamard-emulate takes a single L");
  const ExperimentConfig& cfg = run.cfg();
  const SshParams p = params_for(cfg, sizes.front());
  Table t{{"M", "shots", "x", "y", "x_hat", "y_hat", "dx", "dy", "P_R", "P_R_hat", "delta_P_R_hat"}, {}};
  const auto scheds = run.schedules(p, depths_for(cfg, p, 0));
  std::vector<std::pair<int, ParamSchedule>> jobs(scheds.begin(), scheds.end());
  std::vector<std::vector<Cell>> rows(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), run.workers(), [&](int i) {
    const auto& [m, s] = jobs[i];
    const auto it = cfg.shots_by_depth.find(m);
    const int shots = it != cfg.shots_by_depth.end() ? it->second : cfg.shots;
    const double x = ancilla_expectation(p, s, MeasurementBasis::X);
    const double y = ancilla_expectation(p, s, MeasurementBasis::Y);
    const ShotResult r = hadamard_test_xy(p, s, shots, cfg.seed + static_cast<std::uint64_t>(m));
    double dp = std::numeric_limits<double>::quiet_NaN();
    if (r.x_hat != 0.0 || r.y_hat != 0.0) dp = polarization_error(r.x_hat, r.y_hat, r.dx, r.dy);
    rows[i] = {(long long)m, (long long)shots, x, y, r.x_hat, r.y_hat, r.dx, r.dy,
               std::atan2(y, x), std::atan2(r.y_hat, r.x_hat), dp};
  });
  t.rows = std::move(rows);
  t.summary["qubits"] = p.L + 1;
  return t;
}

std::string cell_text(const Cell& c) {
  if (auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (auto* d = std::get_if<double>(&c)) return std::isnan(*d) ? "nan" : format_real(*d);
  return std::get<std::string>(c);
}

ojson cell_json(const Cell& c) {
  if (auto* i = std::get_if<long long>(&c)) return *i;
  if (auto* d = std::get_if<double>(&c)) return std::isnan(*d) ? ojson(nullptr) : ojson(*d);
  return std::get<std::string>(c);
}

ojson metadata(const ExperimentConfig& cfg) {
  ojson m;
  m["tool"] = "dqap";
  m["version"] = kToolVersion;
  m["experiment"] = to_string(cfg.experiment);
  m["seed"] = cfg.seed;
  m["config"] = config_echo(cfg);
  return m;
}

std::string render(const ExperimentConfig& cfg, const Table& t) {
  if (cfg.format == OutputFormat::Json) {
    ojson doc;
    doc["metadata"] = metadata(cfg);
    doc["columns"] = t.columns;
    ojson rows = ojson::array();
    for (const auto& r : t.rows) {
      ojson row = ojson::array();
      for (const auto& c : r) row.push_back(cell_json(c));
      rows.push_back(std::move(row));
    }
    doc["rows"] = std::move(rows);
    doc["summary"] = t.summary;
    return doc.dump(1) + "\n";
  }
  std::string out;
  out += std::string("# tool: dqap ") + kToolVersion + "\n";
  out += std::string("# experiment: ") + to_string(cfg.experiment) + "\n";
  out += "# seed: " + std::to_string(cfg.seed) + "\n";
  out += "# config: " + config_echo(cfg).dump() + "\n";
  if (!t.summary.empty()) out += "# summary: " + t.summary.dump() + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + cell_text(r[i]);
    out += "\n";
  }
  return out;
}

std::string emit_circuit(Runner& run, const std::vector<int>& sizes) {
  const ExperimentConfig& cfg = run.cfg();
  if (sizes.size() != 1) throw InvalidArgument("emit-circuit takes a single L");
  if (cfg.M.size() > 1) throw InvalidArgument("emit-circuit takes a single M");
  const SshParams p = params_for(cfg, sizes.front());
  const int M = cfg.M.empty() ? 1 : cfg.M.front();
  const CircuitIR raw = build_measurement_circuit(p, run.schedule(p, M), cfg.basis);
  const CircuitIR lowered = lower_to_native(raw);
  const CircuitIR& circuit = cfg.lower ? lowered : raw;

  ojson meta = metadata(cfg);
  meta["zzphase_count"] = count_native_gates(lowered);
  meta["zzphase_predicted"] = predicted_counts(p.L, M, true);
  meta["state_preparation_zzphase_predicted"] = predicted_counts(p.L, M, false);
  if (cfg.format == OutputFormat::Json) {
    ojson doc = ojson::parse(emit_json(circuit));
    doc["metadata"] = meta;
    return doc.dump(1) + "\n";
  }
  std::string out;
  for (const auto& [k, v] : meta.items())
    out += "# " + k + ": " + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
  return out + emit_text(circuit);
}

}  // namespace

const char* to_string(Experiment e) {
  for (const auto& [k, name] : kExperimentNames)
    if (k == e) return name;
  return "?";
}

Experiment experiment_from_string(const std::string& text) {
  for (const auto& [k, name] : kExperimentNames)
    if (text == name) return k;
  throw InvalidArgument("unknown experiment '" + text + "'");
}

std::vector<int> parse_int_list(const std::string& text) {
  auto to_int = [&](std::string_view s) { return static_cast<int>(parse_integer(s)); };
  std::vector<int> out;
  for (const char* sep : {"..", ":"}) {
    if (auto pos = text.find(sep); pos != std::string::npos) {
      const int a = to_int(std::string_view(text).substr(0, pos));
      const int b = to_int(std::string_view(text).substr(pos + std::strlen(sep)));
      if (b < a) throw InvalidArgument("empty range '" + text + "'");
      for (int m = a; m <= b; ++m) out.push_back(m);
      return out;
    }
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int(item));
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

void ExperimentConfig::validate() const {
  if (!(v > 0.0) || !(w > 0.0)) throw InvalidArgument("v and w must be positive");
  for (int l : L)
    if (l < 4 || l % 2 != 0) throw InvalidArgument("L must be even and >= 4");
  for (int m : M)
    if (m < 0) throw InvalidArgument("depths must be non-negative");
  if (shots < 0) throw InvalidArgument("shots must be non-negative");
  if (workers < 0) throw InvalidArgument("workers must be non-negative");
  if (trials < 1) throw InvalidArgument("trials must be positive");
  if (schedule_depth < 0) throw InvalidArgument("schedule_depth must be non-negative");
  optimizer.validate();
  if (!out.empty()) {
    const auto dir = std::filesystem::absolute(out).parent_path();
    if (!std::filesystem::is_directory(dir) || access(dir.c_str(), W_OK) != 0)
      throw InvalidArgument("output directory is not writable: " + dir.string());
  }
}

void apply_json(ExperimentConfig& cfg, const json& j) {
  auto ints = [](const json& v) {
    if (v.is_number_integer()) return std::vector<int>{v.get<int>()};
    if (v.is_string()) return parse_int_list(v.get<std::string>());
    return v.get<std::vector<int>>();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "experiment") cfg.experiment = experiment_from_string(v.get<std::string>());
    else if (key == "v") cfg.v = v.get<double>();
    else if (key == "w") cfg.w = v.get<double>();
    else if (key == "L") cfg.L = ints(v);
    else if (key == "bc") cfg.bc = boundary_from_string(v.get<std::string>());
    else if (key == "M") cfg.M = ints(v);
    else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
    else if (key == "shots") cfg.shots = v.get<int>();
    else if (key == "shots_by_depth") {
      for (const auto& [m, n] : v.items()) cfg.shots_by_depth[std::stoi(m)] = n.get<int>();
    } else if (key == "workers") cfg.workers = v.get<int>();
    else if (key == "out") cfg.out = v.get<std::string>();
    else if (key == "format") {
      const auto f = v.get<std::string>();
      if (f != "csv" && f != "json") throw InvalidArgument("format must be csv or json");
      cfg.format = f == "json" ? OutputFormat::Json : OutputFormat::Csv;
    } else if (key == "heatmap_mode") {
      const auto m = v.get<std::string>();
      if (m != "per-depth" && m != "truncated")
        throw InvalidArgument("heatmap_mode must be per-depth or truncated");
      cfg.heatmap_mode = m == "truncated" ? HeatmapMode::Truncated : HeatmapMode::PerDepth;
    } else if (key == "schedule_depth") cfg.schedule_depth = v.get<int>();
    else if (key == "basis") cfg.basis = measurement_basis_from_string(v.get<std::string>());
    else if (key == "lower") cfg.lower = v.get<bool>();
    else if (key == "trials") cfg.trials = v.get<int>();
    else if (key == "schedules_file") cfg.schedules_file = v.get<std::string>();
    else if (key == "optimizer") {
      OptimizerConfig& o = cfg.optimizer;
      for (const auto& [ok, ov] : v.items()) {
        if (ok == "learning_rate") o.learning_rate = ov.get<double>();
        else if (ok == "max_learning_rate") o.max_learning_rate = ov.get<double>();
        else if (ok == "metric_regularization") o.metric_regularization = ov.get<double>();
        else if (ok == "max_iterations") o.max_iterations = ov.get<int>();
        else if (ok == "grad_tolerance") o.grad_tolerance = ov.get<double>();
        else if (ok == "energy_tolerance") o.energy_tolerance = ov.get<double>();
        else if (ok == "warm_start") o.warm_start = warm_start_from_string(ov.get<std::string>());
        else if (ok == "seed") o.seed = ov.get<std::uint64_t>();
        else if (ok == "random_restarts") o.random_restarts = ov.get<int>();
        else if (ok == "reduce_size") o.reduce_size = ov.get<bool>();
        else if (ok == "fixed_angles") o.fixed_angles = {ov.at(0).get<double>(), ov.at(1).get<double>()};
        else throw InvalidArgument("unknown optimizer key '" + ok + "'");
      }
    } else {
      throw InvalidArgument("unknown config key '" + key + "'");
    }
  }
}

ojson config_echo(const ExperimentConfig& cfg) {
  ojson j;
  j["experiment"] = to_string(cfg.experiment);
  j["v"] = cfg.v;
  j["w"] = cfg.w;
  j["L"] = cfg.L.empty() ? default_sizes(cfg.experiment) : cfg.L;
  j["bc"] = cfg.bc ? ojson(to_string(*cfg.bc)) : ojson("auto");
  j["M"] = cfg.M;
  j["seed"] = cfg.seed;
  j["shots"] = cfg.shots;
  ojson sbd = ojson::object();
  for (const auto& [m, n] : cfg.shots_by_depth) sbd[std::to_string(m)] = n;
  j["shots_by_depth"] = sbd;
  j["format"] = cfg.format == OutputFormat::Json ? "json" : "csv";
  const OptimizerConfig& o = cfg.optimizer;
  j["optimizer"] = {{"learning_rate", o.learning_rate},
                    {"max_learning_rate", o.max_learning_rate},
                    {"metric_regularization", o.metric_regularization},
                    {"max_iterations", o.max_iterations},
                    {"grad_tolerance", o.grad_tolerance},
                    {"energy_tolerance", o.energy_tolerance},
                    {"warm_start", to_string(o.warm_start)},
                    {"seed", o.seed},
                    {"random_restarts", o.random_restarts},
                    {"reduce_size", o.reduce_size},
                    {"fixed_angles", {o.fixed_angles.theta1, o.fixed_angles.theta2}}};
  j["heatmap_mode"] = cfg.heatmap_mode == HeatmapMode::Truncated ? "truncated" : "per-depth";
  j["schedule_depth"] = cfg.schedule_depth;
  j["basis"] = to_string(cfg.basis);
  j["lower"] = cfg.lower;
  j["trials"] = cfg.trials;
  j["schedules_file"] = cfg.schedules_file;
  return j;
}

RunOutcome execute(const ExperimentConfig& cfg) {
  cfg.validate();
  Runner run(cfg);
  const std::vector<int> sizes = cfg.L.empty() ? default_sizes(cfg.experiment) : cfg.L;
  RunOutcome out;
  if (cfg.experiment == Experiment::EmitCircuit) {
    out.artifact = emit_circuit(run, sizes);
  } else {
    Table t;
    switch (cfg.experiment) {
      case Experiment::EnergyScan: t = energy_scan(run, sizes); break;
      case Experiment::EntropyScan: t = entropy_scan(run, sizes); break;
      case Experiment::EntropyFit: t = entropy_fit(run, sizes); break;
      case Experiment::MutualInfo: t = mutual_info(run, sizes); break;
      case Experiment::PolarizationScan: t = polarization_scan(run, sizes); break;
      case Experiment::MstarScan: t = mstar_scan(run, sizes); break;
      case Experiment::ParamDump: t = param_dump(run, sizes); break;
      case Experiment::Verify: t = verify(run, sizes); break;
      case Experiment::HadamardEmulate: t = hadamard_emulate(run, sizes); break;
      case Experiment::EmitCircuit: break;
    }
    out.artifact = render(cfg, t);
    out.exit_code = t.exit_code;
  }
  if (Checkpoint* c = run.checkpoint()) c->finish();
  return out;
}

void write_atomically(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp." + std::to_string(getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidArgument("cannot open " + tmp + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) {
      std::filesystem::remove(tmp);
      throw NumericalError("failed writing " + tmp);
    }
  }
  std::filesystem::rename(tmp, path);
}

int run(const ExperimentConfig& cfg) {
  const RunOutcome r = execute(cfg);
  if (cfg.out.empty())
    std::cout << r.artifact << std::flush;
  else
    write_atomically(cfg.out, r.artifact);
  return r.exit_code;
}

}  // namespace dqap::cli
