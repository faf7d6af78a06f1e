#include "dqap/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "dqap/error.hpp"
#include "dqap/format.hpp"

namespace dqap {

std::vector<double> ParamSchedule::flatten() const {
  std::vector<double> flat;
  flat.reserve(2 * layers.size());
  for (const LayerAngles& l : layers) {
    flat.push_back(l.theta1);
    flat.push_back(l.theta2);
  }
  return flat;
}

ParamSchedule ParamSchedule::from_flat(std::span<const double> flat) {
  if (flat.size() % 2 != 0) throw InvalidArgument("flattened schedule must have even length");
  ParamSchedule s;
  for (std::size_t i = 0; i < flat.size(); i += 2) s.layers.push_back({flat[i], flat[i + 1]});
  return s;
}

ParamSchedule ParamSchedule::truncated(int m) const {
  if (m < 0 || m > depth()) throw InvalidArgument("truncation depth out of range");
  ParamSchedule s;
  s.layers.assign(layers.begin(), layers.begin() + m);
  return s;
}

void ParamSchedule::validate() const {
  for (const LayerAngles& l : layers)
    if (!std::isfinite(l.theta1) || !std::isfinite(l.theta2))
      throw InvalidArgument("schedule contains a non-finite angle");
}

std::string schedule_to_csv(const ParamSchedule& s) {
  std::string out = "m,theta1,theta2\n";
  for (int m = 0; m < s.depth(); ++m) {
    out += std::to_string(m + 1) + "," + format_real(s.layers[m].theta1) + "," +
           format_real(s.layers[m].theta2) + "\n";
  }
  return out;
}

ParamSchedule schedule_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "m,theta1,theta2")
    throw InvalidArgument("schedule CSV must start with the header 'm,theta1,theta2'");
  ParamSchedule s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw InvalidArgument("malformed schedule row: '" + line + "'");
    const long long m = parse_integer(std::string_view(line).substr(0, c1));
    if (m != s.depth() + 1) throw InvalidArgument("schedule rows must be numbered 1..M in order");
    s.layers.push_back({parse_real(std::string_view(line).substr(c1 + 1, c2 - c1 - 1)),
                        parse_real(std::string_view(line).substr(c2 + 1))});
  }
  s.validate();
  return s;
}

void to_json(nlohmann::json& j, const ParamSchedule& s) {
  j = nlohmann::json::array();
  for (const LayerAngles& l : s.layers) j.push_back({l.theta1, l.theta2});
}

void from_json(const nlohmann::json& j, ParamSchedule& s) {
  s.layers.clear();
  for (const auto& row : j) s.layers.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
  s.validate();
}

const char* to_string(WarmStart w) {
  switch (w) {
    case WarmStart::FromPreviousM: return "previous";
    case WarmStart::Fixed: return "fixed";
    case WarmStart::Random: return "random";
  }
  return "?";
}

WarmStart warm_start_from_string(const std::string& text) {
  if (text == "previous") return WarmStart::FromPreviousM;
  if (text == "fixed") return WarmStart::Fixed;
  if (text == "random") return WarmStart::Random;
  throw InvalidArgument("unknown warm start '" + text + "'");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (!(max_learning_rate >= learning_rate))
    throw InvalidArgument("max_learning_rate must be at least learning_rate");
  if (!(metric_regularization >= 0.0)) throw InvalidArgument("metric_regularization must be >= 0");
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
  if (!(grad_tolerance > 0.0)) throw InvalidArgument("grad_tolerance must be positive");
  if (!(energy_tolerance >= 0.0)) throw InvalidArgument("energy_tolerance must be >= 0");
  if (random_restarts < 0) throw InvalidArgument("random_restarts must be >= 0");
}

void to_json(nlohmann::json& j, const OptimizationResult& r) {
  j = nlohmann::json{{"schedule", r.schedule},          {"energy", r.energy},
                     {"grad_norm", r.grad_norm},        {"iterations", r.iterations},
                     {"converged", r.converged},        {"energy_history", r.energy_history}};
}

void from_json(const nlohmann::json& j, OptimizationResult& r) {
  r.schedule = j.at("schedule").get<ParamSchedule>();
  r.energy = j.at("energy").get<double>();
  r.grad_norm = j.at("grad_norm").get<double>();
  r.iterations = j.at("iterations").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.energy_history = j.at("energy_history").get<std::vector<double>>();
}

SlaterState evolve(const ParamSchedule& schedule, const SshParams& p) {
  schedule.validate();
  const SingleParticleHamiltonians hams = build_hamiltonians(p, false);
  SlaterState s = initial_state(p);
  for (const LayerAngles& l : schedule.layers) s = apply_layer(s, hams, l.theta1, l.theta2);
  return s;
}

namespace {

OrbitalMatrix evolve_orbitals(const SingleParticleHamiltonians& hams, const ParamSchedule& s) {
  OrbitalMatrix p = OrbitalMatrix::Zero(hams.L, hams.L / 2);
  const double amp = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < hams.L / 2; ++j) {
    p(2 * j, j) = amp;
    p(2 * j + 1, j) = amp;
  }
  for (const LayerAngles& l : s.layers) {
    apply_bond_evolution(p, hams.w_bonds, l.theta2);
    apply_bond_evolution(p, hams.v_bonds, l.theta1);
  }
  return p;
}

// Tangent vectors for every gate are carried to the final frame alongside
// the state. Gate g = 2m applies theta_m^(2) (w bonds), g = 2m+1 applies
// theta_m^(1) (v bonds).
GradientAndMetric evaluate(const SingleParticleHamiltonians& hams, const ParamSchedule& s,
                           bool with_metric) {
  const int L = hams.L;
  const int N = L / 2;
  const int K = 2 * s.depth();
  OrbitalMatrix p = OrbitalMatrix::Zero(L, N);
  const double amp = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < N; ++j) {
    p(2 * j, j) = amp;
    p(2 * j + 1, j) = amp;
  }

  OrbitalMatrix tangents(L, static_cast<Eigen::Index>(K) * N);
  for (int g = 0; g < K; ++g) {
    const LayerAngles& layer = s.layers[g / 2];
    const auto& bonds = (g % 2 == 0) ? hams.w_bonds : hams.v_bonds;
    const double theta = (g % 2 == 0) ? layer.theta2 : layer.theta1;
    apply_bond_evolution(p, bonds, theta);
    apply_bond_evolution(tangents, bonds, theta, static_cast<Eigen::Index>(g) * N);
    tangents.middleCols(static_cast<Eigen::Index>(g) * N, N) = apply_bond_operator(bonds, p);
  }

  auto param_index = [](int g) { return (g % 2 == 0) ? g + 1 : g - 1; };

  GradientAndMetric out;
  out.energy = bond_energy(p, hams);
  out.gradient = Eigen::VectorXd::Zero(K);

  OrbitalMatrix hp = apply_bond_operator(hams.v_bonds, p);
  hp += apply_bond_operator(hams.w_bonds, p);
  for (int g = 0; g < K; ++g) {
    // dE/dtheta = 2 Im tr(P^dag h T_g) with T_g the generator carried to the end.
    const Complex t = (hp.array().conjugate() *
                       tangents.middleCols(static_cast<Eigen::Index>(g) * N, N).array())
                          .sum();
    out.gradient(param_index(g)) = 2.0 * t.imag();
  }

  if (!with_metric) return out;

  // Project out the occupied space, then S_gh = Re tr(T_g^dag T_h).
  const Eigen::MatrixXcd overlaps = p.adjoint() * tangents;
  tangents.noalias() -= p * overlaps;
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(K, K);
  for (int r = 0; r < L; ++r) {
    Eigen::Map<const Eigen::MatrixXcd> block(tangents.row(r).data(), N, K);
    raw.noalias() += (block.adjoint() * block).real();
  }
  out.metric.resize(K, K);
  for (int g = 0; g < K; ++g)
    for (int h = 0; h < K; ++h) out.metric(param_index(g), param_index(h)) = raw(g, h);
  return out;
}

Eigen::VectorXd natural_direction(const Eigen::MatrixXd& metric, const Eigen::VectorXd& grad,
                                  double eps) {
  const Eigen::MatrixXd a = metric + eps * Eigen::MatrixXd::Identity(metric.rows(), metric.cols());
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) {
    Eigen::VectorXd d = llt.solve(grad);
    if (d.allFinite()) return d;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() == Eigen::Success) {
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double cutoff = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    Eigen::VectorXd inv = ev.unaryExpr([cutoff](double x) { return x > cutoff ? 1.0 / x : 0.0; });
    Eigen::VectorXd d = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose() * grad;
    if (d.allFinite()) return d;
  }
  return grad;
}

Eigen::Map<const Eigen::VectorXd> as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

OptimizationResult run_descent(const SingleParticleHamiltonians& hams, ParamSchedule init,
                               const OptimizerConfig& cfg) {
  init.validate();
  std::vector<double> theta = init.flatten();
  const Eigen::Index n = static_cast<Eigen::Index>(theta.size());

  OptimizationResult result;
  result.min_metric_eigenvalue = std::numeric_limits<double>::infinity();
  GradientAndMetric gm = evaluate(hams, init, true);
  if (!std::isfinite(gm.energy)) throw NumericalError("non-finite initial energy");
  double e = gm.energy;
  result.energy_history.push_back(e);

  double eta = cfg.learning_rate;
  bool first = true;
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    if (!gm.gradient.allFinite()) throw NumericalError("non-finite gradient during optimization");
    const double gnorm = gm.gradient.norm();
    if (gnorm < cfg.grad_tolerance) {
      result.converged = true;
      break;
    }
    if (cfg.track_metric_spectrum) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
          gm.metric + cfg.metric_regularization * Eigen::MatrixXd::Identity(n, n),
          Eigen::EigenvaluesOnly);
      result.min_metric_eigenvalue = std::min(result.min_metric_eigenvalue, eig.eigenvalues()(0));
    }
    const Eigen::VectorXd d = natural_direction(gm.metric, gm.gradient, cfg.metric_regularization);

    eta = first ? cfg.learning_rate : std::min(2.0 * eta, cfg.max_learning_rate);
    first = false;
    std::vector<double> trial(theta.size());
    double e_trial = e;
    bool accepted = false;
    std::optional<GradientAndMetric> trial_gm;
    // Energy differences below this are rounding; the analytic gradient still
    // resolves progress there.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(e), 1.0);
    while (eta >= 1e-12 * cfg.learning_rate) {
      Eigen::Map<Eigen::VectorXd>(trial.data(), n) = as_vector(theta) - eta * d;
      e_trial = evaluate(hams, ParamSchedule::from_flat(trial), false).energy;
      if (!std::isfinite(e_trial)) throw NumericalError("non-finite energy during line search");
      if (e_trial < e - noise) {
        accepted = true;
        break;
      }
      if (e_trial <= e + noise) {
        GradientAndMetric g = evaluate(hams, ParamSchedule::from_flat(trial), true);
        if (g.gradient.norm() < gnorm) {
          trial_gm = std::move(g);
          accepted = true;
          break;
        }
      }
      eta *= 0.5;
    }
    if (!accepted) {
      // No descent at working precision: numerically stationary.
      result.converged = true;
      break;
    }
    const double rel = std::abs(e - e_trial) / std::max(std::abs(e), 1e-300);
    theta = trial;
    e = std::min(e, e_trial);
    result.energy_history.push_back(e);
    gm = trial_gm ? std::move(*trial_gm) : evaluate(hams, ParamSchedule::from_flat(theta), true);
    if (!trial_gm && rel < cfg.energy_tolerance) {
      result.converged = true;
      ++it;
      break;
    }
  }
  result.schedule = ParamSchedule::from_flat(theta);
  result.energy = e;
  result.grad_norm = gm.gradient.norm();
  result.iterations = it;
  return result;
}

ParamSchedule fixed_schedule(int depth, LayerAngles angles) {
  ParamSchedule s;
  s.layers.assign(depth, angles);
  return s;
}

ParamSchedule random_schedule(int depth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, std::numbers::pi / 2);
  ParamSchedule s;
  for (int m = 0; m < depth; ++m) {
    const double a = dist(rng);
    s.layers.push_back({a, dist(rng)});
  }
  return s;
}

SshParams with_size(SshParams p, int L) {
  p.L = L;
  return p;
}

// Smallest ring of the same boundary class whose exact depth exceeds `depth`.
int causal_ring_size(const SshParams& p, int depth) {
  return p.bc == Boundary::AntiPeriodic ? 4 * (depth + 1) : 4 * (depth + 1) + 2;
}

OptimizationResult best_of(OptimizationResult a, OptimizationResult b) {
  return b.energy < a.energy ? std::move(b) : std::move(a);
}

OptimizationResult with_restarts(const SingleParticleHamiltonians& hams, int depth,
                                 const OptimizerConfig& cfg, OptimizationResult best) {
  for (int r = 0; r < cfg.random_restarts; ++r)
    best = best_of(std::move(best),
                   run_descent(hams, random_schedule(depth, cfg.seed + 1 + r), cfg));
  return best;
}

// Runs on a reduced ring when that is exact, then rescales to the full ring.
OptimizationResult descend_on(const SshParams& p, ParamSchedule init, const OptimizerConfig& cfg) {
  const int depth = init.depth();
  const bool reduce = cfg.reduce_size && p.closed_shell() && depth < exact_depth(p) &&
                      causal_ring_size(p, depth) < p.L;
  const SshParams work = reduce ? with_size(p, causal_ring_size(p, depth)) : p;
  const SingleParticleHamiltonians hams = build_hamiltonians(work, false);
  OptimizationResult r = run_descent(hams, std::move(init), cfg);
  r = with_restarts(hams, depth, cfg, std::move(r));
  if (reduce) {
    const double scale = static_cast<double>(p.L) / work.L;
    for (double& e : r.energy_history) e *= scale;
    const GradientAndMetric full = evaluate(build_hamiltonians(p, false), r.schedule, false);
    r.energy = full.energy;
    r.grad_norm = full.gradient.norm();
  }
  return r;
}

}  // namespace

GradientAndMetric gradient_and_metric(const ParamSchedule& schedule, const SshParams& p) {
  schedule.validate();
  return evaluate(build_hamiltonians(p, false), schedule, true);
}

double schedule_energy(const ParamSchedule& schedule, const SshParams& p) {
  schedule.validate();
  const SingleParticleHamiltonians hams = build_hamiltonians(p, false);
  return bond_energy(evolve_orbitals(hams, schedule), hams);
}

int exact_depth(const SshParams& p) {
  return p.bc == Boundary::AntiPeriodic ? p.L / 4 : (p.L - 2) / 4;
}

ParamSchedule interpolate_schedule(const ParamSchedule& previous, int depth) {
  if (depth < 1) throw InvalidArgument("depth must be >= 1");
  const int prev = previous.depth();
  if (prev == 0) throw InvalidArgument("cannot interpolate an empty schedule");
  ParamSchedule out;
  for (int m = 0; m < depth; ++m) {
    // Layer midpoints on [0, 1], clamped onto the previous grid's range.
    const double x = (m + 0.5) / depth * prev - 0.5;
    const double xc = std::clamp(x, 0.0, static_cast<double>(prev - 1));
    const int i0 = std::min(static_cast<int>(std::floor(xc)), prev - 1);
    const int i1 = std::min(i0 + 1, prev - 1);
    const double f = xc - i0;
    out.layers.push_back({(1 - f) * previous.layers[i0].theta1 + f * previous.layers[i1].theta1,
                          (1 - f) * previous.layers[i0].theta2 + f * previous.layers[i1].theta2});
  }
  return out;
}

std::vector<OptimizationResult> exact_depth_ladder(const SshParams& p, const OptimizerConfig& cfg) {
  cfg.validate();
  p.validate(true);
  const int top = exact_depth(p);
  // Every rung has an exact solution, so converge on the gradient alone.
  OptimizerConfig exact_cfg = cfg;
  exact_cfg.energy_tolerance = 0.0;
  std::vector<OptimizationResult> rungs;
  for (int m = 1; m <= top; ++m) {
    const SshParams rung = with_size(p, p.bc == Boundary::AntiPeriodic ? 4 * m : 4 * m + 2);
    const ParamSchedule seed = m == 1 ? fixed_schedule(1, cfg.fixed_angles)
                                      : interpolate_schedule(rungs.back().schedule, m);
    rungs.push_back(descend_on(rung, seed, exact_cfg));
  }
  return rungs;
}

std::vector<OptimizationResult> optimize_depth_scan(const SshParams& p, int max_depth,
                                                    const OptimizerConfig& cfg) {
  return optimize_depth_scan(p, max_depth, cfg, {}, nullptr);
}

std::vector<OptimizationResult> optimize_depth_scan(const SshParams& p, int max_depth,
                                                    const OptimizerConfig& cfg,
                                                    std::vector<OptimizationResult> completed,
                                                    const DepthCallback& on_result) {
  cfg.validate();
  p.validate(false);
  if (static_cast<int>(completed.size()) > max_depth)
    completed.resize(static_cast<std::size_t>(std::max(max_depth, 0)));
  for (std::size_t i = 0; i < completed.size(); ++i)
    if (completed[i].schedule.depth() != static_cast<int>(i) + 1)
      throw InvalidArgument("completed results must cover depths 1, 2, ... in order");
  std::vector<OptimizationResult> results = std::move(completed);
  const int exact = p.closed_shell() ? exact_depth(p) : -1;
  for (int m = static_cast<int>(results.size()) + 1; m <= max_depth; ++m) {
    if (m == exact) {
      results.push_back(exact_depth_ladder(p, cfg).back());
    } else {
      const ParamSchedule seed = m == 1 ? fixed_schedule(1, cfg.fixed_angles)
                                        : interpolate_schedule(results.back().schedule, m);
      results.push_back(descend_on(p, seed, cfg));
    }
    if (on_result) on_result(m, results.back());
  }
  return results;
}

OptimizationResult optimize(const SshParams& p, int depth, const OptimizerConfig& cfg,
                            std::optional<ParamSchedule> init) {
  cfg.validate();
  p.validate(false);
  if (depth < 1) throw InvalidArgument("depth must be >= 1");
  if (init) {
    if (init->depth() != depth) throw InvalidArgument("initial schedule depth does not match M");
    return descend_on(p, std::move(*init), cfg);
  }
  switch (cfg.warm_start) {
    case WarmStart::FromPreviousM:
      return optimize_depth_scan(p, depth, cfg).back();
    case WarmStart::Fixed:
      return descend_on(p, fixed_schedule(depth, cfg.fixed_angles), cfg);
    case WarmStart::Random:
      return descend_on(p, random_schedule(depth, cfg.seed), cfg);
  }
  throw InvalidArgument("unknown warm start");
}

}  // namespace dqap
