#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dqap/gaussian.hpp"
#include "dqap/model.hpp"

namespace dqap {

struct LayerAngles {
  double theta1 = 0.0;  // v-bond evolution time
  double theta2 = 0.0;  // w-bond evolution time
};

// Variational angles of the DQAP circuit, layer m = 1..M in application order.
struct ParamSchedule {
  std::vector<LayerAngles> layers;

  int depth() const { return static_cast<int>(layers.size()); }
  // theta_1^(1), theta_1^(2), theta_2^(1), ...
  std::vector<double> flatten() const;
  static ParamSchedule from_flat(std::span<const double> flat);
  // First m layers only.
  ParamSchedule truncated(int m) const;
  void validate() const;
};

// "m,theta1,theta2" header followed by one row per layer.
std::string schedule_to_csv(const ParamSchedule& s);
ParamSchedule schedule_from_csv(std::string_view text);

void to_json(nlohmann::json& j, const ParamSchedule& s);
void from_json(const nlohmann::json& j, ParamSchedule& s);

enum class WarmStart { FromPreviousM, Fixed, Random };

const char* to_string(WarmStart w);
WarmStart warm_start_from_string(const std::string& text);

struct OptimizerConfig {
  double learning_rate = 0.1;
  // The step grows by 2x after each accepted step up to this cap; set equal
  // to learning_rate for a fixed step with backtracking only.
  double max_learning_rate = 1.0;
  double metric_regularization = 1e-6;
  int max_iterations = 5000;
  double grad_tolerance = 1e-10;
  double energy_tolerance = 1e-13;  // relative; 0 converges on the gradient alone
  WarmStart warm_start = WarmStart::FromPreviousM;
  std::uint64_t seed = 0;
  // Seed layer for depth 1 and for WarmStart::Fixed.
  LayerAngles fixed_angles{0.1, 0.1};
  int random_restarts = 0;
  // Optimize depth-M schedules below the exact-preparation depth on the
  // smallest ring whose causal cone does not wrap; the optimum is identical.
  bool reduce_size = true;
  // Record the smallest eigenvalue of S + eps I at every accepted iterate.
  bool track_metric_spectrum = false;

  void validate() const;
};

struct OptimizationResult {
  ParamSchedule schedule;
  double energy = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> energy_history;
  double min_metric_eigenvalue = 0.0;  // only meaningful with track_metric_spectrum
};

void to_json(nlohmann::json& j, const OptimizationResult& r);
void from_json(const nlohmann::json& j, OptimizationResult& r);

SlaterState evolve(const ParamSchedule& schedule, const SshParams& p);

struct GradientAndMetric {
  double energy = 0.0;
  Eigen::VectorXd gradient;  // flattened parameter order
  Eigen::MatrixXd metric;    // Re of the quantum geometric tensor
};

GradientAndMetric gradient_and_metric(const ParamSchedule& schedule, const SshParams& p);

// Energy of the DQAP state without materializing a SlaterState.
double schedule_energy(const ParamSchedule& schedule, const SshParams& p);

// Depth at which the circuit reproduces the ground state exactly:
// L/4 (APBC) or (L-2)/4 (PBC).
int exact_depth(const SshParams& p);

// Resamples a depth-(M-1) schedule onto M layers by linear interpolation of
// each angle sequence at layer midpoints.
ParamSchedule interpolate_schedule(const ParamSchedule& previous, int depth);

// Natural-gradient descent from `init` (or the configured warm start).
OptimizationResult optimize(const SshParams& p, int depth, const OptimizerConfig& cfg,
                            std::optional<ParamSchedule> init = std::nullopt);

// Optimized schedules for depths 1..max_depth, each seeded from the previous
// depth. The exact-preparation depth is seeded by exact_depth_ladder instead.
std::vector<OptimizationResult> optimize_depth_scan(const SshParams& p, int max_depth,
                                                    const OptimizerConfig& cfg);

using DepthCallback = std::function<void(int depth, const OptimizationResult&)>;

// Resumable scan: `completed` holds results for depths 1..k from an earlier
// run and is continued from depth k+1. `on_result` sees each new depth.
std::vector<OptimizationResult> optimize_depth_scan(const SshParams& p, int max_depth,
                                                    const OptimizerConfig& cfg,
                                                    std::vector<OptimizationResult> completed,
                                                    const DepthCallback& on_result);

// Exact-depth solutions on rings of size 4, 8, ..., L (APBC) or 6, 10, ..., L
// (PBC), each seeded by interpolating the previous rung. Entry i belongs to
// depth i+1 on its own ring size.
std::vector<OptimizationResult> exact_depth_ladder(const SshParams& p, const OptimizerConfig& cfg);

}  // namespace dqap
