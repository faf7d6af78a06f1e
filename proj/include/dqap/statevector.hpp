#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dqap/ansatz.hpp"
#include "dqap/circuit.hpp"
#include "dqap/gaussian.hpp"
#include "dqap/model.hpp"
#include "dqap/types.hpp"

namespace dqap {

// Dense n-qubit state. Bit q of a basis index is qubit q; |1> is an occupied site.
class Statevector {
 public:
  static constexpr int kMaxQubits = 20;

  explicit Statevector(int n_qubits);  // |0...0>
  // Takes ownership of 2^n amplitudes; the norm must be 1 to 1e-12.
  static Statevector from_amplitudes(int n_qubits, std::vector<Complex> amplitudes);

  int qubits() const { return n_; }
  std::span<const Complex> amplitudes() const { return amps_; }
  Complex amplitude(std::uint64_t index) const { return amps_.at(index); }
  double norm() const;

  void x(int q);
  void h(int q);
  void s_dag(int q);
  void rx(int q, double angle);
  void rz(int q, double angle);
  void cnot(int control, int target);
  void cphase(int control, int target, double angle);
  void zzphase(int a, int b, double angle);
  // exp(-i phi (XX + YY)/2)
  void xx_plus_yy(int a, int b, double phi);

  void apply(const Gate& g);

  // Probability of reading 1 on qubit q.
  double probability_one(int q) const;

 private:
  void apply_1q(int q, const Eigen::Matrix2cd& u);
  void check_qubit(int q) const;

  int n_;
  std::vector<Complex> amps_;
};

void apply_circuit(Statevector& sv, const CircuitIR& c);
Statevector run_circuit(const CircuitIR& c);

// Dimer preparation followed by the DQAP layers, built gate by gate.
Statevector build_dqap_state(const SshParams& p, const ParamSchedule& schedule);

// <c_l^dag c_l'> on sites offset..offset+L-1 with explicit Jordan-Wigner signs.
CorrelationMatrix correlation_from_statevector(const Statevector& sv, int L, int offset = 0);

// <H_SSH> with the fermionic ring-closing bond carrying gamma.
double fermionic_energy(const Statevector& sv, const SshParams& p, int offset = 0);

// sum_s |psi_s|^2 exp(2 pi i sum_l l n_l / L).
Complex resta_expectation(const Statevector& sv, int L, int offset = 0);

// Lowest eigenvector of the qubit Hamiltonian in the N = L/2 sector,
// embedded into the full register.
struct QubitGroundState {
  Statevector state;
  double energy = 0.0;
};
QubitGroundState qubit_ground_state(const SshParams& p);

// |<a|b>|^2
double fidelity(const Statevector& a, const Statevector& b);

struct ShotResult {
  double x_hat = 0.0;
  double y_hat = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  int shots_x = 0;
  int shots_y = 0;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const ShotResult& r);

// Exact <X> or <Y> of the ancilla in the Hadamard-test circuit.
double ancilla_expectation(const SshParams& p, const ParamSchedule& schedule,
                           MeasurementBasis basis);

// One basis of the Hadamard test. shots == 0 returns the analytic value with
// zero error. Only the fields of the measured basis are filled.
ShotResult hadamard_test(const SshParams& p, const ParamSchedule& schedule,
                         MeasurementBasis basis, int shots, std::uint64_t seed);

// Both bases, sampled from independent streams of the same seed.
ShotResult hadamard_test_xy(const SshParams& p, const ParamSchedule& schedule, int shots,
                            std::uint64_t seed);

struct SampleMean {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Sample mean of `shots` +/-1 outcomes with <outcome> = expectation, drawn
// from the counter-based stream (seed, stream).
SampleMean sample_pm1(double expectation, int shots, std::uint64_t seed, std::uint64_t stream);

// sqrt((x dy)^2 + (y dx)^2) / (x^2 + y^2)
double polarization_error(double x, double y, double dx, double dy);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace dqap
