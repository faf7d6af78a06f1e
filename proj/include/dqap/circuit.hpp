#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dqap/ansatz.hpp"
#include "dqap/model.hpp"

namespace dqap {

// Gate semantics, all angles in radians:
//   RX(t) = exp(-i t X/2), RZ(t) = exp(-i t Z/2)
//   CPHASE(l) = diag(1, 1, 1, e^{il})
//   ZZPHASE(t) = exp(-i t ZZ/2), i.e. ZZPhase(alpha) with alpha = t/pi
//   ISWAP(t) = exp(-i t (XX+YY)/4), i.e. ISWAP(alpha) with alpha = t/pi
enum class GateKind { X, H, RX, RZ, S_DAG, CNOT, CPHASE, ZZPHASE, ISWAP };

const char* to_string(GateKind k);
GateKind gate_kind_from_string(std::string_view text);
int arity(GateKind k);
bool is_parameterized(GateKind k);

struct Gate {
  GateKind kind = GateKind::X;
  int q0 = 0;
  int q1 = -1;  // second qubit of two-qubit gates, -1 otherwise
  std::optional<double> angle;

  bool operator==(const Gate&) const = default;
};

class CircuitIR {
 public:
  CircuitIR() = default;
  explicit CircuitIR(int n_qubits);

  int n_qubits() const { return n_qubits_; }
  const std::vector<Gate>& gates() const { return gates_; }

  // Validated append.
  void add(GateKind kind, int q0, int q1 = -1, std::optional<double> angle = std::nullopt);
  void add(const Gate& g);
  void append(const CircuitIR& other);
  void validate() const;

  bool operator==(const CircuitIR&) const = default;

 private:
  int n_qubits_ = 0;
  std::vector<Gate> gates_;
};

enum class MeasurementBasis { X, Y };

const char* to_string(MeasurementBasis b);
MeasurementBasis measurement_basis_from_string(std::string_view text);

// Effective XX+YY coupling of a bond on the qubit register. The ring-closing
// bond picks up the Jordan-Wigner string (-1)^(N-1) at fixed N.
double qubit_coupling(const Bond& bond, const SshParams& p);

// Rotation angle phi of exp(-i phi (XX+YY)/2) realizing exp(-i theta H_bond).
double bond_rotation_angle(const Bond& bond, const SshParams& p, double theta);

// Dimer preparation and M layers on qubits offset..offset+L-1; qubit offset+l-1
// holds site l.
CircuitIR build_state_circuit(const SshParams& p, const ParamSchedule& schedule,
                              int offset = 0, int total_qubits = -1);

// Ancilla on qubit 0, system on 1..L: H, state preparation, controlled-phase
// chain for U_R, then the ancilla basis change (H, or S_dag then H).
CircuitIR build_measurement_circuit(const SshParams& p, const ParamSchedule& schedule,
                                    MeasurementBasis basis);

// exp(-i phi (XX+YY)/2) as RX(pi/2)^2 . CNOT . (RX(phi) x RZ(phi)) . CNOT . RX(-pi/2)^2,
// listed in time order.
std::vector<Gate> xx_plus_yy_decomposition(int a, int b, double phi);

// Rewrites CNOT, CPHASE and ISWAP into ZZPHASE plus single-qubit gates.
// Equal to the input up to a global phase.
CircuitIR lower_to_native(const CircuitIR& c);

// Number of ZZPHASE gates; throws if other two-qubit gates remain.
int count_native_gates(const CircuitIR& lowered);

// 2ML + 3L/2 - 1 with the Hadamard test, 2ML + L/2 for state preparation only.
int predicted_counts(int L, int M, bool with_hadamard_test);

// Text form: "DQAPIR 1 qubits=<n>" then one "KIND q[i][,q[j]][,angle]" per line.
// The parser skips lines starting with '#'; the emitter never writes them.
std::string emit_text(const CircuitIR& c);
CircuitIR parse_text(std::string_view text);

std::string emit_json(const CircuitIR& c);
CircuitIR parse_json(std::string_view text);

}  // namespace dqap
