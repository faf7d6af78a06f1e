#include "dqap/statevector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <tuple>

#include "dqap/error.hpp"

namespace dqap {

namespace {

using Index = std::uint64_t;

constexpr Complex kI{0.0, 1.0};

Index bit(int q) { return Index{1} << q; }

// Ring register on qubits offset..offset+L-1, prepared gate by gate without
// going through CircuitIR.
void prepare_dqap(Statevector& sv, const SshParams& p, const ParamSchedule& schedule,
                  int offset) {
  p.validate();
  schedule.validate();
  const SingleParticleHamiltonians hams = build_hamiltonians(p);
  for (const Bond& b : hams.v_bonds) {
    sv.h(offset + b.a);
    sv.x(offset + b.b);
    sv.cnot(offset + b.a, offset + b.b);
  }
  for (const LayerAngles& m : schedule.layers) {
    for (const Bond& b : hams.w_bonds)
      sv.xx_plus_yy(offset + b.a, offset + b.b, bond_rotation_angle(b, p, m.theta2));
    for (const Bond& b : hams.v_bonds)
      sv.xx_plus_yy(offset + b.a, offset + b.b, bond_rotation_angle(b, p, m.theta1));
  }
}

Statevector hadamard_circuit_state(const SshParams& p, const ParamSchedule& schedule,
                                   MeasurementBasis basis) {
  Statevector sv(p.L + 1);
  sv.h(0);
  prepare_dqap(sv, p, schedule, 1);
  for (int l = 1; l < p.L; ++l) sv.cphase(0, l, 2.0 * std::numbers::pi * l / p.L);
  if (basis == MeasurementBasis::Y) sv.s_dag(0);
  sv.h(0);
  return sv;
}

double uniform01(std::uint64_t key, std::uint64_t counter) {
  return static_cast<double>(splitmix64(key + counter * 0x9E3779B97F4A7C15ULL) >> 11) * 0x1.0p-53;
}

}  // namespace

Statevector::Statevector(int n_qubits) : n_(n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits)
    throw InvalidArgument("statevector supports 1.." + std::to_string(kMaxQubits) + " qubits, got " +
                          std::to_string(n_qubits));
  amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
  amps_[0] = 1.0;
}

Statevector Statevector::from_amplitudes(int n_qubits, std::vector<Complex> amplitudes) {
  Statevector sv(n_qubits);
  if (amplitudes.size() != sv.amps_.size()) throw InvalidArgument("amplitude count is not 2^n");
  sv.amps_ = std::move(amplitudes);
  if (std::abs(sv.norm() - 1.0) > 1e-12) throw InvalidArgument("amplitudes are not normalized");
  return sv;
}

double Statevector::norm() const {
  double s = 0.0;
  for (const Complex& a : amps_) s += std::norm(a);
  return std::sqrt(s);
}

void Statevector::check_qubit(int q) const {
  if (q < 0 || q >= n_) throw InvalidArgument("qubit index out of range");
}

void Statevector::apply_1q(int q, const Eigen::Matrix2cd& u) {
  check_qubit(q);
  const Index m = bit(q);
  for (Index i = 0; i < amps_.size(); ++i) {
    if (i & m) continue;
    const Complex a0 = amps_[i];
    const Complex a1 = amps_[i | m];
    amps_[i] = u(0, 0) * a0 + u(0, 1) * a1;
    amps_[i | m] = u(1, 0) * a0 + u(1, 1) * a1;
  }
}

void Statevector::x(int q) {
  check_qubit(q);
  const Index m = bit(q);
  for (Index i = 0; i < amps_.size(); ++i)
    if (!(i & m)) std::swap(amps_[i], amps_[i | m]);
}

void Statevector::h(int q) {
  const double r = std::numbers::sqrt2 / 2;
  Eigen::Matrix2cd u;
  u << r, r, r, -r;
  apply_1q(q, u);
}

void Statevector::s_dag(int q) {
  check_qubit(q);
  const Index m = bit(q);
  for (Index i = 0; i < amps_.size(); ++i)
    if (i & m) amps_[i] *= -kI;
}

void Statevector::rx(int q, double angle) {
  const double c = std::cos(angle / 2);
  const double s = std::sin(angle / 2);
  Eigen::Matrix2cd u;
  u << c, -kI * s, -kI * s, c;
  apply_1q(q, u);
}

void Statevector::rz(int q, double angle) {
  check_qubit(q);
  const Index m = bit(q);
  const Complex lo = std::polar(1.0, -angle / 2);
  const Complex hi = std::polar(1.0, angle / 2);
  for (Index i = 0; i < amps_.size(); ++i) amps_[i] *= (i & m) ? hi : lo;
}

void Statevector::cnot(int control, int target) {
  check_qubit(control);
  check_qubit(target);
  if (control == target) throw InvalidArgument("CNOT control equals target");
  const Index mc = bit(control);
  const Index mt = bit(target);
  for (Index i = 0; i < amps_.size(); ++i)
    if ((i & mc) && !(i & mt)) std::swap(amps_[i], amps_[i | mt]);
}

void Statevector::cphase(int control, int target, double angle) {
  check_qubit(control);
  check_qubit(target);
  if (control == target) throw InvalidArgument("CPHASE control equals target");
  const Index both = bit(control) | bit(target);
  const Complex ph = std::polar(1.0, angle);
  for (Index i = 0; i < amps_.size(); ++i)
    if ((i & both) == both) amps_[i] *= ph;
}

void Statevector::zzphase(int a, int b, double angle) {
  check_qubit(a);
  check_qubit(b);
  if (a == b) throw InvalidArgument("ZZPHASE on a single qubit");
  const Index ma = bit(a);
  const Index mb = bit(b);
  const Complex even = std::polar(1.0, -angle / 2);
  const Complex odd = std::polar(1.0, angle / 2);
  for (Index i = 0; i < amps_.size(); ++i) amps_[i] *= (!(i & ma) == !(i & mb)) ? even : odd;
}

void Statevector::xx_plus_yy(int a, int b, double phi) {
  check_qubit(a);
  check_qubit(b);
  if (a == b) throw InvalidArgument("XX+YY rotation on a single qubit");
  const Index ma = bit(a);
  const Index mb = bit(b);
  const double c = std::cos(phi);
  const Complex s = -kI * std::sin(phi);
  for (Index i = 0; i < amps_.size(); ++i) {
    if ((i & ma) || (i & mb)) continue;
    const Complex a01 = amps_[i | ma];
    const Complex a10 = amps_[i | mb];
    amps_[i | ma] = c * a01 + s * a10;
    amps_[i | mb] = s * a01 + c * a10;
  }
}

void Statevector::apply(const Gate& g) {
  switch (g.kind) {
    case GateKind::X: return x(g.q0);
    case GateKind::H: return h(g.q0);
    case GateKind::S_DAG: return s_dag(g.q0);
    case GateKind::RX: return rx(g.q0, *g.angle);
    case GateKind::RZ: return rz(g.q0, *g.angle);
    case GateKind::CNOT: return cnot(g.q0, g.q1);
    case GateKind::CPHASE: return cphase(g.q0, g.q1, *g.angle);
    case GateKind::ZZPHASE: return zzphase(g.q0, g.q1, *g.angle);
    case GateKind::ISWAP: return xx_plus_yy(g.q0, g.q1, *g.angle / 2);
  }
  throw InvalidArgument("unknown gate kind");
}

double Statevector::probability_one(int q) const {
  check_qubit(q);
  const Index m = bit(q);
  double p = 0.0;
  for (Index i = 0; i < amps_.size(); ++i)
    if (i & m) p += std::norm(amps_[i]);
  return p;
}

void apply_circuit(Statevector& sv, const CircuitIR& c) {
  if (c.n_qubits() != sv.qubits()) throw InvalidArgument("circuit and register sizes differ");
  c.validate();
  for (const Gate& g : c.gates()) sv.apply(g);
}

Statevector run_circuit(const CircuitIR& c) {
  Statevector sv(c.n_qubits());
  apply_circuit(sv, c);
  return sv;
}

Statevector build_dqap_state(const SshParams& p, const ParamSchedule& schedule) {
  Statevector sv(p.L);
  prepare_dqap(sv, p, schedule, 0);
  return sv;
}

CorrelationMatrix correlation_from_statevector(const Statevector& sv, int L, int offset) {
  if (offset < 0 || offset + L > sv.qubits()) throw InvalidArgument("sites outside the register");
  const auto amps = sv.amplitudes();
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(L, L);
  for (Index s = 0; s < amps.size(); ++s) {
    if (amps[s] == Complex{}) continue;
    for (int l = 0; l < L; ++l) {
      const Index ml = bit(offset + l);
      if (s & ml) c(l, l) += std::norm(amps[s]);
    }
    // c_l^dag c_lp |s> for l != lp: site lp occupied, site l empty.
    for (int lp = 0; lp < L; ++lp) {
      const Index mlp = bit(offset + lp);
      if (!(s & mlp)) continue;
      for (int l = 0; l < L; ++l) {
        const Index ml = bit(offset + l);
        if (l == lp || (s & ml)) continue;
        const int lo = std::min(l, lp);
        const int hi = std::max(l, lp);
        const Index between = (bit(offset + hi) - 1) & ~(bit(offset + lo + 1) - 1);
        const double sign = std::popcount(s & between) % 2 == 0 ? 1.0 : -1.0;
        const Index t = s ^ mlp ^ ml;
        c(l, lp) += std::conj(amps[t]) * amps[s] * sign;
      }
    }
  }
  return CorrelationMatrix{c};
}

double fermionic_energy(const Statevector& sv, const SshParams& p, int offset) {
  const SingleParticleHamiltonians hams = build_hamiltonians(p);
  const CorrelationMatrix c = correlation_from_statevector(sv, p.L, offset);
  const Complex e = (hams.h.array() * c.values.array()).sum();
  if (std::abs(e.imag()) > 1e-9) throw NumericalError("complex energy from statevector");
  return e.real();
}

Complex resta_expectation(const Statevector& sv, int L, int offset) {
  if (offset < 0 || offset + L > sv.qubits()) throw InvalidArgument("sites outside the register");
  const auto amps = sv.amplitudes();
  Complex z{0.0, 0.0};
  for (Index s = 0; s < amps.size(); ++s) {
    const double w = std::norm(amps[s]);
    if (w == 0.0) continue;
    long long moment = 0;
    for (int l = 1; l <= L; ++l)
      if (s & bit(offset + l - 1)) moment += l;
    z += w * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(moment % L) / L);
  }
  return z;
}

QubitGroundState qubit_ground_state(const SshParams& p) {
  p.validate();
  if (p.L > 16) throw InvalidArgument("qubit exact diagonalization limited to L <= 16");
  const int L = p.L;
  const int N = p.particles();
  // Closed-shell condition: the qubit model has uniform hoppings around the ring.
  std::vector<std::tuple<int, int, double>> bonds;
  for (int j = 0; j < L; ++j) bonds.emplace_back(j, (j + 1) % L, j % 2 == 0 ? p.v : p.w);

  std::vector<Index> basis;
  std::vector<int> position(std::size_t{1} << L, -1);
  for (Index s = 0; s < (Index{1} << L); ++s)
    if (std::popcount(s) == N) {
      position[s] = static_cast<int>(basis.size());
      basis.push_back(s);
    }
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(basis.size(), basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Index s = basis[k];
    for (const auto& [a, b, t] : bonds) {
      if (!(s & bit(a)) == !(s & bit(b))) continue;
      // -t (XX + YY)/2 swaps the occupations of a and b.
      h(position[s ^ bit(a) ^ bit(b)], k) -= t;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("sector diagonalization failed");
  const auto& e = solver.eigenvalues();
  if (e.size() > 1 && e(1) - e(0) < 1e-10) throw NumericalError("degenerate qubit ground state");

  std::vector<Complex> amps(std::size_t{1} << L);
  for (std::size_t k = 0; k < basis.size(); ++k) amps[basis[k]] = solver.eigenvectors()(k, 0);
  QubitGroundState out{Statevector::from_amplitudes(L, std::move(amps)), e(0)};
  return out;
}

double fidelity(const Statevector& a, const Statevector& b) {
  if (a.qubits() != b.qubits()) throw InvalidArgument("register sizes differ");
  Complex s{0.0, 0.0};
  for (Index i = 0; i < a.amplitudes().size(); ++i)
    s += std::conj(a.amplitudes()[i]) * b.amplitudes()[i];
  return std::norm(s);
}

void to_json(nlohmann::json& j, const ShotResult& r) {
  j = nlohmann::json{{"x_hat", r.x_hat},     {"y_hat", r.y_hat},     {"dx", r.dx},
                     {"dy", r.dy},           {"shots_x", r.shots_x}, {"shots_y", r.shots_y},
                     {"seed", r.seed}};
}

double ancilla_expectation(const SshParams& p, const ParamSchedule& schedule,
                           MeasurementBasis basis) {
  return 1.0 - 2.0 * hadamard_circuit_state(p, schedule, basis).probability_one(0);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

SampleMean sample_pm1(double expectation, int shots, std::uint64_t seed, std::uint64_t stream) {
  if (shots < 1) throw InvalidArgument("shots must be positive");
  if (!(std::abs(expectation) <= 1.0 + 1e-12)) throw InvalidArgument("expectation outside [-1, 1]");
  const double p_plus = std::clamp((1.0 + expectation) / 2.0, 0.0, 1.0);
  const std::uint64_t key = splitmix64(seed ^ splitmix64(stream));
  long long sum = 0;
  for (int i = 0; i < shots; ++i) sum += uniform01(key, static_cast<std::uint64_t>(i)) < p_plus ? 1 : -1;
  const double mean = static_cast<double>(sum) / shots;
  return SampleMean{mean, std::sqrt(std::max(0.0, 1.0 - mean * mean) / shots)};
}

ShotResult hadamard_test(const SshParams& p, const ParamSchedule& schedule,
                         MeasurementBasis basis, int shots, std::uint64_t seed) {
  if (shots < 0) throw InvalidArgument("shots must be non-negative");
  const double exact = ancilla_expectation(p, schedule, basis);
  SampleMean est{exact, 0.0};
  if (shots > 0) est = sample_pm1(exact, shots, seed, basis == MeasurementBasis::X ? 0 : 1);
  ShotResult r;
  r.seed = seed;
  if (basis == MeasurementBasis::X) {
    r.x_hat = est.mean;
    r.dx = est.stderr_;
    r.shots_x = shots;
  } else {
    r.y_hat = est.mean;
    r.dy = est.stderr_;
    r.shots_y = shots;
  }
  return r;
}

ShotResult hadamard_test_xy(const SshParams& p, const ParamSchedule& schedule, int shots,
                            std::uint64_t seed) {
  ShotResult r = hadamard_test(p, schedule, MeasurementBasis::X, shots, seed);
  const ShotResult y = hadamard_test(p, schedule, MeasurementBasis::Y, shots, seed);
  r.y_hat = y.y_hat;
  r.dy = y.dy;
  r.shots_y = y.shots_y;
  return r;
}

double polarization_error(double x, double y, double dx, double dy) {
  const double r2 = x * x + y * y;
  if (!(r2 > 0.0)) throw InvalidArgument("polarization error undefined at x = y = 0");
  return std::sqrt((x * dy) * (x * dy) + (y * dx) * (y * dx)) / r2;
}

}  // namespace dqap
