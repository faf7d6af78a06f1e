#include "dqap/model.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "dqap/error.hpp"

namespace dqap {

const char* to_string(Boundary bc) { return bc == Boundary::Periodic ? "pbc" : "apbc"; }

Boundary boundary_from_string(const std::string& text) {
  if (text == "pbc" || text == "PBC") return Boundary::Periodic;
  if (text == "apbc" || text == "APBC") return Boundary::AntiPeriodic;
  throw InvalidArgument("unknown boundary condition '" + text + "' (expected pbc or apbc)");
}

bool SshParams::closed_shell() const {
  if (L <= 0 || L % 2 != 0) return false;
  return bc == Boundary::AntiPeriodic ? L % 4 == 0 : L % 4 == 2;
}

void SshParams::validate(bool strict) const {
  if (L < 2 || L % 2 != 0)
    throw InvalidArgument("chain length must be even and positive, got L=" + std::to_string(L));
  if (!(v >= 0.0) || !(w >= 0.0) || !std::isfinite(v) || !std::isfinite(w))
    throw InvalidArgument("hopping amplitudes must be finite and non-negative");
  if (strict && !closed_shell())
    throw InvalidArgument("L=" + std::to_string(L) + " with " + to_string(bc) +
                          " is not closed-shell (need APBC with L%4==0 or PBC with L%4==2)");
}

SingleParticleHamiltonians build_hamiltonians(const SshParams& p, bool strict) {
  p.validate(strict);
  SingleParticleHamiltonians hams;
  const int L = p.L;
  hams.L = L;
  hams.h1 = Eigen::MatrixXcd::Zero(L, L);
  hams.h2 = Eigen::MatrixXcd::Zero(L, L);
  for (int a = 0; a < L; a += 2) hams.v_bonds.push_back({a, a + 1, p.v});
  for (int a = 1; a + 1 < L; a += 2) hams.w_bonds.push_back({a, a + 1, p.w});
  // The ring-closing bond joins site L (B of the last cell) to site 1.
  if (L > 2) hams.w_bonds.push_back({0, L - 1, p.gamma() * p.w});

  auto fill = [](Eigen::MatrixXcd& m, const std::vector<Bond>& bonds) {
    for (const Bond& b : bonds) {
      m(b.a, b.b) += -b.amplitude;
      m(b.b, b.a) += -b.amplitude;
    }
  };
  fill(hams.h1, hams.v_bonds);
  fill(hams.h2, hams.w_bonds);
  hams.h = hams.h1 + hams.h2;
  return hams;
}

GroundState exact_ground_state(const SingleParticleHamiltonians& hams, int n) {
  const int L = hams.L;
  if (n < 0 || n > L) throw InvalidArgument("particle number out of range");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hams.h);
  if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed to converge");

  const Eigen::VectorXd& evals = solver.eigenvalues();
  if (n > 0 && n < L && evals(n) - evals(n - 1) < 1e-10)
    throw NumericalError("degenerate Fermi level: the half-filled ground state is not unique");

  OrbitalMatrix orbitals(L, n);
  for (int c = 0; c < n; ++c) {
    Eigen::VectorXcd col = solver.eigenvectors().col(c);
    Eigen::Index imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    const Complex phase = std::conj(col(imax)) / std::abs(col(imax));
    orbitals.col(c) = col * phase;
  }
  return GroundState{SlaterState(std::move(orbitals)), evals.head(n).sum(), evals};
}

namespace {

// 15-point Kronrod rule with embedded 7-point Gauss rule.
constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gauss_kronrod(const F& f, double a, double b, double& kronrod, double& error) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double k = fc * kKronrodWeights[7];
  double g = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double sum = f(center - dx) + f(center + dx);
    k += kKronrodWeights[i] * sum;
    if (i % 2 == 1) g += kGaussWeights[i / 2] * sum;
  }
  kronrod = k * half;
  error = std::abs((k - g) * half);
}

template <class F>
double adaptive_integrate(const F& f, double a, double b, double tol, int depth) {
  double value = 0.0, error = 0.0;
  gauss_kronrod(f, a, b, value, error);
  if (error <= tol || depth >= 50) return value;
  const double mid = 0.5 * (a + b);
  return adaptive_integrate(f, a, mid, 0.5 * tol, depth + 1) +
         adaptive_integrate(f, mid, b, 0.5 * tol, depth + 1);
}

}  // namespace

double elliptic_e_incomplete(double phi, double m) {
  if (m > 1.0 + 1e-15) throw InvalidArgument("elliptic parameter m must not exceed 1");
  auto integrand = [m](double t) {
    const double s = std::sin(t);
    return std::sqrt(std::max(0.0, 1.0 - m * s * s));
  };
  return adaptive_integrate(integrand, 0.0, phi, 1e-13, 0);
}

double energy_per_site_thermo(double v, double w) {
  if (!(v + w > 0.0)) throw InvalidArgument("need v + w > 0");
  const double m = 4.0 * v * w / ((v + w) * (v + w));
  return (v + w) / std::numbers::pi * elliptic_e_incomplete(std::numbers::pi / 2, m);
}

double ground_energy_per_site_thermo(double v, double w) { return -energy_per_site_thermo(v, w); }

}  // namespace dqap
