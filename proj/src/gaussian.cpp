#include "dqap/gaussian.hpp"

#include <cmath>

#include "dqap/error.hpp"

namespace dqap {

SlaterState initial_state(const SshParams& p) {
  p.validate(false);
  const int L = p.L;
  OrbitalMatrix orbitals = OrbitalMatrix::Zero(L, L / 2);
  const double amp = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < L / 2; ++j) {
    orbitals(2 * j, j) = amp;
    orbitals(2 * j + 1, j) = amp;
  }
  return SlaterState(std::move(orbitals));
}

void apply_bond_evolution(OrbitalMatrix& orbitals, std::span<const Bond> bonds, double theta,
                          Eigen::Index columns) {
  const Eigen::Index n = columns < 0 ? orbitals.cols() : columns;
  if (n == 0) return;
  for (const Bond& bond : bonds) {
    // exp(-i theta [[0,-t],[-t,0]]) = cos(theta t) + i sin(theta t) sigma_x
    const double c = std::cos(theta * bond.amplitude);
    const Complex is(0.0, std::sin(theta * bond.amplitude));
    Complex* ra = orbitals.row(bond.a).data();
    Complex* rb = orbitals.row(bond.b).data();
    for (Eigen::Index k = 0; k < n; ++k) {
      const Complex x = ra[k];
      const Complex y = rb[k];
      ra[k] = c * x + is * y;
      rb[k] = c * y + is * x;
    }
  }
}

OrbitalMatrix apply_bond_operator(std::span<const Bond> bonds, const OrbitalMatrix& x) {
  OrbitalMatrix out = OrbitalMatrix::Zero(x.rows(), x.cols());
  for (const Bond& bond : bonds) {
    out.row(bond.a) -= bond.amplitude * x.row(bond.b);
    out.row(bond.b) -= bond.amplitude * x.row(bond.a);
  }
  return out;
}

SlaterState apply_layer(const SlaterState& s, const SingleParticleHamiltonians& hams,
                        double theta1, double theta2) {
  if (s.sites() != hams.L) throw InvalidArgument("state and Hamiltonian sizes differ");
  OrbitalMatrix p = s.orbitals();
  apply_bond_evolution(p, hams.w_bonds, theta2);
  apply_bond_evolution(p, hams.v_bonds, theta1);
  return with_evolved_orbitals(s, std::move(p), 1);
}

CorrelationMatrix correlation(const SlaterState& s) {
  const OrbitalMatrix& p = s.orbitals();
  return CorrelationMatrix{(p * p.adjoint()).conjugate()};
}

double energy(const SlaterState& s, const SingleParticleHamiltonians& hams) {
  if (s.sites() != hams.L) throw InvalidArgument("state and Hamiltonian sizes differ");
  const CorrelationMatrix c = correlation(s);
  const Complex e = hams.h.cwiseProduct(c.values).sum();
  if (std::abs(e.imag()) > 1e-9)
    throw NumericalError("energy has an imaginary residue of " + std::to_string(e.imag()));
  return e.real();
}

double bond_energy(const OrbitalMatrix& orbitals, const SingleParticleHamiltonians& hams) {
  double e = 0.0;
  auto accumulate = [&](const std::vector<Bond>& bonds) {
    for (const Bond& bond : bonds) {
      const Complex cab = orbitals.row(bond.a).dot(orbitals.row(bond.b));
      e += -2.0 * bond.amplitude * cab.real();
    }
  };
  accumulate(hams.v_bonds);
  accumulate(hams.w_bonds);
  return e;
}

Complex overlap(const SlaterState& a, const SlaterState& b) {
  if (a.sites() != b.sites() || a.particles() != b.particles())
    throw InvalidArgument("overlap of states with different shapes");
  const Eigen::MatrixXcd m = a.orbitals().adjoint() * b.orbitals();
  return m.determinant();
}

}  // namespace dqap
