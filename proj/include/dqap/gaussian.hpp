#pragma once

#include <span>

#include <Eigen/Dense>

#include "dqap/model.hpp"
#include "dqap/slater_state.hpp"

namespace dqap {

// C(l, l') = <c_l^dag c_l'>, i.e. conj(P P^dag) for orbital matrix P.
struct CorrelationMatrix {
  Eigen::MatrixXcd values;

  int sites() const { return static_cast<int>(values.rows()); }
  Complex operator()(int l, int lp) const { return values(l, lp); }
};

// Dimer product state: one orbital (e_{2j-1} + e_{2j})/sqrt(2) per v-bond,
// the ground state of h1 for any v > 0.
SlaterState initial_state(const SshParams& p);

// Applies exp(-i theta h_bonds) to the rows of `orbitals` in place, restricted
// to the first `columns` columns (all when negative). Each bond block is
// exponentiated in closed form.
void apply_bond_evolution(OrbitalMatrix& orbitals, std::span<const Bond> bonds, double theta,
                          Eigen::Index columns = -1);

// In-place h_bonds * X for a bond-structured single-particle operator.
OrbitalMatrix apply_bond_operator(std::span<const Bond> bonds, const OrbitalMatrix& x);

// One DQAP layer: P <- exp(-i theta1 h1) exp(-i theta2 h2) P. The h2 factor
// acts first. Orbitals are re-orthonormalized every 64 layers or when the
// drift exceeds 1e-10.
SlaterState apply_layer(const SlaterState& s, const SingleParticleHamiltonians& hams,
                        double theta1, double theta2);

CorrelationMatrix correlation(const SlaterState& s);

// sum_{l,l'} h(l,l') <c_l^dag c_l'>. Throws NumericalError when the
// imaginary residue exceeds 1e-9.
double energy(const SlaterState& s, const SingleParticleHamiltonians& hams);

// Energy from the bond lists only; O(L N) and used inside the optimizer.
double bond_energy(const OrbitalMatrix& orbitals, const SingleParticleHamiltonians& hams);

// <Phi_a|Phi_b> = det(P_a^dag P_b).
Complex overlap(const SlaterState& a, const SlaterState& b);

}  // namespace dqap
