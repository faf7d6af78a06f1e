#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dqap/slater_state.hpp"
#include "dqap/types.hpp"

namespace dqap {

enum class Boundary { Periodic, AntiPeriodic };

const char* to_string(Boundary bc);
Boundary boundary_from_string(const std::string& text);

// Parameters of the SSH ring. Sites are numbered 1..L in the physical
// labelling (A sublattice odd, B sublattice even); matrices use l-1.
struct SshParams {
  double v = 1.0;  // intra-cell hopping
  double w = 1.0;  // inter-cell hopping
  int L = 4;
  Boundary bc = Boundary::AntiPeriodic;

  // +1 for periodic, -1 for anti-periodic; multiplies the bond that closes the ring.
  double gamma() const { return bc == Boundary::Periodic ? 1.0 : -1.0; }
  int particles() const { return L / 2; }

  // APBC with L = 0 mod 4 or PBC with L = 2 mod 4.
  bool closed_shell() const;

  // Throws InvalidArgument for odd/non-positive L or negative hoppings; with
  // strict set, also for (L, bc) pairs that are not closed-shell.
  void validate(bool strict = true) const;
};

// A hopping term -amplitude * (c_a^dag c_b + h.c.) between zero-based sites a < b.
struct Bond {
  int a = 0;
  int b = 0;
  double amplitude = 0.0;
};

struct SingleParticleHamiltonians {
  int L = 0;
  std::vector<Bond> v_bonds;  // disjoint dimers (1,2), (3,4), ...
  std::vector<Bond> w_bonds;  // (2,3), ..., (L,1) carrying gamma
  Eigen::MatrixXcd h1;
  Eigen::MatrixXcd h2;
  Eigen::MatrixXcd h;
};

SingleParticleHamiltonians build_hamiltonians(const SshParams& p, bool strict = true);

struct GroundState {
  SlaterState state;
  double energy = 0.0;
  Eigen::VectorXd spectrum;  // all single-particle energies, ascending
};

// Fills the n lowest orbitals of hams.h. Each orbital is rotated so that its
// largest-magnitude component is real and positive.
GroundState exact_ground_state(const SingleParticleHamiltonians& hams, int n);

// E2(phi, m) = integral_0^phi sqrt(1 - m sin^2 t) dt, to absolute error 1e-12.
double elliptic_e_incomplete(double phi, double m);

// (v + w)/pi * E2(pi/2, 4vw/(v+w)^2): the magnitude of the thermodynamic-limit
// ground-state energy per site.
double energy_per_site_thermo(double v, double w);

// Same quantity with the sign of the ground-state energy (negative).
double ground_energy_per_site_thermo(double v, double w);

}  // namespace dqap
