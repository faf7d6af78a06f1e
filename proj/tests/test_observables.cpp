#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "dqap/ansatz.hpp"
#include "dqap/error.hpp"
#include "dqap/observables.hpp"
#include "dqap/statevector.hpp"
#include "oracles.hpp"

using namespace dqap;

namespace {

constexpr double kLn2 = std::numbers::ln2;

// Von Neumann entropy of sites 1..k from the Schmidt decomposition of the
// qubit state; for a leading block the Jordan-Wigner string is trivial.
double schmidt_entropy(const Statevector& sv, int k) {
  const auto amps = sv.amplitudes();
  const Eigen::Index rows = Eigen::Index{1} << k;
  const Eigen::Index cols = static_cast<Eigen::Index>(amps.size()) / rows;
  Eigen::MatrixXcd psi(rows, cols);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(amps.size()); ++i)
    psi(i % rows, i / rows) = amps[static_cast<std::size_t>(i)];
  const Eigen::VectorXd sv_vals = Eigen::JacobiSVD<Eigen::MatrixXcd>(psi).singularValues();
  double s = 0.0;
  for (double sigma : sv_vals) {
    const double p = sigma * sigma;
    if (p > 1e-300) s -= p * std::log(p);
  }
  return s;
}

}  // namespace

TEST_CASE("subsystems are validated and combine as sets") {
  CHECK_THROWS_AS(Subsystem({}, 8), InvalidArgument);
  CHECK_THROWS_AS(Subsystem({0, 1}, 8), InvalidArgument);
  CHECK_THROWS_AS(Subsystem({9}, 8), InvalidArgument);
  CHECK_THROWS_AS(Subsystem({3, 3}, 8), InvalidArgument);
  const Subsystem a({2, 1}, 8);
  CHECK(a.sites() == std::vector<int>{1, 2});
  const Subsystem b({3}, 8);
  CHECK_FALSE(a.overlaps(b));
  CHECK(a.united(b).sites() == std::vector<int>{1, 2, 3});
  CHECK(a.complement().size() == 6);
  CHECK(Subsystem::half_cut_on_w_bonds(64).size() == 32);
  CHECK(Subsystem::half_cut_on_w_bonds(18).size() == 8);
  CHECK(Subsystem::central_pair(64).sites() == std::vector<int>{31, 32});
  CHECK_THROWS_AS(Subsystem::central_pair(18), InvalidArgument);
}

TEST_CASE("dimer state entropies count the cut v bonds") {
  const SshParams p{1.0, 1.1, 16, Boundary::AntiPeriodic};
  const auto c = correlation(initial_state(p));
  CHECK(std::abs(entanglement_entropy(c, Subsystem::half_cut_on_w_bonds(16))) < 1e-12);
  CHECK(entanglement_entropy(c, Subsystem({1}, 16)) == doctest::Approx(kLn2));
  CHECK(entanglement_entropy(c, Subsystem({2, 3}, 16)) == doctest::Approx(2 * kLn2));
  CHECK(entanglement_entropy(c, Subsystem({2, 3, 4, 5}, 16)) == doctest::Approx(2 * kLn2));
  CHECK(mutual_information(c, Subsystem({1}, 16), Subsystem({2}, 16)) == doctest::Approx(2 * kLn2));
  CHECK(std::abs(mutual_information(c, Subsystem({2}, 16), Subsystem({3}, 16))) < 1e-12);
  CHECK_THROWS_AS(mutual_information(c, Subsystem({1, 2}, 16), Subsystem({2}, 16)),
                  InvalidArgument);
}

TEST_CASE("entropy from correlations matches the Schmidt spectrum of the qubit state") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  for (int trial = 0; trial < 6; ++trial) {
    const int L = trial % 2 ? 10 : 12;
    const SshParams p{1.0, 2.0, L, oracle::closed_shell_bc(L)};
    ParamSchedule s;
    for (int m = 0; m <= trial % 3; ++m) s.layers.push_back({angle(rng), angle(rng)});
    const auto c = correlation(evolve(s, p));
    const Statevector sv = build_dqap_state(p, s);
    for (int k : {1, 2, 3, L / 2}) {
      std::vector<int> sites(k);
      for (int i = 0; i < k; ++i) sites[i] = i + 1;
      CHECK(entanglement_entropy(c, Subsystem(sites, L)) ==
            doctest::Approx(schmidt_entropy(sv, k)).epsilon(1e-10));
    }
  }
}

TEST_CASE("entropy is symmetric between a subsystem and its complement") {
  const SshParams p{1.0, 1.1, 20, Boundary::AntiPeriodic};
  const auto c = correlation(evolve(ParamSchedule{{{0.8, 0.3}, {1.1, 0.5}}}, p));
  const Subsystem a({3, 4, 9, 10, 11}, 20);
  CHECK(entanglement_entropy(c, a) == doctest::Approx(entanglement_entropy(c, a.complement())));
}

TEST_CASE("dimer polarization equals the product of per-dimer factors") {
  for (int L : {6, 10, 18, 22}) {
    const SshParams p{1.0, 1.0, L, Boundary::Periodic};
    const double t = 2.0 * std::numbers::pi / L;
    Complex z = 1.0;
    for (int j = 1; j <= L / 2; ++j)
      z *= (std::polar(1.0, t * (2 * j - 1)) + std::polar(1.0, t * 2 * j)) / 2.0;
    const RestaValue r = polarization(initial_state(p));
    CHECK(r.x == doctest::Approx(z.real()).epsilon(1e-12));
    CHECK(r.y == doctest::Approx(z.imag()).epsilon(1e-12));
    CHECK(r.phase == doctest::Approx(std::arg(z)).epsilon(1e-12));
  }
  CHECK(polarization(initial_state({1.0, 2.0, 18, Boundary::Periodic})).phase ==
        doctest::Approx(-std::numbers::pi / 2));
}

TEST_CASE("polarization shifts by 2 pi N / L per unit origin shift") {
  const SshParams p{1.0, 2.0, 18, Boundary::Periodic};
  const SlaterState s = evolve(ParamSchedule{{{0.7, 0.3}}}, p);
  const double base = polarization(s).phase;
  const double shifted = polarization(s, 1.0).phase;
  CHECK(std::abs(wrap_phase(shifted - base - 2 * std::numbers::pi * 9 / 18)) < 1e-12);
}

TEST_CASE("the fully delocalized half-filled ring has indeterminate polarization") {
  // Plane waves k = 0 .. N-1 on a ring: the Resta determinant vanishes.
  const int L = 8;
  OrbitalMatrix orb(L, 3);
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < 3; ++k)
      orb(l, k) = std::polar(1.0 / std::sqrt(L), 2 * std::numbers::pi * k * l / L);
  CHECK_THROWS_AS(polarization(SlaterState{orb}), IndeterminatePolarization);
}

TEST_CASE("phase wrapping lands in (-pi, pi]") {
  const double pi = std::numbers::pi;
  CHECK(wrap_phase(pi) == doctest::Approx(pi));
  CHECK(wrap_phase(-pi) == doctest::Approx(pi));
  CHECK(wrap_phase(3 * pi / 2) == doctest::Approx(-pi / 2));
  CHECK(wrap_phase(0.25) == 0.25);
}

TEST_CASE("critical depth is the first jump above pi/2") {
  const double pi = std::numbers::pi;
  std::vector<RestaValue> vals;
  for (double ph : {-pi / 2, -pi / 2, -pi / 2 + 0.1, pi / 2, pi / 2})
    vals.push_back({std::cos(ph), std::sin(ph), ph});
  const auto recs = polarization_records(vals);
  REQUIRE(recs.size() == 5);
  CHECK(recs[3].M == 3);
  CHECK(recs[3].delta == doctest::Approx(pi));
  CHECK(critical_depth(recs) == 3);
  const std::vector<PolarizationRecord> flat{{0, 0.1, 0, 1, 0}, {1, 0.2, 0.1, 1, 0}};
  CHECK_FALSE(critical_depth(flat).has_value());
  const std::vector<PolarizationRecord> gap{{0, 0, 0, 1, 0}, {2, 0, 0, 1, 0}};
  CHECK_THROWS_AS(critical_depth(gap), InvalidArgument);
}

TEST_CASE("log fit recovers exact coefficients") {
  std::vector<EntropyPoint> pts;
  for (int m = 1; m <= 12; ++m) pts.push_back({double(m), 0.37 * std::log(m) + 1.25});
  const LogFit f = fit_log_entropy(pts);
  CHECK(f.a == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(f.b == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK_THROWS_AS(fit_log_entropy(std::vector<EntropyPoint>{{1, 0}, {2, 1}}), InvalidArgument);
  CHECK_THROWS_AS(fit_log_entropy(std::vector<EntropyPoint>{{2, 0}, {2, 1}, {2, 2}}),
                  InvalidArgument);
  CHECK_THROWS_AS(fit_log_entropy(std::vector<EntropyPoint>{{0, 0}, {2, 1}, {3, 2}}),
                  InvalidArgument);
}

TEST_CASE("observable rows use the fixed-precision format") {
  CHECK(observable_csv_row(64, 3, "S_A", 0.5) == "64,3,S_A,0.5\n");
}
