#include "dqap/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dqap/error.hpp"
#include "dqap/format.hpp"

namespace dqap {

Subsystem::Subsystem(std::vector<int> sites, int L) : sites_(std::move(sites)), L_(L) {
  if (sites_.empty()) throw InvalidArgument("subsystem must not be empty");
  std::sort(sites_.begin(), sites_.end());
  if (std::adjacent_find(sites_.begin(), sites_.end()) != sites_.end())
    throw InvalidArgument("subsystem contains duplicate sites");
  if (sites_.front() < 1 || sites_.back() > L)
    throw InvalidArgument("subsystem site outside 1.." + std::to_string(L));
}

Subsystem Subsystem::half_cut_on_w_bonds(int L) {
  if (L < 4 || L % 2 != 0) throw InvalidArgument("half cut needs an even L >= 4");
  const int cells = L / 4;
  std::vector<int> sites(2 * cells);
  for (int i = 0; i < 2 * cells; ++i) sites[i] = i + 1;
  return Subsystem(std::move(sites), L);
}

Subsystem Subsystem::central_pair(int L) {
  if (L < 4 || L % 4 != 0) throw InvalidArgument("central pair needs L divisible by 4");
  return Subsystem({L / 2 - 1, L / 2}, L);
}

bool Subsystem::overlaps(const Subsystem& other) const {
  std::vector<int> common;
  std::set_intersection(sites_.begin(), sites_.end(), other.sites_.begin(), other.sites_.end(),
                        std::back_inserter(common));
  return !common.empty();
}

Subsystem Subsystem::united(const Subsystem& other) const {
  if (other.L_ != L_) throw InvalidArgument("subsystems belong to different chains");
  std::vector<int> all;
  std::set_union(sites_.begin(), sites_.end(), other.sites_.begin(), other.sites_.end(),
                 std::back_inserter(all));
  return Subsystem(std::move(all), L_);
}

Subsystem Subsystem::complement() const {
  std::vector<int> rest;
  for (int l = 1; l <= L_; ++l)
    if (!std::binary_search(sites_.begin(), sites_.end(), l)) rest.push_back(l);
  return Subsystem(std::move(rest), L_);
}

double entanglement_entropy(const CorrelationMatrix& c, const Subsystem& a) {
  if (a.chain_length() != c.sites()) throw InvalidArgument("subsystem and state sizes differ");
  const int n = a.size();
  Eigen::MatrixXcd block(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) block(i, j) = c(a.sites()[i] - 1, a.sites()[j] - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(block, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed on C_A");

  double s = 0.0;
  for (double nu : solver.eigenvalues()) {
    if (nu < -1e-8 || nu > 1.0 + 1e-8)
      throw NumericalError("correlation eigenvalue " + std::to_string(nu) + " outside [0, 1]");
    nu = std::clamp(nu, 0.0, 1.0);
    if (nu > 0.0) s -= nu * std::log(nu);
    if (nu < 1.0) s -= (1.0 - nu) * std::log1p(-nu);
  }
  return s;
}

double mutual_information(const CorrelationMatrix& c, const Subsystem& a, const Subsystem& b) {
  if (a.overlaps(b)) throw InvalidArgument("mutual information needs disjoint subsystems");
  const double mi = entanglement_entropy(c, a) + entanglement_entropy(c, b) -
                    entanglement_entropy(c, a.united(b));
  if (mi < -1e-10) throw NumericalError("negative mutual information " + std::to_string(mi));
  return std::max(mi, 0.0);
}

RestaValue polarization(const SlaterState& s, double origin_shift) {
  const OrbitalMatrix& p = s.orbitals();
  const int L = s.sites();
  OrbitalMatrix dp = p;
  for (int l = 1; l <= L; ++l) {
    const double phi = 2.0 * std::numbers::pi * (l + origin_shift) / L;
    dp.row(l - 1) *= Complex(std::cos(phi), std::sin(phi));
  }
  const Eigen::MatrixXcd m = p.adjoint() * dp;
  const Complex z = m.determinant();
  if (!(std::abs(z) >= 1e-12))
    throw IndeterminatePolarization("|<U_R>| = " + std::to_string(std::abs(z)) +
                                    " is too small to define a phase");
  return RestaValue{z.real(), z.imag(), std::atan2(z.imag(), z.real())};
}

double wrap_phase(double angle) {
  const double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(angle, two_pi);  // [-pi, pi]
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

std::vector<PolarizationRecord> polarization_records(std::span<const RestaValue> by_depth) {
  std::vector<PolarizationRecord> out;
  if (by_depth.empty()) return out;
  const double ref = by_depth.front().phase;
  for (std::size_t m = 0; m < by_depth.size(); ++m) {
    const RestaValue& r = by_depth[m];
    out.push_back({static_cast<int>(m), r.phase, wrap_phase(r.phase - ref), r.x, r.y});
  }
  return out;
}

std::optional<int> critical_depth(std::span<const PolarizationRecord> records) {
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].M != records[i - 1].M + 1)
      throw InvalidArgument("polarization records must cover consecutive depths");
  for (std::size_t i = 1; i < records.size(); ++i) {
    const double jump = wrap_phase(records[i].value - records[i - 1].value);
    if (std::abs(jump) > std::numbers::pi / 2) return records[i].M;
  }
  return std::nullopt;
}

LogFit fit_log_entropy(std::span<const EntropyPoint> points) {
  if (points.size() < 3) throw InvalidArgument("log fit needs at least 3 points");
  Eigen::MatrixXd design(points.size(), 2);
  Eigen::VectorXd target(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].M >= 1.0)) throw InvalidArgument("log fit needs M >= 1");
    design(i, 0) = std::log(points[i].M);
    design(i, 1) = 1.0;
    target(i) = points[i].S;
  }
  const Eigen::VectorXd x = design.col(0);
  if ((x.array() - x.mean()).abs().maxCoeff() < 1e-14)
    throw InvalidArgument("log fit is singular: all M are equal");
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(target);
  const Eigen::VectorXd residual = target - design * coef;
  const double ss_tot = (target.array() - target.mean()).square().sum();
  const double ss_res = residual.squaredNorm();
  return LogFit{coef(0), coef(1), ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0};
}

std::string observable_csv_row(int L, int M, std::string_view observable, double value) {
  return std::to_string(L) + "," + std::to_string(M) + "," + std::string(observable) + "," +
         format_real(value) + "\n";
}

}  // namespace dqap
