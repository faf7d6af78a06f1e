#include "dqap/slater_state.hpp"

#include <cmath>

#include "dqap/error.hpp"

namespace dqap {

SlaterState::SlaterState(OrbitalMatrix orbitals) : orbitals_(std::move(orbitals)) {
  if (orbitals_.cols() > orbitals_.rows())
    throw InvalidArgument("more orbitals than sites");
  if (orthonormality_error() > 1e-10)
    throw InvalidArgument("orbital columns are not orthonormal");
}

double SlaterState::orthonormality_error() const {
  if (orbitals_.cols() == 0) return 0.0;
  const Eigen::MatrixXcd gram = orbitals_.adjoint() * orbitals_;
  return (gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

OrbitalMatrix orthonormalize(const OrbitalMatrix& orbitals) {
  const Eigen::MatrixXcd gram = orbitals.adjoint() * orbitals;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(gram);
  if (solver.info() != Eigen::Success || solver.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("orbital matrix is rank deficient");
  const Eigen::VectorXd inv_sqrt = solver.eigenvalues().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXcd root =
      solver.eigenvectors() * inv_sqrt.asDiagonal() * solver.eigenvectors().adjoint();
  return orbitals * root;
}

SlaterState with_evolved_orbitals(const SlaterState& base, OrbitalMatrix orbitals, int layers) {
  SlaterState out;
  out.pending_layers_ = base.pending_layers_ + layers;
  out.orbitals_ = std::move(orbitals);
  if (out.pending_layers_ >= 64 || out.orthonormality_error() > 1e-10) {
    out.orbitals_ = orthonormalize(out.orbitals_);
    out.pending_layers_ = 0;
  }
  return out;
}

void to_json(nlohmann::json& j, const SlaterState& s) {
  nlohmann::json rows = nlohmann::json::array();
  const OrbitalMatrix& p = s.orbitals();
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < p.cols(); ++c) row.push_back({p(r, c).real(), p(r, c).imag()});
    rows.push_back(std::move(row));
  }
  j = nlohmann::json{{"L", s.sites()}, {"N", s.particles()}, {"orbitals", std::move(rows)}};
}

void from_json(const nlohmann::json& j, SlaterState& s) {
  const int L = j.at("L").get<int>();
  const int N = j.at("N").get<int>();
  const auto& rows = j.at("orbitals");
  if (static_cast<int>(rows.size()) != L) throw InvalidArgument("orbital row count != L");
  OrbitalMatrix p(L, N);
  for (int r = 0; r < L; ++r) {
    if (static_cast<int>(rows[r].size()) != N) throw InvalidArgument("orbital column count != N");
    for (int c = 0; c < N; ++c) {
      const auto& z = rows[r][c];
      p(r, c) = Complex(z.at(0).get<double>(), z.at(1).get<double>());
    }
  }
  s = SlaterState(std::move(p));
}

}  // namespace dqap
