#pragma once

#include <complex>

#include <Eigen/Dense>

namespace dqap {

using Complex = std::complex<double>;

// Row-major so that a two-site rotation touches two contiguous rows.
using OrbitalMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace dqap
