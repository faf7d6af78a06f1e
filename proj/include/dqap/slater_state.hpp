#pragma once

#include <json.hpp>

#include "dqap/types.hpp"

namespace dqap {

// Free-fermion pure state: a Slater determinant whose L x N orbital matrix
// has orthonormal columns. Value type; operations return new states.
class SlaterState {
 public:
  SlaterState() = default;
  // Throws InvalidArgument if the columns are not orthonormal to 1e-10.
  explicit SlaterState(OrbitalMatrix orbitals);

  int sites() const { return static_cast<int>(orbitals_.rows()); }
  int particles() const { return static_cast<int>(orbitals_.cols()); }
  const OrbitalMatrix& orbitals() const { return orbitals_; }

  // max |P^dag P - I|
  double orthonormality_error() const;

  // Layers applied since the last re-orthonormalization.
  int pending_layers() const { return pending_layers_; }

 private:
  friend SlaterState with_evolved_orbitals(const SlaterState&, OrbitalMatrix, int);
  OrbitalMatrix orbitals_;
  int pending_layers_ = 0;
};

// Wraps evolved orbitals, carrying the layer counter forward and
// re-orthonormalizing every 64 layers or once drift exceeds 1e-10.
SlaterState with_evolved_orbitals(const SlaterState& base, OrbitalMatrix orbitals, int layers);

// Loewdin re-orthonormalization P <- P (P^dag P)^{-1/2}; leaves the spanned
// subspace unchanged.
OrbitalMatrix orthonormalize(const OrbitalMatrix& orbitals);

void to_json(nlohmann::json& j, const SlaterState& s);
void from_json(const nlohmann::json& j, SlaterState& s);

}  // namespace dqap
