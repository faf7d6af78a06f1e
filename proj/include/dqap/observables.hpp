#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dqap/gaussian.hpp"

namespace dqap {

// A set of sites labelled 1..L. Sorted, non-empty, duplicate-free.
class Subsystem {
 public:
  Subsystem(std::vector<int> sites, int L);

  // Sites 1..L/2 when L % 4 == 0; both cuts then sit on w-bonds. For
  // L % 4 == 2 the block is the first (L-2)/4 unit cells.
  static Subsystem half_cut_on_w_bonds(int L);
  // The v-bond dimer at the ring centre, sites {L/2 - 1, L/2}.
  static Subsystem central_pair(int L);

  const std::vector<int>& sites() const { return sites_; }
  int size() const { return static_cast<int>(sites_.size()); }
  int chain_length() const { return L_; }
  bool overlaps(const Subsystem& other) const;
  Subsystem united(const Subsystem& other) const;
  Subsystem complement() const;

 private:
  std::vector<int> sites_;
  int L_ = 0;
};

// Von Neumann entropy of the reduced state on A from the eigenvalues of the
// restricted correlation matrix.
double entanglement_entropy(const CorrelationMatrix& c, const Subsystem& a);

// S_A + S_B - S_{A u B}; rejects overlapping subsystems.
double mutual_information(const CorrelationMatrix& c, const Subsystem& a, const Subsystem& b);

struct RestaValue {
  double x = 0.0;      // Re <U_R>
  double y = 0.0;      // Im <U_R>
  double phase = 0.0;  // atan2(y, x) in (-pi, pi]
};

// <U_R> = det(P^dag D P), D = diag(exp(2 pi i (l + origin_shift) / L)).
// Throws IndeterminatePolarization when |<U_R>| < 1e-12.
RestaValue polarization(const SlaterState& s, double origin_shift = 0.0);

// Wraps into (-pi, pi].
double wrap_phase(double angle);

struct PolarizationRecord {
  int M = 0;
  double value = 0.0;  // P_R(M)
  double delta = 0.0;  // P_R(M) - P_R(0), wrapped
  double x = 0.0;
  double y = 0.0;
};

// Entry i of `by_depth` is depth i; entry 0 is the reference.
std::vector<PolarizationRecord> polarization_records(std::span<const RestaValue> by_depth);

// Smallest M whose wrapped jump |P_R(M) - P_R(M-1)| exceeds pi/2. Records
// must cover consecutive depths.
std::optional<int> critical_depth(std::span<const PolarizationRecord> records);

struct LogFit {
  double a = 0.0;
  double b = 0.0;
  double r2 = 0.0;
};

struct EntropyPoint {
  double M = 0.0;
  double S = 0.0;
};

// Unweighted least squares of S = a ln M + b.
LogFit fit_log_entropy(std::span<const EntropyPoint> points);

// "L,M,observable,value" with the value at 17 significant digits.
std::string observable_csv_row(int L, int M, std::string_view observable, double value);
inline constexpr std::string_view kObservableCsvHeader = "L,M,observable,value";

}  // namespace dqap
