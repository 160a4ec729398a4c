#ifndef TOSDA_METRICS_HPP
#define TOSDA_METRICS_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "tosda/coarray.hpp"
#include "tosda/designer.hpp"
#include "tosda/error.hpp"
#include "tosda/geometry.hpp"

namespace tosda {

// ---------------------------------------------------------------------------
// Size bounds of the TO-ECA

struct SizeBounds {
  std::int64_t lower = 0;    // 6N - 5, attained by the ULA
  std::int64_t upper = 0;    // k(N): at most this many distinct lags
  std::int64_t k_tilde = 0;  // one-sided maximum (k(N) - 1) / 2
};

inline SizeBounds size_bounds(std::int64_t n) {
  if (n < 1) fail(ErrorKind::invalid_parameter, "N must be positive");
  const std::int64_t poly = 4 * n * n * n + 3 * n * n - n;
  if ((poly + 3) % 3 != 0 || poly % 6 != 0) fail(ErrorKind::internal_consistency, "non-integral size bound");
  return {6 * n - 5, (poly + 3) / 3, poly / 6};
}

inline double l3_bound(double n) {
  if (n < 2) fail(ErrorKind::invalid_parameter, "the redundancy lower bound needs N >= 2");
  return (1 + 2 / (3 * std::numbers::pi)) * (4 * n * n * n + 3 * n * n - n) / (n * n * n + 3 * n * n + 2 * n);
}

// ---------------------------------------------------------------------------
// Redundancy

struct RedundancyReport {
  std::int64_t N = 0;
  std::int64_t Z = 0;
  std::int64_t k_tilde = 0;
  double R_T = 0;
  bool infinite = false;  // Z == 0: only lag 0 is available
  double L3 = std::numeric_limits<double>::quiet_NaN();  // undefined for N = 1
  bool within_bounds = false;
};

inline RedundancyReport redundancy_from_z(std::int64_t n, std::int64_t z) {
  RedundancyReport r;
  r.N = n;
  r.Z = z;
  r.k_tilde = size_bounds(n).k_tilde;
  if (z > r.k_tilde) {
    fail(ErrorKind::internal_consistency, "Z=" + std::to_string(z) + " exceeds the maximum " + std::to_string(r.k_tilde));
  }
  if (n >= 2) r.L3 = l3_bound(static_cast<double>(n));
  if (z <= 0) {
    r.infinite = true;
    r.R_T = std::numeric_limits<double>::infinity();
  } else {
    r.R_T = static_cast<double>(r.k_tilde) / static_cast<double>(z);
  }
  r.within_bounds = n >= 2 && r.R_T > r.L3;
  return r;
}

inline RedundancyReport redundancy_toeca(const SensorArray& s) {
  const CoarrayReport c = to_eca(s);
  return redundancy_from_z(static_cast<std::int64_t>(s.size()), std::max<Position>(c.one_sided_z, 0));
}

enum class CoarrayKind { sum, difference };

struct SecondOrderRedundancy {
  double value = 0;
  bool below_one = false;  // the ratio is expected to be >= 1 for realizable arrays
};

/// Sum co-array: (N(N+1)/2) / (2N+1). Difference co-array: (N(N-1)/2) / E,
/// where E is the one-sided length of the consecutive difference co-array.
inline SecondOrderRedundancy redundancy_second_order(std::int64_t n, CoarrayKind kind,
                                                     std::optional<std::int64_t> e = std::nullopt) {
  if (n < 1) fail(ErrorKind::invalid_parameter, "N must be positive");
  double v = 0;
  if (kind == CoarrayKind::sum) {
    v = static_cast<double>(n * (n + 1) / 2) / static_cast<double>(2 * n + 1);
  } else {
    if (!e || *e < 1) fail(ErrorKind::invalid_parameter, "difference co-array redundancy needs E >= 1");
    v = static_cast<double>(n * (n - 1) / 2) / static_cast<double>(*e);
  }
  return {v, v < 1};
}

// ---------------------------------------------------------------------------
// Closed-form redundancy of the three designs

/// Generator size plugged into the relaxed objective: the lower integer for
/// the two nested variants, the nearest integer for TNA-II.
inline double closed_form_n1(Variant v, double n) {
  const double x = continuous_n1(v, n);
  return v == Variant::tna2 ? static_cast<double>(round_half_up(x)) : std::floor(x);
}

/// One-sided consecutive lag count predicted by the relaxed objective.
inline double z_closed_form(Variant v, double n) {
  if (n < 2) fail(ErrorKind::invalid_parameter, "N must be at least 2");
  return (relaxed_objective(v, n, closed_form_n1(v, n)) - 1) / 2;
}

inline double rt_closed_form(Variant v, double n) {
  return (4 * n * n * n + 3 * n * n - n) / (6 * z_closed_form(v, n));
}

inline std::pair<double, double> redundancy_interval(Variant v) {
  switch (v) {
    case Variant::cna: return {2.4789, 9.0};
    case Variant::scna: return {2.200, 9.0};
    case Variant::tna2: return {2.1477, 4.5};
  }
  return {0, 0};
}

// ---------------------------------------------------------------------------
// Mutual coupling

struct CouplingModel {
  double c1_magnitude = 0.3;
  double c1_phase = std::numbers::pi / 3;
  std::int64_t band = 100;
  double decay_phase_step = std::numbers::pi / 8;

  void check() const {
    if (!(c1_magnitude >= 0 && c1_magnitude < 1)) fail(ErrorKind::invalid_parameter, "|c1| must lie in [0, 1)");
    if (band < 0) fail(ErrorKind::invalid_parameter, "coupling band must be non-negative");
  }

  /// c_l for separation l on the integer grid.
  std::complex<double> coefficient(std::int64_t l) const {
    if (l < 0) l = -l;
    if (l == 0) return 1.0;
    if (l > band) return 0.0;
    const std::complex<double> c1 = std::polar(c1_magnitude, c1_phase);
    if (l == 1) return c1;
    return c1 * std::polar(1.0, -static_cast<double>(l - 1) * decay_phase_step) / static_cast<double>(l);
  }
};

inline Eigen::MatrixXcd coupling_matrix(const SensorArray& s, const CouplingModel& model) {
  model.check();
  const auto p = s.positions();
  const auto n = static_cast<Eigen::Index>(p.size());
  Eigen::MatrixXcd c(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) c(a, b) = model.coefficient(p[a] - p[b]);
  return c;
}

inline double coupling_leakage(const Eigen::MatrixXcd& c) {
  if (c.rows() != c.cols()) fail(ErrorKind::invalid_parameter, "coupling matrix must be square");
  const double total = c.norm();
  if (total == 0) fail(ErrorKind::invalid_parameter, "zero coupling matrix");
  Eigen::MatrixXcd off = c;
  off.diagonal().setZero();
  return off.norm() / total;
}

inline double coupling_leakage(const SensorArray& s, const CouplingModel& model = {}) {
  return coupling_leakage(coupling_matrix(s, model));
}

}  // namespace tosda

#endif  // TOSDA_METRICS_HPP
