#ifndef TOSDA_DESIGNER_HPP
#define TOSDA_DESIGNER_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tosda/coarray.hpp"
#include "tosda/error.hpp"
#include "tosda/geometry.hpp"
#include "tosda/parallel.hpp"

namespace tosda {

// ---------------------------------------------------------------------------
// Rounding. The nearest-integer operator is round-half-up; ceil/floor are only
// used by the TNA-II fallback.

enum class Rounding { half_up, ceil, floor };

inline std::string_view to_string(Rounding r) {
  switch (r) {
    case Rounding::half_up: return "half-up";
    case Rounding::ceil: return "ceil";
    case Rounding::floor: return "floor";
  }
  return "?";
}

inline std::int64_t round_with(double x, Rounding r) {
  switch (r) {
    case Rounding::half_up: return static_cast<std::int64_t>(std::floor(x + 0.5));
    case Rounding::ceil: return static_cast<std::int64_t>(std::ceil(x));
    case Rounding::floor: return static_cast<std::int64_t>(std::floor(x));
  }
  return 0;
}

inline std::int64_t round_half_up(double x) { return round_with(x, Rounding::half_up); }

// ---------------------------------------------------------------------------
// Continuous relaxation of the DOF-vs-N1 objective

/// Stationary point N1* of the relaxed DOF objective for N sensors.
inline double continuous_n1(Variant v, double n) {
  switch (v) {
    case Variant::cna: return (4 * n + std::sqrt((4 * n + 15) * (4 * n + 15) + 672) - 21) / 12;
    case Variant::scna: return (4 * n + std::sqrt((4 * n + 15) * (4 * n + 15) + 288) - 21) / 12;
    case Variant::tna2: return (3 + 4 * n + std::sqrt((4 * n - 9) * (4 * n - 9) + 36)) / 12;
  }
  return 0;
}

/// Relaxed DOF as a cubic in N1 (real-valued M1, M2, N2).
inline double relaxed_objective(Variant v, double n, double x) {
  switch (v) {
    case Variant::cna:
      return -x * x * x + (n - 21.0 / 4) * x * x + (6 * n + 19.0 / 2) * x - 17.0 / 4 - 5 * n;
    case Variant::scna:
      return -x * x * x + (n - 21.0 / 4) * x * x + (6 * n + 3.0 / 2) * x + 7.0 / 4 + 3 * n;
    case Variant::tna2:
      return -2 * x * x * x + (2 * n + 3.0 / 2) * x * x + (9.0 / 2 - 4 * n) * x + 4 * n * n - 3.0 / 2 * n - 47.0 / 8;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Closed-form quantities

struct GeneratorSplit {
  int M1 = 0;
  int M2 = 0;
  std::optional<int> J;
};

/// (M1, M2[, J]) for a generator of n1 sensors.
inline GeneratorSplit split_generator(Variant v, int n1, Rounding r = Rounding::half_up) {
  GeneratorSplit s;
  if (v == Variant::tna2) {
    s.M2 = static_cast<int>(round_with((2.0 * n1 - 1) / 4, r));
    s.M1 = n1 - s.M2;
    s.J = default_tna2_offset(n1);
  } else {
    s.M1 = static_cast<int>(round_with((n1 - 1) / 4.0, r));
    s.M2 = n1 - 2 * s.M1;
  }
  return s;
}

/// TNA-II uses the shortened segment lengths for 9 <= N <= 14.
inline bool tna2_short_case(int n) { return n >= 9 && n <= 14; }

inline std::pair<Position, Position> lambda_pair(Variant v, int m1, int m2, std::optional<int> j, int n) {
  const Position M1 = m1, M2 = m2;
  switch (v) {
    case Variant::cna: return {2 * (M1 - 1) + 2 * M2 * (M1 + 1), 3 * (M1 - 1) + 3 * M2 * (M1 + 1)};
    case Variant::scna: return {2 * (2 * M1 + M2) + 2 * M1 * (M2 - 1), 3 * (2 * M1 + M2) + 3 * M1 * (M2 - 1)};
    case Variant::tna2: {
      const Position b = M1 * (M2 + 1) + j.value_or(default_tna2_offset(m1 + m2));
      if (tna2_short_case(n)) return {2 * b - 2, 3 * b - 2};
      return {2 * b, 3 * b};
    }
  }
  return {0, 0};
}

inline std::pair<Position, Position> lambda_pair(const DesignParams& p) {
  return lambda_pair(p.variant, p.M1, p.M2, p.J, p.N);
}

/// Fills N1, lambdas and the delta endpoints delta1 = l1 + l2 + 1,
/// delta2 = 2 l1 + 1.
inline DesignParams make_params(Variant v, int n, int m1, int m2, int n2, std::optional<int> j = std::nullopt) {
  DesignParams p;
  p.variant = v;
  p.M1 = m1;
  p.M2 = m2;
  p.N1 = generator_size(v, m1, m2);
  p.N2 = n2;
  p.N = n;
  if (v == Variant::tna2) p.J = j.value_or(default_tna2_offset(p.N1));
  std::tie(p.lambda1, p.lambda2) = lambda_pair(p);
  p.delta1 = p.lambda1 + p.lambda2 + 1;
  p.delta2 = 2 * p.lambda1 + 1;
  return p;
}

/// DOF promised by the closed-form expression for this variant.
inline std::int64_t dof_closed_form(const DesignParams& p) {
  const std::int64_t M1 = p.M1, M2 = p.M2, N2 = p.N2;
  switch (p.variant) {
    case Variant::cna: return (6 + 8 * N2) * ((M1 - 1) + M2 * (M1 + 1)) + 2 * N2 + 1;
    case Variant::scna: return (6 + 8 * N2) * (M1 + M2 * (M1 + 1)) + 2 * N2 + 1;
    case Variant::tna2: {
      const std::int64_t J = p.J.value_or(default_tna2_offset(p.N1));
      const std::int64_t b = M1 * (M2 + 1) + J;
      if (tna2_short_case(p.N)) return 2 * ((5 + 4 * N2) * b) - 6 * N2 - 5;
      return 2 * ((4 * N2 + 1) * b + (N2 - 1) + 4 * (M1 * (M2 + 1)) + 4 * J) + 1;
    }
  }
  return 0;
}

/// Builds G and H for the given parameters.
inline SensorArray realize(const DesignParams& p) {
  const SensorArray g = build_generator(p.variant, p.M1, p.M2, p.variant == Variant::tna2 ? p.J : std::nullopt);
  return build_gtoa(g, p.delta1, p.delta2, p.N2)
      .renamed(std::string(display_name(p.variant)) + " N=" + std::to_string(p.N));
}

/// 2Z+1 of the realized array's TO-ECA.
inline std::int64_t brute_force_dof(const SensorArray& s) { return to_eca(s).consecutive_lags(); }

inline std::optional<DesignParams> feasible_params(Variant v, int n, int n1, const GeneratorSplit& g) {
  const int n2 = n - n1;
  if (g.M1 < 1 || g.M2 < 1 || n2 < 1) return std::nullopt;
  DesignParams p = make_params(v, n, g.M1, g.M2, n2, g.J);
  try {
    realize(p);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::geometry_inconsistency) throw;
    return std::nullopt;
  }
  return p;
}

struct ClosedFormSplit {
  DesignParams params;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::optional<ClosedFormSplit> try_split_closed_form(Variant v, int n) {
  if (n < 1) return std::nullopt;
  const double x = continuous_n1(v, n);
  const int n1 = static_cast<int>(round_half_up(x));
  const GeneratorSplit g = split_generator(v, n1);
  if (auto p = feasible_params(v, n, n1, g)) return ClosedFormSplit{*p, {}};
  if (v != Variant::tna2 || g.M1 < 1 || g.M2 < 1 || n - n1 < 1) return std::nullopt;

  // TNA-II generator failed its cardinality check: retry every ceil/floor
  // reading of the two rounding steps and keep the best realized DOF.
  std::optional<ClosedFormSplit> best;
  std::int64_t best_dof = -1;
  std::string tried;
  for (Rounding outer : {Rounding::half_up, Rounding::ceil, Rounding::floor}) {
    for (Rounding inner : {Rounding::half_up, Rounding::ceil, Rounding::floor}) {
      const int m = static_cast<int>(round_with(x, outer));
      auto p = feasible_params(v, n, m, split_generator(v, m, inner));
      if (!p) continue;
      const std::int64_t dof = brute_force_dof(realize(*p));
      if (dof > best_dof) {
        best_dof = dof;
        best = ClosedFormSplit{*p, {}};
        tried = std::string(to_string(outer)) + "/" + std::string(to_string(inner));
      }
    }
  }
  if (best) {
    best->warnings.push_back("TNA-II generator for N=" + std::to_string(n) + " (N1=" + std::to_string(n1) + ", M1=" +
                             std::to_string(g.M1) + ", M2=" + std::to_string(g.M2) +
                             ") fails its cardinality check; using " + tried + " rounding (N1=" +
                             std::to_string(best->params.N1) + ", M1=" + std::to_string(best->params.M1) +
                             ", M2=" + std::to_string(best->params.M2) + ", brute-force DOF " +
                             std::to_string(best_dof) + ")");
  }
  return best;
}

}  // namespace detail

/// Smallest N whose closed-form split passes every invariant.
inline int minimum_sensors(Variant v) {
  auto scan = [v] {
    for (int n = 1; n <= 64; ++n)
      if (detail::try_split_closed_form(v, n)) return n;
    return -1;
  };
  switch (v) {
    case Variant::cna: { static const int m = scan(); return m; }
    case Variant::scna: { static const int m = scan(); return m; }
    case Variant::tna2: { static const int m = scan(); return m; }
  }
  return -1;
}

inline ClosedFormSplit split_closed_form(Variant v, int n) {
  if (auto s = detail::try_split_closed_form(v, n)) return *s;
  fail(ErrorKind::unsupported_size, std::string(display_name(v)) + " is not defined for N=" + std::to_string(n) +
                                        "; the minimum is N=" + std::to_string(minimum_sensors(v)));
}

struct ToSdaDesign {
  SensorArray array;
  DesignParams params;
  std::vector<std::string> warnings;
};

/// DOF-maximizing TO-SDA with N sensors from the closed-form split.
inline ToSdaDesign build_to_sda(Variant v, int n) {
  ClosedFormSplit split = split_closed_form(v, n);
  validate(split.params);
  return ToSdaDesign{realize(split.params), split.params, std::move(split.warnings)};
}

/// TO-SDA with a prescribed generator size N1 (e.g. a reference configuration).
/// A J override is allowed for TNA-II; it is reported as a warning because it
/// departs from J = ceil(N1/2) - 1.
inline ToSdaDesign build_to_sda_with_n1(Variant v, int n, int n1, std::optional<int> j = std::nullopt) {
  GeneratorSplit g = split_generator(v, n1);
  if (n - n1 < 1) fail(ErrorKind::invalid_parameter, "N1 must leave at least one sensor for H");
  std::vector<std::string> warnings;
  if (j) {
    if (v != Variant::tna2) fail(ErrorKind::invalid_parameter, "J only applies to TNA-II");
    if (*j != *g.J) warnings.push_back("J=" + std::to_string(*j) + " overrides ceil(N1/2)-1=" + std::to_string(*g.J));
    g.J = j;
  }
  if (g.M1 < 1 || g.M2 < 1) {
    fail(ErrorKind::unsupported_size, "N1=" + std::to_string(n1) + " gives M1=" + std::to_string(g.M1) +
                                          ", M2=" + std::to_string(g.M2));
  }
  DesignParams p = make_params(v, n, g.M1, g.M2, n - n1, g.J);
  if (!j || *j == default_tna2_offset(n1)) validate(p);
  return ToSdaDesign{realize(p), p, std::move(warnings)};
}

// ---------------------------------------------------------------------------
// Brute-force split oracle

/// Reference DOF values that the brute force is compared against.
inline std::optional<std::int64_t> reference_dof(Variant v, int n) {
  if (n != 8) return std::nullopt;
  switch (v) {
    case Variant::cna: return 187;
    case Variant::scna: return 217;
    case Variant::tna2: return 247;
  }
  return std::nullopt;
}

struct SplitSearch {
  /// TNA-II only: enumerate every J in [0, N1] instead of ceil(N1/2) - 1.
  bool free_j = false;
  unsigned threads = 1;
};

struct SplitResult {
  DesignParams params;
  std::int64_t dof_brute_force = 0;
  std::optional<std::int64_t> dof_closed_form;  // formula at the closed-form split
  bool agreement = false;
  std::optional<DesignParams> closed_form_params;
  std::optional<std::int64_t> closed_form_realized_dof;  // brute force on the closed-form geometry
  std::optional<std::int64_t> reference_dof;
  std::optional<bool> reference_agreement;
  std::size_t candidates_evaluated = 0;
  std::vector<std::string> warnings;
};

inline std::vector<DesignParams> enumerate_splits(Variant v, int n, const SplitSearch& search) {
  std::vector<DesignParams> out;
  for (int m1 = 1; m1 <= n; ++m1) {
    for (int m2 = 1; m2 <= n; ++m2) {
      const int n1 = generator_size(v, m1, m2);
      const int n2 = n - n1;
      if (n2 < 1) continue;
      if (v == Variant::tna2 && search.free_j) {
        for (int j = 0; j <= n1; ++j) out.push_back(make_params(v, n, m1, m2, n2, j));
      } else {
        out.push_back(make_params(v, n, m1, m2, n2));
      }
    }
  }
  return out;
}

/// Exhaustive search over all feasible splits; the realized brute-force DOF is
/// the ground truth. Ties go to the smaller N1, then to the lexicographically
/// smaller (M1, M2, J).
inline SplitResult brute_force_split(Variant v, int n, const SplitSearch& search = {}) {
  const auto candidates = enumerate_splits(v, n, search);
  std::vector<std::int64_t> dof(candidates.size(), -1);
  parallel_for(candidates.size(), search.threads, [&](std::size_t i) {
    try {
      dof[i] = brute_force_dof(realize(candidates[i]));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::geometry_inconsistency) throw;
    }
  });

  auto key = [](const DesignParams& p) { return std::make_tuple(p.N1, p.M1, p.M2, p.J.value_or(-1)); };
  std::optional<std::size_t> best;
  std::size_t feasible = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (dof[i] < 0) continue;
    ++feasible;
    if (!best || dof[i] > dof[*best] || (dof[i] == dof[*best] && key(candidates[i]) < key(candidates[*best]))) {
      best = i;
    }
  }
  if (!best) {
    fail(ErrorKind::unsupported_size, std::string(display_name(v)) + " has no feasible split for N=" +
                                          std::to_string(n));
  }

  SplitResult r;
  r.params = candidates[*best];
  r.dof_brute_force = dof[*best];
  r.candidates_evaluated = feasible;
  if (auto cf = detail::try_split_closed_form(v, n)) {
    r.closed_form_params = cf->params;
    r.dof_closed_form = dof_closed_form(cf->params);
    r.closed_form_realized_dof = brute_force_dof(realize(cf->params));
    r.warnings = cf->warnings;
  } else {
    r.warnings.push_back("closed-form split undefined for N=" + std::to_string(n));
  }
  r.agreement = r.dof_closed_form && *r.dof_closed_form == r.dof_brute_force;
  if (r.dof_closed_form && !r.agreement) {
    r.warnings.push_back(std::string(display_name(v)) + " N=" + std::to_string(n) + ": closed-form DOF " +
                         std::to_string(*r.dof_closed_form) + " (split N1=" + std::to_string(r.closed_form_params->N1) +
                         ", realized " + std::to_string(*r.closed_form_realized_dof) + ") != brute-force DOF " +
                         std::to_string(r.dof_brute_force) + " (N1=" + std::to_string(r.params.N1) + ")");
  }
  r.reference_dof = reference_dof(v, n);
  if (r.reference_dof) {
    r.reference_agreement = *r.reference_dof == r.dof_brute_force;
    if (!*r.reference_agreement) {
      r.warnings.push_back(std::string(display_name(v)) + " N=" + std::to_string(n) + ": reference DOF " +
                           std::to_string(*r.reference_dof) + " not reproduced; brute force reaches " +
                           std::to_string(r.dof_brute_force));
    }
  }
  return r;
}

inline nlohmann::ordered_json split_to_json(const SplitResult& r) {
  nlohmann::ordered_json j;
  j["params"] = params_to_json(r.params);
  j["dof_brute_force"] = r.dof_brute_force;
  j["dof_closed_form"] = r.dof_closed_form ? nlohmann::ordered_json(*r.dof_closed_form) : nullptr;
  j["agreement"] = r.agreement;
  j["closed_form_params"] = r.closed_form_params ? params_to_json(*r.closed_form_params) : nullptr;
  j["closed_form_realized_dof"] =
      r.closed_form_realized_dof ? nlohmann::ordered_json(*r.closed_form_realized_dof) : nullptr;
  j["reference_dof"] = r.reference_dof ? nlohmann::ordered_json(*r.reference_dof) : nullptr;
  j["reference_agreement"] = r.reference_agreement ? nlohmann::ordered_json(*r.reference_agreement) : nullptr;
  j["candidates_evaluated"] = r.candidates_evaluated;
  j["warnings"] = r.warnings;
  return j;
}

// ---------------------------------------------------------------------------
// DOF sweep

struct SweepRow {
  std::string label;
  int N = 0;
  std::optional<DesignParams> params;  // brute-force argmax; absent for baselines
  std::optional<std::int64_t> dof_closed;
  std::int64_t dof_brute = 0;
  std::optional<bool> agreement;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;
};

inline SweepTable dof_sweep(const std::vector<Variant>& variants, int n_min, int n_max,
                            const std::vector<SensorArray>& baselines = {}, unsigned threads = 1) {
  SweepTable t;
  for (Variant v : variants) {
    for (int n = n_min; n <= n_max; ++n) {
      try {
        SplitResult r = brute_force_split(v, n, SplitSearch{false, threads});
        t.rows.push_back({std::string(to_string(v)), n, r.params, r.dof_closed_form, r.dof_brute_force, r.agreement});
        for (auto& w : r.warnings) t.warnings.push_back(std::move(w));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::unsupported_size) throw;
        t.warnings.push_back(std::string(to_string(v)) + " N=" + std::to_string(n) + " skipped (minimum N=" +
                             std::to_string(minimum_sensors(v)) + ")");
      }
    }
  }
  for (const auto& b : baselines) {
    t.rows.push_back({b.name(), static_cast<int>(b.size()), std::nullopt, std::nullopt, brute_force_dof(b), std::nullopt});
  }
  return t;
}

}  // namespace tosda

#endif  // TOSDA_DESIGNER_HPP
