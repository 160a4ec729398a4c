#ifndef TOSDA_COARRAY_HPP
#define TOSDA_COARRAY_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tosda/error.hpp"
#include "tosda/geometry.hpp"

namespace tosda {

/// Sorted, duplicate-free integer set.
using IntSet = std::vector<Position>;

/// Lag -> multiplicity, stored as a sorted association list.
class LagMultiset {
 public:
  using Entry = std::pair<Position, std::uint64_t>;

  LagMultiset() = default;

  static LagMultiset from_lags(std::vector<Position> lags) {
    std::sort(lags.begin(), lags.end());
    LagMultiset m;
    for (Position lag : lags) {
      if (!m.entries_.empty() && m.entries_.back().first == lag) {
        ++m.entries_.back().second;
      } else {
        m.entries_.emplace_back(lag, 1);
      }
    }
    return m;
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t distinct() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  std::uint64_t total() const noexcept {
    std::uint64_t t = 0;
    for (const auto& e : entries_) t += e.second;
    return t;
  }

  std::uint64_t count(Position lag) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), lag,
                               [](const Entry& e, Position l) { return e.first < l; });
    return (it != entries_.end() && it->first == lag) ? it->second : 0;
  }

  IntSet support() const {
    IntSet out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.first);
    return out;
  }

  /// lag -> -lag with the same multiplicities.
  LagMultiset mirrored() const {
    LagMultiset m;
    m.entries_.reserve(entries_.size());
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) m.entries_.emplace_back(-it->first, it->second);
    return m;
  }

  /// Multiset sum (bag union): multiplicities add.
  friend LagMultiset operator+(const LagMultiset& a, const LagMultiset& b) {
    LagMultiset m;
    m.entries_.reserve(a.entries_.size() + b.entries_.size());
    auto i = a.entries_.begin();
    auto j = b.entries_.begin();
    while (i != a.entries_.end() || j != b.entries_.end()) {
      if (j == b.entries_.end() || (i != a.entries_.end() && i->first < j->first)) {
        m.entries_.push_back(*i++);
      } else if (i == a.entries_.end() || j->first < i->first) {
        m.entries_.push_back(*j++);
      } else {
        m.entries_.emplace_back(i->first, i->second + j->second);
        ++i;
        ++j;
      }
    }
    return m;
  }

  friend bool operator==(const LagMultiset&, const LagMultiset&) = default;

 private:
  std::vector<Entry> entries_;
};

/// Summary of a virtual co-array.
///
/// `one_sided_z` is the largest Z with [-Z, Z] inside `phi_u`, or -1 when lag 0
/// itself is absent. `holes` lists the lags missing from [min(phi_u), max(phi_u)].
struct CoarrayReport {
  IntSet phi_u;
  LagMultiset weights;
  std::size_t size_u = 0;
  Position one_sided_z = -1;
  std::vector<Position> holes;
  bool symmetric = false;

  bool hole_free() const noexcept { return holes.empty(); }

  /// Number of consecutive lags 2Z+1 around the origin (the DOF).
  std::int64_t consecutive_lags() const noexcept { return one_sided_z < 0 ? 0 : 2 * one_sided_z + 1; }

  /// True when no hole lies inside [-z, z].
  bool hole_free_within(Position z) const {
    return std::none_of(holes.begin(), holes.end(), [z](Position h) { return h >= -z && h <= z; });
  }

  bool contains(Position lag) const { return std::binary_search(phi_u.begin(), phi_u.end(), lag); }
};

inline CoarrayReport analyze(LagMultiset weights) {
  CoarrayReport r;
  r.phi_u = weights.support();
  r.size_u = r.phi_u.size();
  r.weights = std::move(weights);
  if (r.phi_u.empty()) return r;

  if (r.contains(0)) {
    Position z = 0;
    while (r.contains(z + 1) && r.contains(-(z + 1))) ++z;
    r.one_sided_z = z;
  }
  for (std::size_t i = 1; i < r.phi_u.size(); ++i) {
    for (Position lag = r.phi_u[i - 1] + 1; lag < r.phi_u[i]; ++lag) r.holes.push_back(lag);
  }
  r.symmetric = std::all_of(r.phi_u.begin(), r.phi_u.end(), [&](Position lag) { return r.contains(-lag); });
  return r;
}

// ---------------------------------------------------------------------------
// Cross sums

inline IntSet cross_sum(std::span<const Position> a, std::span<const Position> b) {
  if (a.empty() || b.empty()) fail(ErrorKind::invalid_parameter, "cross sum of an empty set");
  IntSet out;
  out.reserve(a.size() * b.size());
  for (Position x : a)
    for (Position y : b) out.push_back(x + y);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline IntSet cross_sum(std::span<const Position> a, std::span<const Position> b, std::span<const Position> c) {
  if (c.empty()) fail(ErrorKind::invalid_parameter, "cross sum of an empty set");
  const IntSet ab = cross_sum(a, b);
  return cross_sum(ab, c);
}

inline IntSet negated(std::span<const Position> a) {
  IntSet out(a.rbegin(), a.rend());
  for (auto& v : out) v = -v;
  return out;
}

// ---------------------------------------------------------------------------
// Second-order co-arrays

enum class SecondOrderKind { difference, sum };

inline CoarrayReport second_order(const SensorArray& s, SecondOrderKind kind) {
  const auto p = s.positions();
  std::vector<Position> lags;
  lags.reserve(p.size() * p.size());
  for (Position a : p)
    for (Position b : p) lags.push_back(kind == SecondOrderKind::difference ? a - b : a + b);
  return analyze(LagMultiset::from_lags(std::move(lags)));
}

// ---------------------------------------------------------------------------
// Third-order co-arrays

/// Sign pattern (s1, s2, s3) of case j: +++, ++-, --+, ---.
inline std::array<int, 3> case_signs(int case_j) {
  switch (case_j) {
    case 1: return {1, 1, 1};
    case 2: return {1, 1, -1};
    case 3: return {-1, -1, 1};
    case 4: return {-1, -1, -1};
    default: fail(ErrorKind::invalid_parameter, "third-order case must be 1..4, got " + std::to_string(case_j));
  }
}

/// Flat position of (case j, l1, l2, l3) in the stacked 4N^3 cumulant vector.
/// All indices are 1-based as in the steering-response convention; the result
/// is 0-based.
inline std::size_t cumulant_index(std::size_t n, int case_j, std::size_t l1, std::size_t l2, std::size_t l3) {
  return static_cast<std::size_t>(case_j - 1) * n * n * n + n * n * (l1 - 1) + n * (l2 - 1) + (l3 - 1);
}

inline std::vector<Position> case_lags(const SensorArray& s, int case_j) {
  const auto [s1, s2, s3] = case_signs(case_j);
  const auto p = s.positions();
  std::vector<Position> lags;
  lags.reserve(p.size() * p.size() * p.size());
  for (Position a : p)
    for (Position b : p)
      for (Position c : p) lags.push_back(s1 * a + s2 * b + s3 * c);
  return lags;
}

/// Multiset of the j-th third-order co-array over all N^3 ordered triples.
inline LagMultiset toca(const SensorArray& s, int case_j) {
  return LagMultiset::from_lags(case_lags(s, case_j));
}

/// Lag carried by every entry of the stacked 4N^3 cumulant vector, in
/// cumulant_index order.
inline std::vector<Position> index_lag_map(const SensorArray& s) {
  std::vector<Position> map;
  const std::size_t n = s.size();
  map.reserve(4 * n * n * n);
  for (int j = 1; j <= 4; ++j) {
    auto lags = case_lags(s, j);
    map.insert(map.end(), lags.begin(), lags.end());
  }
  return map;
}

/// Third-order exhaustive co-array: bag sum of the four cases.
inline CoarrayReport to_eca(const SensorArray& s) {
  return analyze(LagMultiset::from_lags(index_lag_map(s)));
}

// ---------------------------------------------------------------------------

inline nlohmann::ordered_json report_to_json(const CoarrayReport& r) {
  nlohmann::ordered_json j;
  j["phi_u"] = r.phi_u;
  nlohmann::ordered_json w = nlohmann::ordered_json::object();
  for (const auto& [lag, count] : r.weights.entries()) w[std::to_string(lag)] = count;
  j["weights"] = std::move(w);
  j["Z"] = r.one_sided_z;
  j["holes"] = r.holes;
  j["symmetric"] = r.symmetric;
  return j;
}

}  // namespace tosda

#endif  // TOSDA_COARRAY_HPP
