// Slow, literal re-implementations used as references by the tests. They
// share no code with the library beyond the SensorArray container.

#ifndef TOSDA_TESTS_ORACLES_HPP
#define TOSDA_TESTS_ORACLES_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <set>
#include <vector>

namespace oracle {

using Lag = std::int64_t;

/// lag -> count over the four sign patterns, every ordered triple.
inline std::map<Lag, std::int64_t> toeca_counts(const std::vector<Lag>& p) {
  std::map<Lag, std::int64_t> m;
  for (Lag a : p)
    for (Lag b : p)
      for (Lag c : p) {
        ++m[a + b + c];
        ++m[a + b - c];
        ++m[-a - b + c];
        ++m[-a - b - c];
      }
  return m;
}

inline Lag one_sided_z(const std::map<Lag, std::int64_t>& m) {
  if (!m.count(0)) return -1;
  Lag z = 0;
  while (m.count(z + 1) && m.count(-z - 1)) ++z;
  return z;
}

inline Lag toeca_z(const std::vector<Lag>& p) { return one_sided_z(toeca_counts(p)); }

inline std::set<Lag> pair_sums(const std::vector<Lag>& p) {
  std::set<Lag> s;
  for (Lag a : p)
    for (Lag b : p) s.insert(a + b);
  return s;
}

/// Longest run 0, 1, ..., L inside a set; returns L (or -1 without 0).
inline Lag run_from_zero(const std::set<Lag>& s) {
  Lag l = -1;
  while (s.count(l + 1)) ++l;
  return l;
}

// Generators written out segment by segment.

inline std::vector<Lag> cna_generator(Lag m1, Lag m2) {
  std::vector<Lag> g;
  for (Lag i = 0; i < m1; ++i) g.push_back(i);
  for (Lag k = 0; k < m2; ++k) g.push_back(m1 + k * (m1 + 1));
  const Lag last_sparse = m1 + (m2 - 1) * (m1 + 1);
  for (Lag i = 1; i <= m1; ++i) g.push_back(last_sparse + i);
  return g;
}

inline std::vector<Lag> scna_generator(Lag m1, Lag m2) {
  std::vector<Lag> g{0};
  for (Lag i = 2; i <= m1; ++i) g.push_back(i);
  for (Lag k = 1; k <= m2; ++k) g.push_back(k * (m1 + 1));
  for (Lag i = 1; i <= m1; ++i) g.push_back(m2 * (m1 + 1) + i);
  return g;
}

/// Positions exactly as the three printed TNA-II ranges; may contain fewer
/// than M1 + M2 entries.
inline std::vector<Lag> tna2_generator(Lag m1, Lag m2, Lag j) {
  std::vector<Lag> g;
  for (Lag x = 0; x <= (m1 - 1) * (m2 + 1); x += m1 + 1) g.push_back(x);
  for (Lag x = (m1 - 1) * (m2 + 1) + j + 1; x <= (m1 - 1) * (m2 + 1) + m2; ++x) g.push_back(x);
  for (Lag x = m1 * (m2 + 1) + 1; x <= m1 * (m2 + 1) + j; ++x) g.push_back(x);
  return g;
}

inline std::vector<Lag> with_sparse_ula(std::vector<Lag> g, Lag delta1, Lag delta2, Lag n2) {
  for (Lag k = 0; k < n2; ++k) g.push_back(delta1 + delta2 * k);
  return g;
}

// Signal-processing references.

using cd = std::complex<double>;

/// Third-order sample moments of the mean-removed rows, all four conjugation
/// patterns computed directly; indexed [case][l1][l2][l3], 0-based.
inline std::vector<cd> cumulants(const std::vector<std::vector<cd>>& x) {
  const std::size_t n = x.size();
  const std::size_t k = x[0].size();
  std::vector<std::vector<cd>> y = x;
  for (auto& row : y) {
    cd mean = 0;
    for (cd v : row) mean += v;
    mean /= static_cast<double>(k);
    for (cd& v : row) v -= mean;
  }
  std::vector<cd> out(4 * n * n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        cd s1 = 0, s2 = 0, s3 = 0, s4 = 0;
        for (std::size_t t = 0; t < k; ++t) {
          const cd u = y[a][t], v = y[b][t], w = y[c][t];
          s1 += u * v * w;
          s2 += u * v * std::conj(w);
          s3 += std::conj(u) * std::conj(v) * w;
          s4 += std::conj(u) * std::conj(v) * std::conj(w);
        }
        const std::size_t i = (a * n + b) * n + c;
        out[i] = s1 / static_cast<double>(k);
        out[n * n * n + i] = s2 / static_cast<double>(k);
        out[2 * n * n * n + i] = s3 / static_cast<double>(k);
        out[3 * n * n * n + i] = s4 / static_cast<double>(k);
      }
  return out;
}

/// Coupling coefficient for separation l: 1, c1, c1 e^{-j(l-1)step}/l, zero past the band.
inline cd coupling(Lag l, double mag, double phase, Lag band, double step) {
  l = l < 0 ? -l : l;
  if (l == 0) return 1.0;
  if (l > band) return 0.0;
  const cd c1 = mag * cd(std::cos(phase), std::sin(phase));
  if (l == 1) return c1;
  const double ph = -static_cast<double>(l - 1) * step;
  return c1 * cd(std::cos(ph), std::sin(ph)) / static_cast<double>(l);
}

inline double leakage(const std::vector<Lag>& p, double mag = 0.3, double phase = std::numbers::pi / 3,
                      Lag band = 100, double step = std::numbers::pi / 8) {
  double off = 0, all = 0;
  for (Lag a : p)
    for (Lag b : p) {
      const double e = std::norm(coupling(a - b, mag, phase, band, step));
      all += e;
      if (a != b) off += e;
    }
  return std::sqrt(off / all);
}

/// Virtual vector of D sources in the noiseless population limit:
/// z_l = sum_i g_i exp(j w_i l) for l = -Z..Z.
inline std::vector<cd> population_virtual(Lag z, const std::vector<double>& angles_deg,
                                          const std::vector<double>& gains, double spacing = 0.5) {
  std::vector<cd> v(static_cast<std::size_t>(2 * z + 1));
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    const double w = 2 * std::numbers::pi * spacing * std::sin(angles_deg[i] * std::numbers::pi / 180);
    for (Lag l = -z; l <= z; ++l) v[static_cast<std::size_t>(l + z)] += gains[i] * std::polar(1.0, w * l);
  }
  return v;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] < v[i]) ++less;
        if (v[j] == v[i]) ++equal;
      }
      r[i] = less + (equal + 1) / 2;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i] / n, my += ry[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle

#endif  // TOSDA_TESTS_ORACLES_HPP
