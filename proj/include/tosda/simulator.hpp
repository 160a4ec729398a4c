#ifndef TOSDA_SIMULATOR_HPP
#define TOSDA_SIMULATOR_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tosda/coarray.hpp"
#include "tosda/error.hpp"
#include "tosda/geometry.hpp"
#include "tosda/io.hpp"
#include "tosda/metrics.hpp"
#include "tosda/parallel.hpp"

namespace tosda {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Random numbers. The generator and both transforms are spelled out so that a
// seed gives the same stream with any standard library.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of trial `index` under `master`.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in (0, 1].
  double uniform() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

  double exponential() { return -std::log(uniform()); }

  double gaussian() {
    if (spare_) {
      const double g = *spare_;
      spare_.reset();
      return g;
    }
    const double r = std::sqrt(-2 * std::log(uniform()));
    const double phi = 2 * std::numbers::pi * uniform();
    spare_ = r * std::sin(phi);
    return r * std::cos(phi);
  }

 private:
  std::uint64_t state_;
  std::optional<double> spare_;
};

// ---------------------------------------------------------------------------
// Scene and snapshots

enum class SourceKind { skewed_real, custom };

struct SourceScene {
  std::vector<double> angles_deg;
  double snr_db = 0;  // +inf: noiseless
  std::int64_t snapshots = 1;
  SourceKind kind = SourceKind::skewed_real;
  std::uint64_t seed = 0;
  Eigen::MatrixXcd custom_signals;  // D x K, used when kind == custom

  void check() const {
    if (angles_deg.empty()) fail(ErrorKind::invalid_parameter, "scene needs at least one source");
    if (snapshots < 1) fail(ErrorKind::invalid_parameter, "snapshot count must be positive");
    for (std::size_t i = 0; i < angles_deg.size(); ++i) {
      if (!(std::abs(angles_deg[i]) < 90)) fail(ErrorKind::invalid_parameter, "source angles must lie in (-90, 90)");
      for (std::size_t j = 0; j < i; ++j)
        if (angles_deg[i] == angles_deg[j]) fail(ErrorKind::invalid_parameter, "source angles must be distinct");
    }
    if (kind == SourceKind::custom &&
        (custom_signals.rows() != static_cast<Eigen::Index>(angles_deg.size()) || custom_signals.cols() != snapshots)) {
      fail(ErrorKind::invalid_parameter, "custom signals must be D x K");
    }
  }
};

/// Third moment E[s^3] of the unit-variance centered exponential.
inline constexpr double skewed_real_third_moment = 2.0;

/// Angular frequency per unit of lag for a source at theta degrees.
inline double lag_frequency(double unit_spacing, double theta_deg) {
  return 2 * std::numbers::pi * unit_spacing * std::sin(theta_deg * std::numbers::pi / 180);
}

inline Eigen::MatrixXcd steering_matrix(const SensorArray& s, const std::vector<double>& angles_deg) {
  const auto p = s.positions();
  Eigen::MatrixXcd a(static_cast<Eigen::Index>(p.size()), static_cast<Eigen::Index>(angles_deg.size()));
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    if (!(std::abs(angles_deg[i]) < 90)) fail(ErrorKind::invalid_parameter, "steering angles must lie in (-90, 90)");
    const double w = lag_frequency(s.unit_spacing(), angles_deg[i]);
    for (std::size_t n = 0; n < p.size(); ++n) {
      a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = std::polar(1.0, w * static_cast<double>(p[n]));
    }
  }
  return a;
}

/// X = C A S + N with unit-power sources and per-sensor SNR snr_db.
inline Eigen::MatrixXcd synthesize_snapshots(const SensorArray& s, const SourceScene& scene,
                                             const std::optional<CouplingModel>& coupling = std::nullopt) {
  scene.check();
  const auto d = static_cast<Eigen::Index>(scene.angles_deg.size());
  const auto k = static_cast<Eigen::Index>(scene.snapshots);
  const auto n = static_cast<Eigen::Index>(s.size());
  Rng rng(scene.seed);

  Eigen::MatrixXcd signals(d, k);
  if (scene.kind == SourceKind::custom) {
    signals = scene.custom_signals;
  } else {
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index t = 0; t < k; ++t) signals(i, t) = rng.exponential() - 1.0;
  }

  Eigen::MatrixXcd response = steering_matrix(s, scene.angles_deg);
  if (coupling) response = coupling_matrix(s, *coupling) * response;
  Eigen::MatrixXcd x = response * signals;

  if (!(std::isinf(scene.snr_db) && scene.snr_db > 0)) {
    const double sigma = std::sqrt(std::pow(10.0, -scene.snr_db / 10) / 2);
    for (Eigen::Index t = 0; t < k; ++t)
      for (Eigen::Index r = 0; r < n; ++r) {
        const double re = rng.gaussian();
        const double im = rng.gaussian();
        x(r, t) += sigma * cplx(re, im);
      }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Third-order cumulants

struct CumulantData {
  Eigen::VectorXcd values;           // 4 N^3, cumulant_index order
  std::vector<Position> lag_map;     // lag of each entry
};

/// Sample third-order cumulants of the N x K snapshot matrix, all four
/// conjugation patterns.
inline CumulantData sample_third_cumulants(const Eigen::MatrixXcd& snapshots, const SensorArray& s) {
  const Eigen::Index n = snapshots.rows();
  const Eigen::Index k = snapshots.cols();
  if (k == 0) fail(ErrorKind::invalid_parameter, "no snapshots");
  if (n != static_cast<Eigen::Index>(s.size())) fail(ErrorKind::invalid_parameter, "snapshot rows != sensor count");

  const Eigen::MatrixXcd x = snapshots.colwise() - snapshots.rowwise().mean();
  Eigen::MatrixXcd pairs(n * n, k);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) pairs.row(a * n + b) = x.row(a).cwiseProduct(x.row(b));

  const Eigen::MatrixXcd plain = pairs * x.transpose() / static_cast<double>(k);  // x x x
  const Eigen::MatrixXcd mixed = pairs * x.adjoint() / static_cast<double>(k);    // x x x*

  const Eigen::Index n3 = n * n * n;
  CumulantData c;
  c.values.resize(4 * n3);
  for (Eigen::Index r = 0; r < n * n; ++r)
    for (Eigen::Index l = 0; l < n; ++l) {
      const Eigen::Index i = r * n + l;
      c.values(i) = plain(r, l);
      c.values(n3 + i) = mixed(r, l);
      c.values(2 * n3 + i) = std::conj(mixed(r, l));
      c.values(3 * n3 + i) = std::conj(plain(r, l));
    }
  c.lag_map = index_lag_map(s);
  return c;
}

/// Exact cumulants for independent sources with third moments `third_moments`
/// (one per source) and no noise, optionally through a coupling matrix.
inline CumulantData population_cumulants(const SensorArray& s, const std::vector<double>& angles_deg,
                                         const std::vector<double>& third_moments,
                                         const std::optional<CouplingModel>& coupling = std::nullopt) {
  if (third_moments.size() != angles_deg.size()) fail(ErrorKind::invalid_parameter, "one third moment per source");
  Eigen::MatrixXcd b = steering_matrix(s, angles_deg);
  if (coupling) b = coupling_matrix(s, *coupling) * b;
  const Eigen::Index n = b.rows();
  const Eigen::Index n3 = n * n * n;
  CumulantData c;
  c.values = Eigen::VectorXcd::Zero(4 * n3);
  for (Eigen::Index d = 0; d < b.cols(); ++d) {
    const double g = third_moments[static_cast<std::size_t>(d)];
    for (Eigen::Index l1 = 0; l1 < n; ++l1)
      for (Eigen::Index l2 = 0; l2 < n; ++l2)
        for (Eigen::Index l3 = 0; l3 < n; ++l3) {
          const Eigen::Index i = (l1 * n + l2) * n + l3;
          const cplx p = b(l1, d) * b(l2, d);
          c.values(i) += g * p * b(l3, d);
          c.values(n3 + i) += g * p * std::conj(b(l3, d));
          c.values(2 * n3 + i) += g * std::conj(p) * b(l3, d);
          c.values(3 * n3 + i) += g * std::conj(p * b(l3, d));
        }
  }
  c.lag_map = index_lag_map(s);
  return c;
}

// ---------------------------------------------------------------------------
// Virtual array

struct VirtualVector {
  Position z = 0;
  Eigen::VectorXcd values;             // lags -Z..Z
  std::vector<std::uint64_t> counts;   // entries averaged per lag
};

/// Averages the cumulant entries of each lag in [-Z, Z].
inline VirtualVector virtual_array_vector(const CumulantData& cum, const CoarrayReport& report) {
  if (static_cast<std::size_t>(cum.values.size()) != cum.lag_map.size()) {
    fail(ErrorKind::invalid_parameter, "cumulant values and lag map differ in length");
  }
  if (report.one_sided_z < 0) fail(ErrorKind::internal_consistency, "lag 0 missing from the co-array");
  const Position z = report.one_sided_z;
  if (!report.hole_free_within(z)) fail(ErrorKind::internal_consistency, "hole inside the consecutive segment");

  VirtualVector v;
  v.z = z;
  v.values = Eigen::VectorXcd::Zero(2 * z + 1);
  v.counts.assign(static_cast<std::size_t>(2 * z + 1), 0);
  for (std::size_t i = 0; i < cum.lag_map.size(); ++i) {
    const Position lag = cum.lag_map[i];
    if (lag < -z || lag > z) continue;
    v.values(lag + z) += cum.values(static_cast<Eigen::Index>(i));
    ++v.counts[static_cast<std::size_t>(lag + z)];
  }
  for (Position l = -z; l <= z; ++l) {
    const auto idx = static_cast<std::size_t>(l + z);
    if (v.counts[idx] == 0) fail(ErrorKind::internal_consistency, "no cumulant entry for lag " + std::to_string(l));
    v.values(l + z) /= static_cast<double>(v.counts[idx]);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Spatial-smoothing MUSIC

struct AngleGrid {
  double min_deg = -89.99;
  double max_deg = 89.99;
  double step_deg = 0.01;

  std::size_t size() const {
    if (!(step_deg > 0) || max_deg < min_deg) fail(ErrorKind::invalid_parameter, "bad angle grid");
    return static_cast<std::size_t>(std::llround((max_deg - min_deg) / step_deg)) + 1;
  }
  double at(std::size_t i) const { return min_deg + static_cast<double>(i) * step_deg; }
};

struct EstimationResult {
  std::vector<double> estimated_angles;               // ascending
  std::vector<std::pair<double, double>> spectrum;    // filled on request
  std::int64_t subarray_size = 0;
  bool padded = false;  // fewer local maxima than sources
};

/// (1/(Z+1)) sum_i z_i z_i^H with z_i the lags -i .. -i+Z.
inline Eigen::MatrixXcd smoothed_covariance(const Eigen::VectorXcd& z) {
  const Eigen::Index len = z.size();
  if (len % 2 == 0) fail(ErrorKind::invalid_parameter, "virtual vector length must be odd");
  const Eigen::Index half = len / 2;
  const Eigen::Index m = half + 1;
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(m, m);
  for (Eigen::Index i = 0; i <= half; ++i) {
    const auto sub = z.segment(half - i, m);
    r.noalias() += sub * sub.adjoint();
  }
  return r / static_cast<double>(m);
}

inline EstimationResult ss_music(const Eigen::VectorXcd& z, std::size_t sources, const AngleGrid& grid = {},
                                 double unit_spacing = 0.5, bool keep_spectrum = false) {
  const Eigen::Index half = z.size() / 2;
  if (sources == 0) fail(ErrorKind::invalid_parameter, "at least one source is required");
  if (static_cast<Eigen::Index>(sources) > half) {
    fail(ErrorKind::capacity_exceeded, "more sources than one-sided consecutive lags (D=" + std::to_string(sources) +
                                           ", Z=" + std::to_string(half) + ")");
  }
  const Eigen::Index m = half + 1;
  const Eigen::MatrixXcd r = smoothed_covariance(z);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(r);
  if (eig.info() != Eigen::Success) fail(ErrorKind::internal_consistency, "eigendecomposition failed");
  const Eigen::MatrixXcd signal = eig.eigenvectors().rightCols(static_cast<Eigen::Index>(sources));

  const std::size_t count = grid.size();
  std::vector<double> p(count);
  Eigen::VectorXcd v(m);
  const double floor_value = 1e-12 * static_cast<double>(m);
  for (std::size_t g = 0; g < count; ++g) {
    const double w = lag_frequency(unit_spacing, grid.at(g));
    for (Eigen::Index i = 0; i < m; ++i) v(i) = std::polar(1.0, w * static_cast<double>(i));
    const double proj = (signal.adjoint() * v).squaredNorm();
    p[g] = 1.0 / std::max(static_cast<double>(m) - proj, floor_value);
  }

  std::vector<std::size_t> peaks;
  for (std::size_t g = 1; g + 1 < count; ++g)
    if (p[g] > p[g - 1] && p[g] >= p[g + 1]) peaks.push_back(g);
  auto by_value = [&](std::size_t a, std::size_t b) { return p[a] != p[b] ? p[a] > p[b] : a < b; };
  std::sort(peaks.begin(), peaks.end(), by_value);

  EstimationResult out;
  out.subarray_size = m;
  std::vector<std::size_t> chosen(peaks.begin(), peaks.begin() + static_cast<std::ptrdiff_t>(std::min(sources, peaks.size())));
  if (chosen.size() < sources) {
    out.padded = true;
    std::vector<std::size_t> all(count);
    for (std::size_t g = 0; g < count; ++g) all[g] = g;
    std::sort(all.begin(), all.end(), by_value);
    for (std::size_t g : all) {
      if (chosen.size() == sources) break;
      if (std::find(chosen.begin(), chosen.end(), g) == chosen.end()) chosen.push_back(g);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t g : chosen) out.estimated_angles.push_back(grid.at(g));
  if (keep_spectrum) {
    out.spectrum.reserve(count);
    for (std::size_t g = 0; g < count; ++g) out.spectrum.emplace_back(grid.at(g), p[g]);
  }
  return out;
}

/// Local maxima of a sampled spectrum, in grid order.
inline std::vector<double> local_maxima(const std::vector<std::pair<double, double>>& spectrum) {
  std::vector<double> out;
  for (std::size_t g = 1; g + 1 < spectrum.size(); ++g) {
    if (spectrum[g].second > spectrum[g - 1].second && spectrum[g].second >= spectrum[g + 1].second) {
      out.push_back(spectrum[g].first);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// RMSE and Monte-Carlo runs

/// Root mean squared error over trials and sources; each row is one trial's
/// estimates, matched to `truth` after sorting both.
inline double rmse(const std::vector<std::vector<double>>& estimates, std::vector<double> truth) {
  if (estimates.empty() || truth.empty()) fail(ErrorKind::invalid_parameter, "rmse needs at least one trial and source");
  std::sort(truth.begin(), truth.end());
  double sum = 0;
  for (const auto& row : estimates) {
    if (row.size() != truth.size()) fail(ErrorKind::invalid_parameter, "estimate count differs from source count");
    std::vector<double> sorted = row;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < truth.size(); ++i) sum += (sorted[i] - truth[i]) * (sorted[i] - truth[i]);
  }
  return std::sqrt(sum / static_cast<double>(estimates.size() * truth.size()));
}

/// D angles evenly spaced over [lo, hi].
inline std::vector<double> uniform_angles(std::size_t d, double lo = -60, double hi = 60) {
  if (d == 0) fail(ErrorKind::invalid_parameter, "at least one source is required");
  if (d == 1) return {(lo + hi) / 2};
  std::vector<double> a(d);
  for (std::size_t i = 0; i < d; ++i) a[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(d - 1);
  return a;
}

enum class SweepKind { snr, snapshots, num_sources };

inline std::string_view to_string(SweepKind k) {
  switch (k) {
    case SweepKind::snr: return "snr";
    case SweepKind::snapshots: return "snapshots";
    case SweepKind::num_sources: return "num_sources";
  }
  return "?";
}

inline SweepKind parse_sweep_kind(std::string_view s) {
  if (s == "snr") return SweepKind::snr;
  if (s == "snapshots") return SweepKind::snapshots;
  if (s == "num_sources" || s == "sources") return SweepKind::num_sources;
  fail(ErrorKind::parse, "unknown sweep kind '" + std::string(s) + "'");
}

struct MonteCarloConfig {
  SourceScene scene;  // template: seed is the master seed
  SweepKind sweep = SweepKind::snr;
  std::vector<double> values;
  std::size_t trials = 1;
  std::optional<CouplingModel> coupling;
  AngleGrid grid;
  unsigned threads = 1;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct RunStats {
  double sweep_value = 0;
  std::size_t trials = 0;
  double rmse_deg = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> truth;
  std::vector<std::vector<double>> per_trial_estimates;
  std::size_t padded_trials = 0;
  std::optional<std::string> error;  // set when the point was aborted
};

inline SourceScene scene_for(const MonteCarloConfig& cfg, double value) {
  SourceScene s = cfg.scene;
  s.kind = SourceKind::skewed_real;
  switch (cfg.sweep) {
    case SweepKind::snr: s.snr_db = value; break;
    case SweepKind::snapshots:
      if (value < 1 || value != std::floor(value)) fail(ErrorKind::invalid_parameter, "snapshot count must be a positive integer");
      s.snapshots = static_cast<std::int64_t>(value);
      break;
    case SweepKind::num_sources:
      if (value < 1 || value != std::floor(value)) fail(ErrorKind::invalid_parameter, "source count must be a positive integer");
      s.angles_deg = uniform_angles(static_cast<std::size_t>(value));
      break;
  }
  s.check();
  return s;
}

/// One end-to-end estimate: snapshots, cumulants, virtual vector, SS-MUSIC.
inline EstimationResult run_trial(const SensorArray& s, const CoarrayReport& report, const SourceScene& scene,
                                  const std::optional<CouplingModel>& coupling, const AngleGrid& grid,
                                  bool keep_spectrum = false) {
  const Eigen::MatrixXcd x = synthesize_snapshots(s, scene, coupling);
  const CumulantData c = sample_third_cumulants(x, s);
  const VirtualVector v = virtual_array_vector(c, report);
  return ss_music(v.values, scene.angles_deg.size(), grid, s.unit_spacing(), keep_spectrum);
}

/// Trial t of every sweep point uses the seed trial_seed(master, t), so the
/// points share their random draws and the result does not depend on the
/// thread count.
inline std::vector<RunStats> monte_carlo(const SensorArray& s, const MonteCarloConfig& cfg) {
  if (cfg.trials < 1) fail(ErrorKind::invalid_parameter, "trials must be at least 1");
  if (cfg.values.empty()) fail(ErrorKind::invalid_parameter, "empty sweep");
  const CoarrayReport report = to_eca(s);
  const std::size_t total = cfg.values.size() * cfg.trials;
  std::size_t done = 0;

  std::vector<RunStats> out;
  for (double value : cfg.values) {
    RunStats st;
    st.sweep_value = value;
    const SourceScene base = scene_for(cfg, value);
    st.truth = base.angles_deg;
    std::sort(st.truth.begin(), st.truth.end());
    std::vector<EstimationResult> results(cfg.trials);
    try {
      parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
        SourceScene scene = base;
        scene.seed = trial_seed(cfg.scene.seed, t);
        results[t] = run_trial(s, report, scene, cfg.coupling, cfg.grid);
      });
    } catch (const Error& e) {
      st.error = e.what();
      out.push_back(std::move(st));
      done += cfg.trials;
      if (cfg.progress) cfg.progress(done, total);
      continue;
    }
    st.trials = cfg.trials;
    for (auto& r : results) {
      st.padded_trials += r.padded ? 1 : 0;
      st.per_trial_estimates.push_back(std::move(r.estimated_angles));
    }
    st.rmse_deg = rmse(st.per_trial_estimates, st.truth);
    out.push_back(std::move(st));
    done += cfg.trials;
    if (cfg.progress) cfg.progress(done, total);
  }
  return out;
}

inline std::string rmse_csv(const std::vector<RunStats>& stats) {
  CsvTable t({"sweep_value", "trials", "rmse_deg"});
  for (const auto& st : stats) t.row({format_double(st.sweep_value), std::to_string(st.trials), format_double(st.rmse_deg)});
  return t.str();
}

inline std::string per_trial_csv(const std::vector<RunStats>& stats) {
  CsvTable t({"sweep_value", "trial", "source", "truth_deg", "estimate_deg"});
  for (const auto& st : stats)
    for (std::size_t k = 0; k < st.per_trial_estimates.size(); ++k) {
      std::vector<double> est = st.per_trial_estimates[k];
      std::sort(est.begin(), est.end());
      for (std::size_t i = 0; i < est.size(); ++i) {
        t.row({format_double(st.sweep_value), std::to_string(k), std::to_string(i), format_double(st.truth[i]),
               format_double(est[i])});
      }
    }
  return t.str();
}

inline std::string spectrum_csv(const std::vector<std::pair<double, double>>& spectrum) {
  CsvTable t({"angle_deg", "value"});
  for (const auto& [a, v] : spectrum) t.row({format_double(a), format_double(v)});
  return t.str();
}

}  // namespace tosda

#endif  // TOSDA_SIMULATOR_HPP
