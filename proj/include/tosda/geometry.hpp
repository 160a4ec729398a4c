#ifndef TOSDA_GEOMETRY_HPP
#define TOSDA_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tosda/error.hpp"

namespace tosda {

/// Sensor location in multiples of the unit spacing d.
using Position = std::int64_t;

enum class Variant { cna, scna, tna2 };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::cna: return "cna";
    case Variant::scna: return "scna";
    case Variant::tna2: return "tna2";
  }
  return "?";
}

inline std::string_view display_name(Variant v) {
  switch (v) {
    case Variant::cna: return "TO-SDA(CNA)";
    case Variant::scna: return "TO-SDA(SCNA)";
    case Variant::tna2: return "TO-SDA(TNA-II)";
  }
  return "?";
}

inline Variant parse_variant(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "cna") return Variant::cna;
  if (s == "scna") return Variant::scna;
  if (s == "tna2" || s == "tna-ii" || s == "tnaii") return Variant::tna2;
  fail(ErrorKind::invalid_parameter, "unknown variant '" + std::string(text) + "' (expected cna, scna or tna2)");
}

inline constexpr std::array<Variant, 3> all_variants{Variant::cna, Variant::scna, Variant::tna2};

/// A named set of physical sensor positions on the integer grid.
///
/// Positions are stored sorted ascending and are pairwise distinct and
/// non-negative. `unit_spacing` is d expressed in wavelengths.
class SensorArray {
 public:
  SensorArray(std::string name, std::vector<Position> positions, double unit_spacing = 0.5)
      : name_(std::move(name)), positions_(std::move(positions)), unit_spacing_(unit_spacing) {
    if (positions_.empty()) fail(ErrorKind::validation, "sensor array '" + name_ + "' has no sensors");
    if (!(unit_spacing_ > 0.0)) fail(ErrorKind::validation, "unit spacing must be positive");
    std::sort(positions_.begin(), positions_.end());
    if (positions_.front() < 0) {
      fail(ErrorKind::validation, "negative sensor position " + std::to_string(positions_.front()));
    }
    auto dup = std::adjacent_find(positions_.begin(), positions_.end());
    if (dup != positions_.end()) {
      fail(ErrorKind::validation, "duplicate sensor position " + std::to_string(*dup));
    }
  }

  const std::string& name() const noexcept { return name_; }
  std::span<const Position> positions() const noexcept { return positions_; }
  const std::vector<Position>& position_vector() const noexcept { return positions_; }
  std::size_t size() const noexcept { return positions_.size(); }
  double unit_spacing() const noexcept { return unit_spacing_; }
  Position aperture() const noexcept { return positions_.back() - positions_.front(); }

  bool contains(Position p) const { return std::binary_search(positions_.begin(), positions_.end(), p); }

  SensorArray renamed(std::string name) const {
    SensorArray copy = *this;
    copy.name_ = std::move(name);
    return copy;
  }

  friend bool operator==(const SensorArray& a, const SensorArray& b) {
    return a.positions_ == b.positions_ && a.unit_spacing_ == b.unit_spacing_;
  }

 private:
  std::string name_;
  std::vector<Position> positions_;
  double unit_spacing_;
};

/// Integer line {first : step : last}; empty when first > last.
inline std::vector<Position> inclusive_range(Position first, Position step, Position last) {
  if (step <= 0) fail(ErrorKind::invalid_parameter, "range step must be positive");
  std::vector<Position> out;
  for (Position v = first; v <= last; v += step) out.push_back(v);
  return out;
}

inline std::vector<Position> inclusive_range(Position first, Position last) {
  return inclusive_range(first, 1, last);
}

struct DesignParams {
  Variant variant = Variant::cna;
  int N = 0;
  int N1 = 0;
  int N2 = 0;
  int M1 = 0;
  int M2 = 0;
  std::optional<int> J;  // TNA-II only
  Position delta1 = 0;
  Position delta2 = 0;
  Position lambda1 = 0;
  Position lambda2 = 0;

  friend bool operator==(const DesignParams&, const DesignParams&) = default;
};

/// J as fixed by the TNA-II generator definition.
inline int default_tna2_offset(int n1) { return (n1 + 1) / 2 - 1; }

inline int generator_size(Variant v, int m1, int m2) {
  return v == Variant::tna2 ? m1 + m2 : 2 * m1 + m2;
}

/// Throws validation errors for any broken DesignParams invariant.
inline void validate(const DesignParams& p) {
  auto bad = [](const std::string& what) { fail(ErrorKind::validation, "design params: " + what); };
  if (p.N1 < 0 || p.N2 < 0 || p.M1 < 0 || p.M2 < 0 || p.delta1 < 0 || p.delta2 < 0 || p.lambda1 < 0 ||
      p.lambda2 < 0) {
    bad("all fields must be non-negative");
  }
  if (p.N != p.N1 + p.N2) bad("N != N1 + N2");
  if (p.N2 < 1) bad("N2 must be at least 1");
  if (p.N1 != generator_size(p.variant, p.M1, p.M2)) bad("N1 does not match the generator split");
  if (p.variant == Variant::tna2) {
    if (!p.J) bad("TNA-II requires J");
    if (*p.J != default_tna2_offset(p.N1)) bad("J != ceil(N1/2) - 1");
  } else if (p.J) {
    bad("J is only defined for TNA-II");
  }
  if (p.delta1 > p.lambda1 + p.lambda2 + 1) bad("delta1 exceeds lambda1 + lambda2 + 1");
  if (p.delta2 > 2 * p.lambda1 + 1) bad("delta2 exceeds 2 lambda1 + 1");
}

// ---------------------------------------------------------------------------
// Constructions

inline SensorArray build_ula(int n, double unit_spacing = 0.5) {
  if (n < 1) fail(ErrorKind::invalid_parameter, "ULA needs at least one sensor");
  return SensorArray("ULA(" + std::to_string(n) + ")", inclusive_range(0, n - 1), unit_spacing);
}

struct Segment {
  std::string label;
  std::vector<Position> values;
};

/// The range expressions that make up a generator, before they are merged.
inline std::vector<Segment> generator_segments(Variant v, int m1, int m2, std::optional<int> j = std::nullopt) {
  const Position M1 = m1, M2 = m2;
  switch (v) {
    case Variant::cna: {
      const Position mid_end = M1 + (M1 + 1) * (M2 - 1);
      return {
          {"{0:M1-1}", inclusive_range(0, M1 - 1)},
          {"{M1:M1+1:M1+(M1+1)(M2-1)}", inclusive_range(M1, M1 + 1, mid_end)},
          {"{M1+(M1+1)(M2-1)+1:2M1+(M1+1)(M2-1)}", inclusive_range(mid_end + 1, 2 * M1 + (M1 + 1) * (M2 - 1))},
      };
    }
    case Variant::scna:
      return {
          {"{0}", {0}},
          {"{2:M1}", inclusive_range(2, M1)},
          {"{M1+1:M1+1:M2(M1+1)}", inclusive_range(M1 + 1, M1 + 1, M2 * (M1 + 1))},
          {"{M2(M1+1)+1:2M1+(M1+1)(M2-1)+1}",
           inclusive_range(M2 * (M1 + 1) + 1, 2 * M1 + (M1 + 1) * (M2 - 1) + 1)},
      };
    case Variant::tna2: {
      const Position J = j.value_or(default_tna2_offset(m1 + m2));
      const Position base = (M1 - 1) * (M2 + 1);
      return {
          {"L1={0:M1+1:(M1-1)(M2+1)}", inclusive_range(0, M1 + 1, base)},
          {"L2={(M1-1)(M2+1)+J+1:(M1-1)(M2+1)+M2}", inclusive_range(base + J + 1, base + M2)},
          {"L3={M1(M2+1)+1:M1(M2+1)+J}", inclusive_range(M1 * (M2 + 1) + 1, M1 * (M2 + 1) + J)},
      };
    }
  }
  return {};
}

inline std::string describe_segments(const std::vector<Segment>& segments) {
  std::ostringstream os;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) os << ", ";
    os << segments[i].label << " = {";
    for (std::size_t k = 0; k < segments[i].values.size(); ++k) os << (k ? "," : "") << segments[i].values[k];
    os << "}";
  }
  return os.str();
}

/// Generator sub-array G for a TO-SDA variant. For TNA-II, J defaults to
/// ceil(N1/2) - 1.
inline SensorArray build_generator(Variant v, int m1, int m2, std::optional<int> j = std::nullopt) {
  if (m1 < 1 || m2 < 1) fail(ErrorKind::invalid_parameter, "generator needs M1 >= 1 and M2 >= 1");
  if (v != Variant::tna2 && j) fail(ErrorKind::invalid_parameter, "J only applies to TNA-II");
  if (j && *j < 0) fail(ErrorKind::invalid_parameter, "J must be non-negative");

  const auto segments = generator_segments(v, m1, m2, j);
  std::vector<Position> all;
  for (const auto& s : segments) all.insert(all.end(), s.values.begin(), s.values.end());
  std::sort(all.begin(), all.end());
  const int expected = generator_size(v, m1, m2);
  const bool duplicates = std::adjacent_find(all.begin(), all.end()) != all.end();
  if (duplicates || static_cast<int>(all.size()) != expected) {
    fail(ErrorKind::geometry_inconsistency,
         std::string(display_name(v)) + " generator with M1=" + std::to_string(m1) + ", M2=" + std::to_string(m2) +
             (j || v == Variant::tna2 ? ", J=" + std::to_string(j.value_or(default_tna2_offset(m1 + m2))) : "") +
             " yields " + std::to_string(all.size()) + " positions" + (duplicates ? " with duplicates" : "") +
             ", expected " + std::to_string(expected) + ": " + describe_segments(segments));
  }
  return SensorArray("G[" + std::string(to_string(v)) + "]", std::move(all));
}

/// G united with the sparse ULA H = {delta1 + delta2 * k : k = 0..n2-1}.
inline SensorArray build_gtoa(const SensorArray& generator, Position delta1, Position delta2, int n2) {
  if (delta1 < 0 || delta2 < 0) fail(ErrorKind::invalid_parameter, "delta1 and delta2 must be non-negative");
  if (n2 < 1) fail(ErrorKind::invalid_parameter, "N2 must be at least 1");
  std::vector<Position> all = generator.position_vector();
  for (int k = 0; k < n2; ++k) {
    const Position p = delta1 + delta2 * k;
    if (std::find(all.begin(), all.end(), p) != all.end()) {
      fail(ErrorKind::geometry_inconsistency, "position " + std::to_string(p) + " of H coincides with another sensor");
    }
    all.push_back(p);
  }
  return SensorArray("GTOA", std::move(all), generator.unit_spacing());
}

// ---------------------------------------------------------------------------
// JSON array files: {"name": ..., "unit_spacing_wavelengths": ..., "positions": [...]}

inline SensorArray array_from_json(const nlohmann::json& j, const std::string& fallback_name = "array") {
  if (!j.is_object()) fail(ErrorKind::parse, "array file must hold a JSON object");
  if (!j.contains("positions") || !j["positions"].is_array()) {
    fail(ErrorKind::parse, "array file needs a 'positions' array");
  }
  const auto& raw = j["positions"];
  if (raw.empty()) fail(ErrorKind::parse, "'positions' is empty");
  std::vector<Position> positions;
  positions.reserve(raw.size());
  for (const auto& v : raw) {
    if (!v.is_number_integer()) fail(ErrorKind::parse, "positions must be integers");
    positions.push_back(v.get<Position>());
  }
  std::string name = fallback_name;
  if (j.contains("name")) {
    if (!j["name"].is_string()) fail(ErrorKind::parse, "'name' must be a string");
    name = j["name"].get<std::string>();
  }
  double spacing = 0.5;
  if (j.contains("unit_spacing_wavelengths")) {
    if (!j["unit_spacing_wavelengths"].is_number()) fail(ErrorKind::parse, "'unit_spacing_wavelengths' must be a number");
    spacing = j["unit_spacing_wavelengths"].get<double>();
  }
  return SensorArray(std::move(name), std::move(positions), spacing);
}

inline nlohmann::ordered_json array_to_json(const SensorArray& a) {
  nlohmann::ordered_json j;
  j["name"] = a.name();
  j["unit_spacing_wavelengths"] = a.unit_spacing();
  j["positions"] = a.position_vector();
  return j;
}

inline SensorArray load_array(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::parse, "cannot open array file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, path.string() + ": " + e.what());
  }
  return array_from_json(j, path.stem().string());
}

inline nlohmann::ordered_json params_to_json(const DesignParams& p) {
  nlohmann::ordered_json j;
  j["variant"] = to_string(p.variant);
  j["N"] = p.N;
  j["N1"] = p.N1;
  j["N2"] = p.N2;
  j["M1"] = p.M1;
  j["M2"] = p.M2;
  j["J"] = p.J ? nlohmann::ordered_json(*p.J) : nlohmann::ordered_json(nullptr);
  j["delta1"] = p.delta1;
  j["delta2"] = p.delta2;
  j["lambda1"] = p.lambda1;
  j["lambda2"] = p.lambda2;
  return j;
}

}  // namespace tosda

#endif  // TOSDA_GEOMETRY_HPP
