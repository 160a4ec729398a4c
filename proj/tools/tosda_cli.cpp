// tosda: design, analyze and simulate third-order sum-and-difference arrays.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <tosda/tosda.hpp>

#ifndef TOSDA_VERSION
#define TOSDA_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace tosda;

namespace {

constexpr int exit_error = 1;
constexpr int exit_strict = 3;

struct Common {
  std::string out_dir = ".";
  std::string prefix;
  unsigned threads = default_thread_count();
  bool strict = false;
};

/// Collects outputs and diagnostics for one run, then writes the manifest.
class Run {
 public:
  Run(std::string command, const Common& common) : command_(std::move(command)), common_(common) {
    manifest_["tool"] = "tosda";
    manifest_["version"] = TOSDA_VERSION;
    manifest_["command"] = command_;
    manifest_["parameters"] = ordered_json::object();
  }

  ordered_json& params() { return manifest_["parameters"]; }
  void set(const std::string& key, ordered_json value) { manifest_[key] = std::move(value); }

  void warn(const std::string& w) {
    std::cerr << "warning: " << w << "\n";
    warnings_.push_back(w);
  }
  void warn_all(const std::vector<std::string>& ws) {
    for (const auto& w : ws) warn(w);
  }

  fs::path path(const std::string& name) const { return fs::path(common_.out_dir) / (common_.prefix + name); }

  void write(const std::string& name, const std::string& text) {
    write_text(path(name), text);
    outputs_.push_back(common_.prefix + name);
  }
  void write_json(const std::string& name, const ordered_json& j) { write(name, j.dump(2) + "\n"); }

  int finish() {
    manifest_["outputs"] = outputs_;
    manifest_["warnings"] = warnings_;
    write_text(path("manifest.json"), manifest_.dump(2) + "\n");
    if (common_.strict && !warnings_.empty()) {
      std::cerr << "error: " << warnings_.size() << " warning(s) with --strict\n";
      return exit_strict;
    }
    return 0;
  }

 private:
  std::string command_;
  const Common& common_;
  ordered_json manifest_;
  std::vector<std::string> outputs_;
  std::vector<std::string> warnings_;
};

std::pair<int, int> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      const int v = std::stoi(text);
      return {v, v};
    }
    return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
  } catch (const std::exception&) {
    fail(ErrorKind::parse, "bad range '" + text + "', expected a:b");
  }
}

std::vector<Variant> parse_variants(const std::string& text) {
  std::vector<Variant> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "all") {
      out.assign(all_variants.begin(), all_variants.end());
    } else {
      out.push_back(parse_variant(item));
    }
  }
  if (out.empty()) fail(ErrorKind::parse, "no variants given");
  return out;
}

ordered_json coupling_to_json(const CouplingModel& m) {
  ordered_json j;
  j["c1_magnitude"] = m.c1_magnitude;
  j["c1_phase_rad"] = m.c1_phase;
  j["band"] = m.band;
  j["decay_phase_step_rad"] = m.decay_phase_step;
  return j;
}

CouplingModel coupling_from_json(const nlohmann::json& j) {
  CouplingModel m;
  m.c1_magnitude = j.value("c1_magnitude", m.c1_magnitude);
  m.c1_phase = j.value("c1_phase_rad", m.c1_phase);
  m.band = j.value("band", m.band);
  m.decay_phase_step = j.value("decay_phase_step_rad", m.decay_phase_step);
  m.check();
  return m;
}

void add_coupling_flags(CLI::App* app, CouplingModel& m) {
  app->add_option("--c1-magnitude", m.c1_magnitude, "|c1| of the coupling model")->capture_default_str();
  app->add_option("--c1-phase", m.c1_phase, "phase of c1 in radians")->capture_default_str();
  app->add_option("--band", m.band, "coupling band limit B")->capture_default_str();
  app->add_option("--phase-step", m.decay_phase_step, "phase step of c_l in radians")->capture_default_str();
}

std::string config_label(const DesignParams& p) {
  std::string s = "(" + std::to_string(p.N1) + "," + std::to_string(p.N2) + ")";
  if (p.J) s += " J=" + std::to_string(*p.J);
  return s;
}

// ---------------------------------------------------------------------------
// design

struct DesignOpts {
  std::string variant;
  int sensors = 0;
  std::optional<int> n1;
  std::optional<int> j;
  std::string generator;
  Position delta1 = 0;
  Position delta2 = 0;
  int n2 = 0;
  bool oracle = false;
};

int cmd_design(const DesignOpts& o, const Common& common) {
  Run run("design", common);
  if (!o.generator.empty()) {
    const SensorArray g = load_array(o.generator);
    run.params()["generator"] = array_to_json(g);
    run.params()["delta1"] = o.delta1;
    run.params()["delta2"] = o.delta2;
    run.params()["n2"] = o.n2;
    const SensorArray h = build_gtoa(g, o.delta1, o.delta2, o.n2);
    run.write_json("array.json", array_to_json(h));
    std::cout << array_to_json(h).dump() << "\n";
    return run.finish();
  }
  if (o.variant.empty() || o.sensors == 0) fail(ErrorKind::invalid_parameter, "design needs --variant and --sensors, or --generator");

  const Variant v = parse_variant(o.variant);
  run.params()["variant"] = to_string(v);
  run.params()["sensors"] = o.sensors;
  if (o.n1) run.params()["n1"] = *o.n1;
  if (o.j) run.params()["J"] = *o.j;
  run.params()["oracle"] = o.oracle;
  run.params()["threads"] = common.threads;

  if (o.j && !o.n1) fail(ErrorKind::invalid_parameter, "--j requires --n1");
  const ToSdaDesign d = o.n1 ? build_to_sda_with_n1(v, o.sensors, *o.n1, o.j) : build_to_sda(v, o.sensors);
  run.warn_all(d.warnings);
  const std::int64_t realized = brute_force_dof(d.array);
  ordered_json params = params_to_json(d.params);
  params["dof_closed_form"] = dof_closed_form(d.params);
  params["dof_realized"] = realized;
  if (params["dof_closed_form"].get<std::int64_t>() != realized) {
    run.warn("closed-form DOF " + std::to_string(dof_closed_form(d.params)) + " differs from the realized DOF " +
             std::to_string(realized));
  }
  run.write_json("array.json", array_to_json(d.array));
  run.write_json("params.json", params);
  std::cout << array_to_json(d.array).dump() << "\n";
  std::cout << "DOF " << realized << " (closed form " << dof_closed_form(d.params) << ")\n";

  if (o.oracle) {
    const SplitResult r = brute_force_split(v, o.sensors, SplitSearch{false, common.threads});
    run.warn_all(r.warnings);
    run.set("oracle", split_to_json(r));
    run.write_json("oracle.json", split_to_json(r));
    std::cout << "oracle: brute-force DOF " << r.dof_brute_force << " at " << config_label(r.params)
              << (r.agreement ? ", agrees with the closed form\n" : ", disagrees with the closed form\n");
    if (r.reference_dof) {
      std::cout << "oracle: reference DOF " << *r.reference_dof
                << (*r.reference_agreement ? " reproduced\n" : " NOT reproduced\n");
    }
  }
  return run.finish();
}

// ---------------------------------------------------------------------------
// coarray

int cmd_coarray(const std::string& array_file, const Common& common) {
  Run run("coarray", common);
  const SensorArray s = load_array(array_file);
  run.params()["array"] = array_to_json(s);
  const CoarrayReport r = to_eca(s);
  run.write_json("coarray.json", report_to_json(r));
  std::cout << s.name() << ": |phi_u|=" << r.size_u << " Z=" << r.one_sided_z << " DOF=" << r.consecutive_lags()
            << " holes=" << r.holes.size() << "\n";
  return run.finish();
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsOpts {
  std::vector<std::string> arrays;
  std::string variants;
  std::string n_range;
  std::string source = "closed";
};

int cmd_metrics(const MetricsOpts& o, const Common& common) {
  Run run("metrics", common);
  CsvTable csv({"variant", "N", "Z", "k_tilde", "R_T", "L3", "within_bounds"});
  auto l3_text = [](const RedundancyReport& r) { return r.N >= 2 ? format_double(r.L3) : std::string("nan"); };

  for (const auto& file : o.arrays) {
    const SensorArray s = load_array(file);
    const RedundancyReport r = redundancy_toeca(s);
    csv.row({s.name(), std::to_string(r.N), std::to_string(r.Z), std::to_string(r.k_tilde),
             r.infinite ? std::string("inf") : format_double(r.R_T), l3_text(r), r.within_bounds ? "true" : "false"});
    if (!r.within_bounds && r.N >= 2) run.warn(s.name() + ": R_T does not exceed L3");
  }
  run.params()["arrays"] = o.arrays;

  if (!o.variants.empty()) {
    if (o.n_range.empty()) fail(ErrorKind::invalid_parameter, "--variant needs --n-range");
    if (o.source != "closed" && o.source != "brute") fail(ErrorKind::invalid_parameter, "--source must be closed or brute");
    const auto [lo, hi] = parse_range(o.n_range);
    run.params()["variants"] = o.variants;
    run.params()["n_range"] = {lo, hi};
    run.params()["source"] = o.source;
    for (Variant v : parse_variants(o.variants)) {
      const auto [low, high] = redundancy_interval(v);
      for (int n = lo; n <= hi; ++n) {
        if (o.source == "closed") {
          if (n < 2) {
            run.warn(std::string(to_string(v)) + " N=" + std::to_string(n) + " skipped: the closed form needs N >= 2");
            continue;
          }
          const double z = z_closed_form(v, n);
          const double rt = rt_closed_form(v, n);
          const double l3 = l3_bound(n);
          const std::int64_t kt = size_bounds(n).k_tilde;
          csv.row({std::string(to_string(v)), std::to_string(n), format_double(z), std::to_string(kt), format_double(rt),
                   format_double(l3), rt > l3 ? "true" : "false"});
          if (rt < low || rt > high) {
            run.warn(std::string(to_string(v)) + " N=" + std::to_string(n) + ": closed-form R_T " + format_double(rt) +
                     " outside [" + format_double(low) + ", " + format_double(high) + "]");
          }
        } else {
          if (n < minimum_sensors(v)) {
            run.warn(std::string(to_string(v)) + " N=" + std::to_string(n) + " skipped (minimum N=" +
                     std::to_string(minimum_sensors(v)) + ")");
            continue;
          }
          const ToSdaDesign d = build_to_sda(v, n);
          run.warn_all(d.warnings);
          const RedundancyReport r = redundancy_toeca(d.array);
          csv.row({std::string(to_string(v)), std::to_string(n), std::to_string(r.Z), std::to_string(r.k_tilde),
                   r.infinite ? std::string("inf") : format_double(r.R_T), l3_text(r),
                   r.within_bounds ? "true" : "false"});
        }
      }
    }
  }
  if (o.arrays.empty() && o.variants.empty()) fail(ErrorKind::invalid_parameter, "metrics needs --array or --variant");
  run.write("redundancy.csv", csv.str());
  std::cout << csv.str();
  return run.finish();
}

// ---------------------------------------------------------------------------
// leakage

struct LeakageOpts {
  std::vector<std::string> arrays;
  bool table = false;
  CouplingModel model;
};

int cmd_leakage(const LeakageOpts& o, const Common& common) {
  Run run("leakage", common);
  run.params()["arrays"] = o.arrays;
  run.params()["table"] = o.table;
  run.params()["coupling"] = coupling_to_json(o.model);
  CsvTable csv({"array", "config", "leakage"});
  for (const auto& file : o.arrays) {
    const SensorArray s = load_array(file);
    csv.row({s.name(), std::to_string(s.size()) + " sensors", format_double(coupling_leakage(s, o.model))});
  }
  if (o.table) {
    // Nine-sensor designs with a six-sensor generator, plus the TNA-II
    // generator offset that reproduces the reference leakage.
    std::vector<ToSdaDesign> designs;
    for (Variant v : all_variants) designs.push_back(build_to_sda_with_n1(v, 9, 6));
    designs.push_back(build_to_sda_with_n1(Variant::tna2, 9, 6, 1));
    for (const auto& d : designs) {
      run.warn_all(d.warnings);
      csv.row({std::string(display_name(d.params.variant)), config_label(d.params),
               format_double(coupling_leakage(d.array, o.model))});
    }
  }
  if (o.arrays.empty() && !o.table) fail(ErrorKind::invalid_parameter, "leakage needs --array or --table");
  run.write("leakage.csv", csv.str());
  std::cout << csv.str();
  return run.finish();
}

// ---------------------------------------------------------------------------
// simulate

SensorArray array_from_config(const nlohmann::json& cfg, const fs::path& base, std::vector<std::string>& warnings) {
  if (cfg.contains("array")) return array_from_json(cfg["array"]);
  if (cfg.contains("array_file")) {
    fs::path p = cfg["array_file"].get<std::string>();
    if (p.is_relative()) p = base / p;
    return load_array(p);
  }
  if (cfg.contains("design")) {
    const auto& d = cfg["design"];
    const Variant v = parse_variant(d.at("variant").get<std::string>());
    const int n = d.at("sensors").get<int>();
    std::optional<int> j;
    if (d.contains("J")) j = d["J"].get<int>();
    ToSdaDesign des = d.contains("n1") ? build_to_sda_with_n1(v, n, d["n1"].get<int>(), j) : build_to_sda(v, n);
    warnings.insert(warnings.end(), des.warnings.begin(), des.warnings.end());
    return des.array;
  }
  fail(ErrorKind::parse, "config needs one of array, array_file or design");
}

int cmd_simulate(const std::string& config_file, const Common& common) {
  Run run("simulate", common);
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(read_text(config_file));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, config_file + ": " + e.what());
  }

  std::vector<std::string> design_warnings;
  MonteCarloConfig mc;
  SensorArray array = [&] {
    try {
      return array_from_config(cfg, fs::path(config_file).parent_path(), design_warnings);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, std::string("design: ") + e.what());
    }
  }();
  run.warn_all(design_warnings);

  try {
    const auto& sc = cfg.at("scene");
    mc.scene.angles_deg = sc.value("angles_deg", std::vector<double>{});
    if (sc.contains("num_sources")) mc.scene.angles_deg = uniform_angles(sc["num_sources"].get<std::size_t>());
    mc.scene.snr_db = sc.value("snr_db", 0.0);
    mc.scene.snapshots = sc.value("snapshots", std::int64_t{1000});
    mc.scene.seed = cfg.value("seed", std::uint64_t{1});
    mc.trials = cfg.value("trials", std::size_t{1});
    if (cfg.contains("sweep")) {
      mc.sweep = parse_sweep_kind(cfg["sweep"].at("kind").get<std::string>());
      mc.values = cfg["sweep"].at("values").get<std::vector<double>>();
    } else {
      mc.sweep = SweepKind::snr;
      mc.values = {mc.scene.snr_db};
    }
    if (cfg.contains("coupling") && cfg["coupling"].value("enabled", true)) mc.coupling = coupling_from_json(cfg["coupling"]);
    if (cfg.contains("grid")) {
      mc.grid.min_deg = cfg["grid"].value("min_deg", mc.grid.min_deg);
      mc.grid.max_deg = cfg["grid"].value("max_deg", mc.grid.max_deg);
      mc.grid.step_deg = cfg["grid"].value("step_deg", mc.grid.step_deg);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, config_file + ": " + e.what());
  }
  const bool want_spectrum = cfg.value("spectrum", false);
  const bool want_per_trial = cfg.value("per_trial", false);
  mc.threads = common.threads;
  mc.progress = [](std::size_t done, std::size_t total) {
    std::cerr << "progress: " << done << "/" << total << " trials\n";
  };
  if (mc.scene.angles_deg.empty() && mc.sweep != SweepKind::num_sources) {
    fail(ErrorKind::invalid_parameter, "scene needs angles_deg or num_sources");
  }
  if (mc.scene.angles_deg.empty()) mc.scene.angles_deg = {0};

  const CoarrayReport report = to_eca(array);
  ordered_json& p = run.params();
  p["array"] = array_to_json(array);
  p["Z"] = report.one_sided_z;
  p["scene"] = {{"angles_deg", mc.scene.angles_deg}, {"snr_db", mc.scene.snr_db}, {"snapshots", mc.scene.snapshots},
                {"source_kind", "skewed_real"}};
  p["sweep"] = {{"kind", to_string(mc.sweep)}, {"values", mc.values}};
  p["trials"] = mc.trials;
  p["coupling"] = mc.coupling ? coupling_to_json(*mc.coupling) : ordered_json(nullptr);
  p["grid"] = {{"min_deg", mc.grid.min_deg}, {"max_deg", mc.grid.max_deg}, {"step_deg", mc.grid.step_deg}};
  p["spectrum"] = want_spectrum;
  p["per_trial"] = want_per_trial;
  run.set("seed", mc.scene.seed);

  const std::vector<RunStats> stats = monte_carlo(array, mc);
  bool failed = false;
  for (const auto& st : stats) {
    if (st.error) {
      failed = true;
      run.warn("sweep value " + format_double(st.sweep_value) + " aborted: " + *st.error);
    }
    if (st.padded_trials) {
      run.warn("sweep value " + format_double(st.sweep_value) + ": " + std::to_string(st.padded_trials) +
               " trial(s) had fewer spectral peaks than sources");
    }
  }
  run.write("rmse.csv", rmse_csv(stats));
  if (want_per_trial) run.write("per_trial.csv", per_trial_csv(stats));
  std::cout << rmse_csv(stats);

  if (want_spectrum) {
    SourceScene scene = scene_for(mc, mc.values.front());
    scene.seed = trial_seed(mc.scene.seed, 0);
    const EstimationResult r = run_trial(array, report, scene, mc.coupling, mc.grid, true);
    run.write("spectrum.csv", spectrum_csv(r.spectrum));
    run.set("spectrum_peaks_deg", r.estimated_angles);
    run.set("spectrum_padded", r.padded);
  }
  const int rc = run.finish();
  return failed ? exit_error : rc;
}

// ---------------------------------------------------------------------------
// sweep

int cmd_sweep(const std::string& variants, const std::string& n_range, const std::vector<std::string>& baselines,
              const Common& common) {
  Run run("sweep", common);
  const auto [lo, hi] = parse_range(n_range);
  run.params()["variants"] = variants;
  run.params()["n_range"] = {lo, hi};
  run.params()["baselines"] = baselines;
  run.params()["threads"] = common.threads;
  std::vector<SensorArray> base;
  for (const auto& f : baselines) base.push_back(load_array(f));
  const SweepTable t = dof_sweep(parse_variants(variants), lo, hi, base, common.threads);
  run.warn_all(t.warnings);

  CsvTable csv({"variant", "N", "N1", "N2", "M1", "M2", "J", "dof_closed", "dof_brute", "agreement"});
  auto opt = [](const auto& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& r : t.rows) {
    if (r.params) {
      const auto& p = *r.params;
      csv.row({r.label, std::to_string(r.N), std::to_string(p.N1), std::to_string(p.N2), std::to_string(p.M1),
               std::to_string(p.M2), opt(p.J), opt(r.dof_closed), std::to_string(r.dof_brute),
               *r.agreement ? "true" : "false"});
    } else {
      csv.row({r.label, std::to_string(r.N), "", "", "", "", "", "", std::to_string(r.dof_brute), ""});
    }
  }
  run.write("dof_sweep.csv", csv.str());
  std::cout << csv.str();
  return run.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Third-order sum-and-difference array toolkit"};
  app.set_version_flag("--version", std::string(TOSDA_VERSION));
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", common.out_dir, "directory for outputs")->capture_default_str();
    sub->add_option("--prefix", common.prefix, "file name prefix for outputs");
    sub->add_option("--threads", common.threads, "worker thread cap (default: TOSDA_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--strict", common.strict, "fail when any diagnostic is raised");
  };

  DesignOpts design;
  auto* design_cmd = app.add_subcommand("design", "build a TO-SDA or compose a GTOA");
  design_cmd->add_option("--variant", design.variant, "cna, scna or tna2");
  design_cmd->add_option("--sensors,-n", design.sensors, "total sensor count N");
  design_cmd->add_option("--n1", design.n1, "fix the generator size instead of optimizing it");
  design_cmd->add_option("--j", design.j, "TNA-II generator offset override");
  design_cmd->add_option("--generator", design.generator, "generator array JSON");
  design_cmd->add_option("--delta1", design.delta1, "first sensor of the sparse ULA");
  design_cmd->add_option("--delta2", design.delta2, "spacing of the sparse ULA");
  design_cmd->add_option("--n2", design.n2, "sensor count of the sparse ULA");
  design_cmd->add_flag("--oracle", design.oracle, "run the brute-force split search and report agreement");
  add_common(design_cmd);

  std::string coarray_file;
  auto* coarray_cmd = app.add_subcommand("coarray", "third-order exhaustive co-array of an array file");
  coarray_cmd->add_option("--array", coarray_file, "array JSON")->required();
  add_common(coarray_cmd);

  MetricsOpts metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "redundancy of array files or of the designs over N");
  metrics_cmd->add_option("--array", metrics.arrays, "array JSON (repeatable)");
  metrics_cmd->add_option("--variant", metrics.variants, "comma-separated variants or 'all'");
  metrics_cmd->add_option("--n-range", metrics.n_range, "sensor range a:b");
  metrics_cmd->add_option("--source", metrics.source, "closed (relaxed closed form) or brute (built designs)")
      ->capture_default_str();
  add_common(metrics_cmd);

  LeakageOpts leakage;
  auto* leakage_cmd = app.add_subcommand("leakage", "mutual coupling leakage");
  leakage_cmd->add_option("--array", leakage.arrays, "array JSON (repeatable)");
  leakage_cmd->add_flag("--table", leakage.table, "the three nine-sensor designs with N1=6");
  add_coupling_flags(leakage_cmd, leakage.model);
  add_common(leakage_cmd);

  std::string sim_config;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo DOA experiment from a JSON config");
  sim_cmd->add_option("--config", sim_config, "experiment JSON")->required();
  add_common(sim_cmd);

  std::string sweep_variants = "all";
  std::string sweep_range;
  std::vector<std::string> sweep_baselines;
  auto* sweep_cmd = app.add_subcommand("sweep", "closed-form vs brute-force DOF over N");
  sweep_cmd->add_option("--variant", sweep_variants, "comma-separated variants or 'all'")->capture_default_str();
  sweep_cmd->add_option("--n-range", sweep_range, "sensor range a:b")->required();
  sweep_cmd->add_option("--baseline", sweep_baselines, "baseline array JSON (repeatable)");
  add_common(sweep_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*design_cmd) return cmd_design(design, common);
    if (*coarray_cmd) return cmd_coarray(coarray_file, common);
    if (*metrics_cmd) return cmd_metrics(metrics, common);
    if (*leakage_cmd) return cmd_leakage(leakage, common);
    if (*sim_cmd) return cmd_simulate(sim_config, common);
    if (*sweep_cmd) return cmd_sweep(sweep_variants, sweep_range, sweep_baselines, common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_error;
  }
  return exit_error;
}
