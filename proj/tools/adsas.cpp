// adsas command-line front end: analyze, train, detect, bench, simulate.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "adsas/bench.hpp"
#include "adsas/config.hpp"
#include "adsas/dataset.hpp"
#include "adsas/detector.hpp"
#include "adsas/snapshot.hpp"
#include "adsas/spectral.hpp"

namespace fs = std::filesystem;
using namespace adsas;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kPartial = 3 };

nlohmann::json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) fail(Errc::parse_error, "cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, p.string() + ": " + e.what());
  }
}

/// Detector flags shared by train and bench. Resolution order: flag, then
/// config file, then built-in default.
struct DetectorFlags {
  std::string config_path;
  std::optional<double> epsilon;
  std::optional<std::size_t> undersample_factor, forecast_batch, residual_window, refit_every, seasonal_period;

  void add(CLI::App& app) {
    app.add_option("--config", config_path, "JSON detector config")->check(CLI::ExistingFile);
    app.add_option("--epsilon", epsilon, "Two-sided tail probability")->check(CLI::Range(1e-12, 0.5));
    app.add_option("--undersample-factor", undersample_factor, "Block size for undersampling (default auto)");
    app.add_option("--forecast-batch", forecast_batch, "Native points forecast per fit");
    app.add_option("--residual-window", residual_window, "Points in the rolling residual window");
    app.add_option("--refit-every", refit_every, "Points between refits");
    app.add_option("--seasonal-period", seasonal_period, "Force the seasonal period (native samples)");
  }

  DetectorConfig resolve(const nlohmann::json& from_file = nlohmann::json::object()) const {
    DetectorConfig cfg;
    apply_json(from_file, cfg);
    if (!config_path.empty()) apply_json(read_json_file(config_path), cfg);
    if (epsilon) cfg.epsilon = *epsilon;
    if (undersample_factor) cfg.undersample_factor = *undersample_factor;
    if (forecast_batch) cfg.forecast_batch = *forecast_batch;
    if (residual_window) cfg.residual_window = *residual_window;
    if (refit_every) cfg.refit_every = *refit_every;
    if (seasonal_period) cfg.seasonal_period = *seasonal_period;
    cfg.validate();
    return cfg;
  }
};

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) fail(Errc::parse_error, "cannot write " + path);
  return file;
}

int cmd_analyze(const std::string& csv, bool as_json) {
  const auto ds = load_dataset(csv);
  const auto& s = ds.series;
  const auto prof = analyze(s, ds.manifest.native_points_per_day);
  const auto factor = auto_undersample_factor(prof.seasonal_period, s.interval());
  nlohmann::json j{{"dataset", ds.manifest.name},
                   {"points", s.size()},
                   {"interval_seconds", s.interval()},
                   {"points_per_day", ds.manifest.native_points_per_day},
                   {"adf_statistic", prof.adf.statistic},
                   {"adf_p_value", prof.adf.p_value},
                   {"adf_lags", prof.adf.lags_used},
                   {"stationary", prof.is_stationary},
                   {"seasonal_period", prof.seasonal_period},
                   {"period_detected", prof.period_detected},
                   {"auto_undersample_factor", factor}};
  if (prof.peak) j["peak_power_ratio"] = prof.peak->power_ratio;
  if (as_json) {
    std::cout << j.dump(2) << '\n';
    return kOk;
  }
  for (auto it = j.begin(); it != j.end(); ++it) std::cout << it.key() << ": " << it.value().dump() << '\n';
  return kOk;
}

int cmd_train(const std::string& csv, const std::string& out, const DetectorFlags& flags) {
  const auto cfg = flags.resolve();
  const auto ds = load_dataset(csv);
  const auto det = Detector::train(ds.series, cfg);
  std::ofstream f;
  auto& os = open_out(out, f);
  save_detector(os, det);
  std::cerr << "trained on " << ds.series.size() << " points; period " << det.seasonal_period() << ", factor "
            << det.undersample_factor() << ", orders " << to_string(det.model().orders) << '\n'
            << "config " << to_json(cfg).dump() << '\n';
  return kOk;
}

int cmd_detect(const std::string& input, const std::string& model_path, std::optional<double> epsilon,
               const std::string& out, const std::string& save_path, bool skip_seen) {
  nlohmann::json snap;
  {
    std::ifstream in(model_path);
    if (!in) fail(Errc::parse_error, "cannot open " + model_path);
    try {
      in >> snap;
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::format_error, std::string("detector snapshot: ") + e.what());
    }
  }
  if (epsilon) snap.at("config")["epsilon"] = *epsilon;
  auto det = DetectorCodec::decode(snap);
  std::cerr << "config " << to_json(det.config()).dump() << '\n';

  std::ofstream f;
  auto& os = open_out(out, f);
  auto emit = [&](Timestamp t, double x) {
    if (skip_seen && t < det.next_time()) return;
    os << to_json_line(det.process_point(t, x)) << '\n';
  };

  if (input == "-") {
    // Live mode: one "timestamp,value" row per line, optional header.
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(std::cin, line)) {
      ++line_no;
      if (line_no == 1 && line.rfind("timestamp", 0) == 0) continue;
      Timestamp t;
      double x;
      if (!parse_csv_row(line, line_no, t, x)) continue;
      emit(t, x);
      os.flush();
    }
  } else {
    const auto raw = read_csv_file(input);
    const auto s = regularize(raw.times, raw.values);
    for (std::size_t i = 0; i < s.size(); ++i) emit(s.time_at(i), s[i]);
  }
  if (!save_path.empty()) {
    std::ofstream sf(save_path);
    if (!sf) fail(Errc::parse_error, "cannot write " + save_path);
    save_detector(sf, det);
  }
  return kOk;
}

struct BenchFlags {
  std::string manifest, table_csv, json_dir, plot_dir;
  std::optional<Duration> half_width, fp_gap;
  std::size_t workers = 0;
};

int cmd_bench(const BenchFlags& b, const DetectorFlags& flags) {
  const auto m = read_bench_manifest(b.manifest);
  const auto cfg = flags.resolve(m.detector);
  EvalConfig eval;
  apply_json(m.eval, eval);
  if (b.half_width) eval.half_width = *b.half_width;
  if (b.fp_gap) eval.fp_collapse_gap = *b.fp_gap;
  const auto rep = run_bench(m.entries, cfg, eval, b.workers, !b.plot_dir.empty());

  write_table_text(std::cout, rep);
  if (!b.table_csv.empty()) {
    std::ofstream f(b.table_csv);
    if (!f) fail(Errc::parse_error, "cannot write " + b.table_csv);
    write_table_csv(f, rep);
  }
  auto stem = [](const std::string& name) { return fs::path(name).stem().string(); };
  if (!b.json_dir.empty()) {
    fs::create_directories(b.json_dir);
    for (const auto& r : rep.rows) std::ofstream(fs::path(b.json_dir) / (stem(r.name) + ".json")) << to_json(r, cfg, eval).dump(2) << '\n';
  }
  if (!b.plot_dir.empty()) {
    fs::create_directories(b.plot_dir);
    for (const auto& r : rep.rows)
      if (r.ok) {
        std::ofstream f(fs::path(b.plot_dir) / (stem(r.name) + "_plot.csv"));
        write_plot_csv(f, r.verdicts);
      }
  }
  const auto failed = rep.failures();
  if (failed == 0) return kOk;
  for (const auto& r : rep.rows)
    if (!r.ok) std::cerr << "error: " << r.name << ": " << r.error << '\n';
  return failed == rep.rows.size() ? kData : kPartial;
}

int cmd_simulate(const std::string& spec_path, const std::string& out, const std::string& labels_out) {
  const auto spec = synthetic_spec_from_json(read_json_file(spec_path));
  const auto data = generate_synthetic(spec);
  std::ofstream f;
  auto& os = open_out(out, f);
  write_csv(os, data.series);
  if (!labels_out.empty()) {
    auto arr = nlohmann::json::array();
    for (Timestamp t : data.labels) arr.push_back(format_timestamp(t));
    nlohmann::json j;
    j[fs::path(out.empty() || out == "-" ? "synthetic.csv" : out).filename().string()] = arr;
    std::ofstream lf(labels_out);
    if (!lf) fail(Errc::parse_error, "cannot write " + labels_out);
    lf << j.dump(2) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seasonal-forecast anomaly detection for periodic time series"};
  app.require_subcommand(1);

  std::string csv, out, model, save, labels_out;
  bool as_json = false, skip_seen = false;
  std::optional<double> detect_eps;
  DetectorFlags train_flags, bench_flags;
  BenchFlags bench;

  auto* analyze_cmd = app.add_subcommand("analyze", "Stationarity and seasonal period of a series");
  analyze_cmd->add_option("csv", csv, "timestamp,value CSV")->required();
  analyze_cmd->add_flag("--json", as_json, "Print JSON");

  auto* train_cmd = app.add_subcommand("train", "Fit a detector on a history CSV");
  train_cmd->add_option("csv", csv, "timestamp,value CSV")->required();
  train_cmd->add_option("-o,--output", out, "Detector snapshot path")->required();
  train_flags.add(*train_cmd);

  auto* detect_cmd = app.add_subcommand("detect", "Stream points through a trained detector");
  detect_cmd->add_option("input", csv, "CSV path, or - for standard input")->required();
  detect_cmd->add_option("--model", model, "Detector snapshot from train")->required();
  detect_cmd->add_option("--epsilon", detect_eps, "Override the tail probability")->check(CLI::Range(1e-12, 0.5));
  detect_cmd->add_option("-o,--output", out, "Verdict JSON-lines path (default stdout)");
  detect_cmd->add_option("--save-model", save, "Write the updated detector state here");
  detect_cmd->add_flag("--skip-seen", skip_seen, "Ignore rows before the detector's next expected timestamp");

  auto* bench_cmd = app.add_subcommand("bench", "Run the window benchmark over a manifest");
  bench_cmd->add_option("manifest", bench.manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--csv", bench.table_csv, "Also write the table as CSV");
  bench_cmd->add_option("--json-dir", bench.json_dir, "Per-dataset JSON reports");
  bench_cmd->add_option("--plot-dir", bench.plot_dir, "Per-dataset observed/predicted/error/residual CSV");
  bench_cmd->add_option("--half-width", bench.half_width, "Anomaly window half width in seconds");
  bench_cmd->add_option("--fp-gap", bench.fp_gap, "Collapse outside alerts at most this many seconds apart");
  bench_cmd->add_option("--workers", bench.workers, "Parallel datasets (default: min(cores, 4))");
  bench_flags.add(*bench_cmd);

  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic series from a JSON spec");
  sim_cmd->add_option("spec", csv, "Synthetic spec JSON")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("-o,--output", out, "CSV path (default stdout)");
  sim_cmd->add_option("--labels", labels_out, "Write labels JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*analyze_cmd) return cmd_analyze(csv, as_json);
    if (*train_cmd) return cmd_train(csv, out, train_flags);
    if (*detect_cmd) return cmd_detect(csv, model, detect_eps, out, save, skip_seen);
    if (*bench_cmd) return cmd_bench(bench, bench_flags);
    if (*sim_cmd) return cmd_simulate(csv, out, labels_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == Errc::invalid_argument ? kUsage : kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
