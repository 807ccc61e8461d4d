// mapcache: working-set analysis, locality fitting and LRU emulation for
// map-cache (routing prefix) reference traces.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mapcache/attack_model.hpp"
#include "mapcache/emulator.hpp"
#include "mapcache/locality_model.hpp"
#include "mapcache/prefix_table.hpp"
#include "mapcache/report.hpp"
#include "mapcache/stationarity.hpp"
#include "mapcache/trace.hpp"
#include "mapcache/workingset.hpp"

namespace fs = std::filesystem;
using namespace mapcache;
using report::json;

namespace {

// ---- shared option groups ---------------------------------------------------

struct TraceArgs {
  std::string path;
  std::string format = "refstring";
  std::string table;
  std::string unmatched = "drop";
  bool no_filter = false;
};

void add_trace_options(CLI::App* cmd, TraceArgs& a) {
  cmd->add_option("--trace", a.path, "Reference trace (plain or .gz)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--format", a.format, "Trace format")
      ->check(CLI::IsMember({"refstring", "dst-csv"}))
      ->capture_default_str();
  cmd->add_option("--table", a.table, "Prefix table used to resolve dst-csv traces")->check(CLI::ExistingFile);
  cmd->add_option("--unmatched", a.unmatched, "Addresses with no covering prefix")
      ->check(CLI::IsMember({"drop", "special"}))
      ->capture_default_str();
  cmd->add_flag("--no-filter", a.no_filter, "Keep more-specific prefixes in the table");
}

json trace_config(const TraceArgs& a) {
  json j{{"trace", a.path}, {"format", a.format}};
  if (!a.table.empty()) {
    j["table"] = a.table;
    j["unmatched"] = a.unmatched;
    j["filter_more_specifics"] = !a.no_filter;
  }
  return j;
}

struct Loaded {
  ReferenceStream stream;
  std::optional<PrefixTable> table;
  std::size_t unmatched = 0;
};

PrefixTable load_table(const std::string& path, bool no_filter) {
  auto t = PrefixTable::load_file(path);
  return no_filter ? t : t.filter_more_specifics();
}

Loaded load_stream(const TraceArgs& a) {
  Loaded out;
  const auto format = parse_trace_format(a.format);
  const auto raw = open_trace(a.path, format);
  if (!a.table.empty()) out.table = load_table(a.table, a.no_filter);
  if (format == TraceFormat::DstCsv) {
    if (!out.table) throw Error("dst-csv traces need --table");
    auto r = resolve(raw, *out.table, a.unmatched == "special" ? Unmatched::CountAsSpecial : Unmatched::Drop);
    out.unmatched = r.unmatched;
    out.stream = std::move(r.stream);
  } else {
    out.stream = to_stream(raw, a.path);
  }
  if (out.stream.empty()) throw Error("trace '" + a.path + "' has no references");
  return out;
}

// Capacity selection shared by emulate and attack.
struct CapacityArgs {
  std::vector<std::size_t> list;
  std::string range;
  std::vector<double> normalized;
  std::size_t table_size = 0;
};

void add_capacity_options(CLI::App* cmd, CapacityArgs& c) {
  cmd->add_option("--capacities", c.list, "Cache sizes in entries")->delimiter(',');
  cmd->add_option("--range", c.range, "Log-spaced cache sizes lo:hi:count");
  cmd->add_option("--normalized", c.normalized, "Cache sizes as fractions of the table size")->delimiter(',');
  cmd->add_option("--table-size", c.table_size, "Table size for --normalized (default: universe size)");
}

struct Range {
  double lo = 0, hi = 0;
  std::size_t count = 0;
};

Range parse_range(const std::string& text) {
  Range r;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%zu%c", &r.lo, &r.hi, &r.count, &tail) != 3 || !(r.lo > 0) ||
      !(r.hi >= r.lo) || r.count < 1)
    throw Error("bad range '" + text + "' (expected lo:hi:count with 0 < lo <= hi)");
  return r;
}

std::vector<double> log_spaced(const Range& r) {
  if (r.count == 1) return {r.lo};
  std::vector<double> out(r.count);
  for (std::size_t i = 0; i < r.count; ++i)
    out[i] = std::exp(std::log(r.lo) + (std::log(r.hi) - std::log(r.lo)) * static_cast<double>(i) /
                                           static_cast<double>(r.count - 1));
  return out;
}

std::vector<std::size_t> resolve_capacities(const CapacityArgs& c, std::size_t default_table) {
  std::vector<std::size_t> caps = c.list;
  if (!c.range.empty()) {
    const auto r = parse_range(c.range);
    const auto lc = log_capacities(static_cast<std::size_t>(std::llround(r.lo)),
                                   static_cast<std::size_t>(std::llround(r.hi)), r.count);
    caps.insert(caps.end(), lc.begin(), lc.end());
  }
  const std::size_t table = c.table_size ? c.table_size : default_table;
  for (const double f : c.normalized) {
    if (!(f > 0)) throw Error("--normalized fractions must be > 0");
    if (table == 0) throw Error("--normalized needs --table-size");
    caps.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f * static_cast<double>(table)))));
  }
  if (caps.empty()) throw Error("no cache sizes given (use --capacities, --range or --normalized)");
  return caps;
}

// ---- output helpers ---------------------------------------------------------

void write_file(const std::string& path, const std::string& content) {
  if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
}

template <class F>
void write_with(const std::string& path, F&& body) {
  std::ostringstream ss;
  body(ss);
  write_file(path, ss.str());
}

void emit(const json& doc, const std::string& report_path) {
  const auto text = doc.dump(2) + "\n";
  if (report_path.empty())
    std::cout << text;
  else
    write_file(report_path, text);
}

PiecewiseLocality read_fit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open fit '" + path + "'");
  try {
    return report::fit_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error("fit '" + path + "' is not JSON: " + e.what());
  }
}

std::vector<report::MissPoint> read_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return report::read_miss_curve_csv(in);
}

std::vector<UnitId> iota_ids(std::size_t n) {
  std::vector<UnitId> v(n);
  std::iota(v.begin(), v.end(), UnitId{0});
  return v;
}

// ---- table ------------------------------------------------------------------

struct TableCmd {
  std::string input;
  std::string out;
  std::string report;
  bool no_filter = false;
  TraceArgs trace;
  std::vector<std::size_t> counts;
  std::vector<double> deltas;

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("table", "Load a prefix table, drop more-specifics, report sizes");
    c->add_option("input", input, "Prefix table (one a.b.c.d/len per line)")->check(CLI::ExistingFile);
    c->add_option("--out", out, "Write the filtered table here");
    c->add_option("--report", report, "Write the JSON report here instead of stdout");
    c->add_flag("--no-filter", no_filter, "Report the table without filtering");
    c->add_option("--trace", trace.path, "dst-csv trace whose visited prefixes give |Psi|")->check(CLI::ExistingFile);
    c->add_option("--unmatched", trace.unmatched, "Addresses with no covering prefix")
        ->check(CLI::IsMember({"drop", "special"}));
    c->add_option("--counts", counts, "Skip loading and report from BGP_RT,BGP_phi[,Psi]")->delimiter(',');
    c->add_option("--delta", deltas, "Attack overlaps for which to report |Omega|")->delimiter(',');
    c->callback([this] { run(); });
  }

  void run() {
    report::TableStats stats;
    json config{{"filter_more_specifics", !no_filter}};
    if (!counts.empty()) {
      if (!input.empty()) throw Error("table: give either an input file or --counts");
      if (counts.size() < 2 || counts.size() > 3) throw Error("table: --counts takes 2 or 3 values");
      if (counts[1] == 0 || counts[1] > counts[0]) throw Error("table: need 0 < BGP_phi <= BGP_RT");
      stats.raw_size = counts[0];
      stats.filtered_size = counts[1];
      if (counts.size() == 3) stats.visited = counts[2];
      config["counts"] = counts;
    } else {
      if (input.empty()) throw Error("table: missing input file");
      const auto raw = PrefixTable::load_file(input);
      const auto table = no_filter ? raw : raw.filter_more_specifics();
      stats.raw_size = raw.raw_size();
      stats.filtered_size = table.size();
      config["input"] = input;
      if (!trace.path.empty()) {
        const auto t = open_trace(trace.path, TraceFormat::DstCsv);
        const auto r = resolve(t, table, trace.unmatched == "special" ? Unmatched::CountAsSpecial : Unmatched::Drop);
        auto visited = visited_set(r.stream);
        std::erase_if(visited, [&](UnitId id) { return id >= table.size(); });
        stats.visited = visited.size();
        config["trace"] = trace.path;
        config["unmatched"] = r.unmatched;
      }
      if (!out.empty()) write_with(out, [&](std::ostream& o) { table.write(o); });
    }
    auto doc = report::envelope("table", std::nullopt, config);
    doc["stats"] = report::to_json(stats);
    if (!deltas.empty()) {
      if (!stats.visited) throw Error("table: --delta needs |Psi| (--trace or a third --counts value)");
      json omega = json::array();
      for (const double d : deltas)
        omega.push_back({{"delta", d}, {"omega_size", build_attack_size(stats.filtered_size, *stats.visited, d)}});
      doc["omega"] = omega;
    }
    emit(doc, report);
  }
};

// ---- gen --------------------------------------------------------------------

struct GenCmd {
  std::string model = "irm";
  IrmSpec a{.n_units = 1000, .zipf_exponent = 0.9, .length = 1000000, .seed = 1};
  IrmSpec b{.n_units = 1000, .zipf_exponent = 0.9, .length = 1000000, .seed = 2};
  bool shared = false;
  std::string out;
  std::string report;

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("gen", "Generate a synthetic reference string");
    c->add_option("--model", model, "irm or regime-switch")
        ->check(CLI::IsMember({"irm", "regime-switch"}))
        ->capture_default_str();
    c->add_option("--units", a.n_units, "Alphabet size")->capture_default_str();
    c->add_option("--exponent", a.zipf_exponent, "Zipf exponent")->capture_default_str();
    c->add_option("--length", a.length, "References")->capture_default_str();
    c->add_option("--seed", a.seed, "Generator seed")->capture_default_str();
    c->add_option("--units-b", b.n_units, "Second regime: alphabet size")->capture_default_str();
    c->add_option("--exponent-b", b.zipf_exponent, "Second regime: Zipf exponent")->capture_default_str();
    c->add_option("--length-b", b.length, "Second regime: references")->capture_default_str();
    c->add_option("--seed-b", b.seed, "Second regime: seed")->capture_default_str();
    c->add_flag("--shared", shared, "Second regime reuses the first regime's ids");
    c->add_option("--out", out, "Output refstring (default stdout)");
    c->add_option("--report", report, "Write a JSON summary here");
    c->callback([this] { run(); });
  }

  void run() {
    const auto s = model == "irm" ? gen_irm(a) : gen_regime_switch(a, b, !shared);
    if (out.empty())
      write_refstring(std::cout, s);
    else
      write_with(out, [&](std::ostream& o) { write_refstring(o, s); });
    if (!report.empty()) {
      json config{{"model", model},
                  {"units", a.n_units},
                  {"exponent", a.zipf_exponent},
                  {"length", a.length}};
      if (model != "irm")
        config.update({{"units_b", b.n_units},
                       {"exponent_b", b.zipf_exponent},
                       {"length_b", b.length},
                       {"seed_b", b.seed},
                       {"disjoint", !shared}});
      auto doc = report::envelope("gen", a.seed, config);
      doc["references"] = s.size();
      doc["alphabet_size"] = s.alphabet_size;
      doc["visited"] = visited_set(s).size();
      emit(doc, report);
    }
  }
};

// ---- analyze ----------------------------------------------------------------

struct AnalyzeCmd {
  TraceArgs trace;
  std::size_t curves = 48;
  std::string out_dir = "analysis";
  std::string report;
  bool skip_stationarity = false;
  std::optional<std::uint64_t> mc_seed;

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("analyze", "Working-set curves, average working set and stationarity");
    add_trace_options(c, trace);
    c->add_option("--curves", curves, "Working-set curves (evenly spaced starts)")->capture_default_str();
    c->add_option("--out-dir", out_dir, "Directory for CSV and JSON artifacts")->capture_default_str();
    c->add_option("--report", report, "Write the summary here instead of stdout");
    c->add_flag("--skip-stationarity", skip_stationarity, "Do not run the clustering and ADF tests");
    c->add_option("--mc-seed", mc_seed, "Seed for the Monte Carlo calibrations");
    c->callback([this] { run(); });
  }

  void run() {
    const auto loaded = load_stream(trace);
    const auto& s = loaded.stream;
    if (curves < 2) throw Error("analyze: --curves must be >= 2");
    const std::uint64_t spacing = s.size() / curves;
    if (spacing == 0) throw Error("analyze: trace shorter than the number of curves");
    const auto family = ws_curve_family(s, spacing, curves);
    const auto hist = reuse_histogram(s);
    const auto ws_hist = avg_ws_from_histogram(hist);
    const auto ws_curves = avg_ws_from_curves(family);

    fs::create_directories(out_dir);
    const auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
    write_with(path("ws_curves.csv"), [&](std::ostream& o) { report::write_curves_csv(o, family); });
    write_with(path("avg_ws.csv"), [&](std::ostream& o) { report::write_avg_ws_csv(o, ws_hist); });
    write_with(path("avg_ws_curves.csv"), [&](std::ostream& o) { report::write_avg_ws_csv(o, ws_curves); });

    StationarityConfig cfg;
    cfg.curve_count = curves;
    if (mc_seed) {
      cfg.cluster.seed = *mc_seed;
      cfg.adf.seed = mix_seed(*mc_seed, 2);
    }
    json config = trace_config(trace);
    config.update({{"curves", curves},
                   {"spacing", spacing},
                   {"cluster_seed", cfg.cluster.seed},
                   {"adf_seed", cfg.adf.seed},
                   {"out_dir", out_dir}});
    auto doc = report::envelope("analyze", cfg.cluster.seed, config);
    doc["references"] = s.size();
    doc["visited"] = hist.first_refs;
    if (loaded.table) doc["table_size"] = loaded.table->size();
    if (loaded.unmatched) doc["unmatched"] = loaded.unmatched;
    doc["artifacts"] = {"ws_curves.csv", "avg_ws.csv", "avg_ws_curves.csv"};
    if (!skip_stationarity) {
      const auto st = stationarity_report(s, family, cfg);
      auto full = report::envelope("analyze", cfg.cluster.seed, config);
      full["stationarity"] = report::to_json(st);
      write_file(path("stationarity.json"), full.dump(2) + "\n");
      doc["artifacts"].push_back("stationarity.json");
      doc["stationarity"] = {{"verdict", to_string(st.verdict)},
                             {"clustering", to_string(st.clustering.verdict)},
                             {"pass_fraction", st.clustering.pass_fraction},
                             {"dispersion_ok", st.clustering.dispersion_ok},
                             {"adf_t", st.adf.t_stat},
                             {"adf_critical_1pct", st.adf.critical_1pct}};
    }
    emit(doc, report);
  }
};

// ---- fit --------------------------------------------------------------------

struct FitCmd {
  std::string input;
  std::size_t segments = kDefaultSegments;
  std::optional<double> u_lo, u_hi;
  std::string out;

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("fit", "Fit a piecewise power law to an average working-set CSV");
    c->add_option("--avg-ws", input, "avg_ws.csv from analyze")->required()->check(CLI::ExistingFile);
    c->add_option("--segments,-k", segments, "Number of segments")->capture_default_str();
    c->add_option("--u-lo", u_lo, "Smallest window used in the fit");
    c->add_option("--u-hi", u_hi, "Largest window used in the fit");
    c->add_option("--out", out, "Write the fit JSON here instead of stdout");
    c->callback([this] { run(); });
  }

  void run() {
    std::ifstream in(input);
    if (!in) throw Error("cannot open '" + input + "'");
    const auto ws = report::read_avg_ws_csv(in);
    const auto fit = fit_piecewise(ws, segments, FitOptions{u_lo, u_hi});
    json config{{"avg_ws", input}, {"segments", segments}};
    if (u_lo) config["u_lo"] = *u_lo;
    if (u_hi) config["u_hi"] = *u_hi;
    auto doc = report::envelope("fit", std::nullopt, config);
    doc["fit"] = report::to_json(fit);
    emit(doc, out);
  }
};

// ---- predict ----------------------------------------------------------------

struct PredictCmd {
  std::string fit_path;
  std::vector<double> sizes;
  std::string range;
  std::vector<double> normalized;
  std::size_t table_size = 0;
  std::optional<double> rho;
  double delta = 0.0;
  std::optional<std::uint64_t> omega;
  std::string out, svg, report;

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("predict", "Miss rate predicted by a fit for given cache sizes");
    c->add_option("--fit", fit_path, "Fit JSON")->required()->check(CLI::ExistingFile);
    c->add_option("--sizes", sizes, "Cache sizes in entries")->delimiter(',');
    c->add_option("--range", range, "Log-spaced cache sizes lo:hi:count");
    c->add_option("--normalized", normalized, "Cache sizes as fractions of --table-size")->delimiter(',');
    c->add_option("--table-size", table_size, "|BGP_phi| for --normalized and the attack universe");
    c->add_option("--rho", rho, "Predict under a scanning attack of this relative intensity");
    c->add_option("--delta", delta, "Attack overlap with the visited set")->capture_default_str();
    c->add_option("--omega", omega, "Attack set size |Omega| (default: --table-size)");
    c->add_option("--out", out, "Write cache_size,miss_rate CSV here");
    c->add_option("--svg", svg, "Write an SVG chart here");
    c->add_option("--report", report, "Write the JSON report here instead of stdout");
    c->callback([this] { run(); });
  }

  void run() {
    const auto fit = read_fit(fit_path);
    std::vector<double> want = sizes;
    if (!range.empty()) {
      const auto r = log_spaced(parse_range(range));
      want.insert(want.end(), r.begin(), r.end());
    }
    for (const double f : normalized) {
      if (table_size == 0) throw Error("predict: --normalized needs --table-size");
      want.push_back(f * static_cast<double>(table_size));
    }
    if (want.empty()) throw Error("predict: no cache sizes given (use --sizes, --range or --normalized)");

    std::optional<AttackSpec> spec;
    if (rho) {
      const std::uint64_t o = omega ? *omega : table_size;
      if (o == 0) throw Error("predict: attack needs --omega or --table-size");
      spec = AttackSpec{.rho = *rho, .delta = delta, .omega_size = o};
      spec->validate();
    }
    std::vector<report::MissPoint> points;
    for (const double c : want)
      points.push_back({c, spec ? attack_miss_vs_size(fit, *spec, c) : fit.eval_m_s(c)});

    if (!out.empty()) write_with(out, [&](std::ostream& o) { report::write_miss_curve_csv(o, points); });
    if (!svg.empty()) {
      const std::vector<report::Series> series{{spec ? "model (attack)" : "model", points}};
      write_with(svg, [&](std::ostream& o) { report::write_svg(o, series, {.title = "Predicted miss rate"}); });
    }
    json config{{"fit", fit_path}};
    if (table_size) config["table_size"] = table_size;
    if (spec) config["attack"] = report::to_json(*spec);
    auto doc = report::envelope("predict", std::nullopt, config);
    json rows = json::array();
    for (const auto& p : points) {
      json row{{"cache_size", p.cache_size}, {"miss_rate", p.miss_rate}};
      if (table_size) row["normalized_size"] = p.cache_size / static_cast<double>(table_size);
      rows.push_back(row);
    }
    doc["predictions"] = rows;
    emit(doc, report);
  }
};

// ---- emulate ----------------------------------------------------------------

struct EmulateCmd {
  TraceArgs trace;
  CapacityArgs caps;
  std::size_t instant_window = kDefaultInstantWindow;
  std::string out, instant_out, svg, report;

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("emulate", "Replay a trace through LRU caches");
    add_trace_options(c, trace);
    add_capacity_options(c, caps);
    c->add_option("--instant-window", instant_window, "References per instantaneous miss-rate window")
        ->capture_default_str();
    c->add_option("--out", out, "Write the emulation CSV here");
    c->add_option("--instant-out", instant_out, "Write per-window miss rates here");
    c->add_option("--svg", svg, "Write an SVG chart here");
    c->add_option("--report", report, "Write the JSON report here instead of stdout");
    c->callback([this] { run(); });
  }

  void run() {
    const auto loaded = load_stream(trace);
    const std::size_t table = loaded.table ? loaded.table->size() : loaded.stream.alphabet_size;
    const auto capacities = resolve_capacities(caps, table);
    RunOptions opt;
    opt.instant_window = instant_window;
    opt.table_size = caps.table_size ? caps.table_size : table;
    const auto reports = sweep(loaded.stream, capacities, opt);

    if (!out.empty()) write_with(out, [&](std::ostream& o) { report::write_emulation_csv(o, reports); });
    if (!instant_out.empty()) write_with(instant_out, [&](std::ostream& o) { report::write_instant_csv(o, reports); });
    if (!svg.empty()) {
      std::vector<report::MissPoint> pts;
      for (const auto& r : reports)
        pts.push_back({static_cast<double>(r.capacity), r.miss_rate_warm.value_or(r.miss_rate_raw)});
      const std::vector<report::Series> series{{"LRU", pts}};
      write_with(svg, [&](std::ostream& o) { report::write_svg(o, series, {.title = "Emulated miss rate"}); });
    }
    json config = trace_config(trace);
    config.update({{"capacities", capacities}, {"table_size", *opt.table_size}, {"instant_window", instant_window}});
    auto doc = report::envelope("emulate", std::nullopt, config);
    doc["references"] = loaded.stream.size();
    json rows = json::array();
    for (const auto& r : reports) rows.push_back(report::to_json(r));
    doc["results"] = rows;
    emit(doc, report);
  }
};

// ---- attack -----------------------------------------------------------------

struct AttackCmd {
  TraceArgs trace;
  CapacityArgs caps;
  double rho = 0.1;
  double delta = 1.0;
  std::uint64_t seed = 1;
  bool reshuffle = false;
  std::size_t universe = 0;
  std::string fit_path;
  double threshold = 3.0;
  std::string out, emit_trace, svg, report;

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("attack", "Inject a scanning attack into a trace and emulate LRU");
    add_trace_options(c, trace);
    add_capacity_options(c, caps);
    c->add_option("--rho", rho, "Attack packets per legitimate packet")->capture_default_str();
    c->add_option("--delta", delta, "Overlap of the attack set with the visited set")->capture_default_str();
    c->add_option("--seed", seed, "Seed for the attack set and its order")->capture_default_str();
    c->add_flag("--reshuffle", reshuffle, "Draw a fresh order for every scan cycle");
    c->add_option("--universe", universe, "Universe size for refstring traces (default: alphabet size)");
    c->add_option("--fit", fit_path, "Fit of the legitimate trace; adds model columns and anomaly flags")
        ->check(CLI::ExistingFile);
    c->add_option("--threshold", threshold, "Anomaly factor over the predicted miss rate")->capture_default_str();
    c->add_option("--out", out, "Write the result CSV here");
    c->add_option("--emit-trace", emit_trace, "Write the attacked refstring here");
    c->add_option("--svg", svg, "Write an SVG chart here");
    c->add_option("--report", report, "Write the JSON report here instead of stdout");
    c->callback([this] { run(); });
  }

  void run() {
    const auto loaded = load_stream(trace);
    const std::size_t n = loaded.table ? loaded.table->size() : (universe ? universe : loaded.stream.alphabet_size);
    if (loaded.table && universe) throw Error("attack: --universe is implied by --table");
    const auto ids = iota_ids(n);
    auto psi = visited_set(loaded.stream);
    std::erase_if(psi, [&](UnitId id) { return id >= n; });
    const auto omega = build_attack_size(n, psi.size(), delta);
    auto seq = build_attack_stream(omega, seed, ids, psi, delta, reshuffle);
    const auto attacked = inject_attack(loaded.stream, seq, rho);

    const auto capacities = resolve_capacities(caps, n);
    RunOptions opt;
    opt.table_size = caps.table_size ? caps.table_size : n;
    const auto reports = sweep(attacked, capacities, opt);

    std::optional<PiecewiseLocality> fit;
    if (!fit_path.empty()) fit = read_fit(fit_path);
    const AttackSpec spec{.rho = rho, .delta = delta, .omega_size = omega};

    json rows = json::array();
    std::ostringstream csv;
    csv << "capacity,normalized_size,miss_rate_warm,legit_misses,attack_misses,model_miss_rate,legit_model_miss_rate,"
           "anomaly\n";
    std::vector<report::MissPoint> emu_pts, model_pts;
    for (const auto& r : reports) {
      auto row = report::to_json(r);
      const double observed = r.miss_rate_warm.value_or(r.miss_rate_raw);
      std::string model_cell, legit_cell, anomaly_cell;
      if (fit) {
        const double c = static_cast<double>(r.capacity);
        try {
          const double m = attack_miss_vs_size(*fit, spec, c);
          row["model_miss_rate"] = m;
          model_cell = json(m).dump();
          model_pts.push_back({c, m});
        } catch (const DomainError& e) {
          row["model_miss_rate"] = nullptr;
          row["model_note"] = e.what();
        }
        try {
          const double legit = fit->eval_m_s(c);
          const auto a = detect_anomaly(*fit, c, observed, threshold);
          row["legit_model_miss_rate"] = legit;
          row["anomaly"] = to_string(a);
          legit_cell = json(legit).dump();
          anomaly_cell = std::string(to_string(a));
        } catch (const DomainError& e) {
          row["legit_model_miss_rate"] = nullptr;
          row["anomaly"] = nullptr;
          row["anomaly_note"] = e.what();
        }
      }
      emu_pts.push_back({static_cast<double>(r.capacity), observed});
      csv << r.capacity << ',' << (r.normalized_size ? json(*r.normalized_size).dump() : "") << ','
          << (r.miss_rate_warm ? json(*r.miss_rate_warm).dump() : "") << ',' << *r.legit_misses << ','
          << *r.attack_misses << ',' << model_cell << ',' << legit_cell << ',' << anomaly_cell << '\n';
      rows.push_back(row);
    }
    if (!out.empty()) write_file(out, csv.str());
    if (!emit_trace.empty()) write_with(emit_trace, [&](std::ostream& o) { write_refstring(o, attacked); });
    if (!svg.empty()) {
      std::vector<report::Series> series{{"LRU under attack", emu_pts}};
      if (!model_pts.empty()) series.push_back({"model", model_pts});
      write_with(svg, [&](std::ostream& o) { report::write_svg(o, series, {.title = "Miss rate under attack"}); });
    }

    json config = trace_config(trace);
    config.update({{"universe", n}, {"capacities", capacities}, {"reshuffle", reshuffle}, {"threshold", threshold}});
    if (fit) config["fit"] = fit_path;
    auto doc = report::envelope("attack", seed, config);
    doc["attack"] = report::to_json(spec);
    doc["visited"] = psi.size();
    doc["references"] = {{"legit", loaded.stream.size()}, {"attack", attacked.size() - loaded.stream.size()}};
    doc["results"] = rows;
    emit(doc, report);
  }
};

// ---- compare ----------------------------------------------------------------

struct CompareCmd {
  std::string model, emulated, svg, report, title = "Model vs emulation";

  void setup(CLI::App& app) {
    auto* c = app.add_subcommand("compare", "Join a model curve and an emulated curve on cache size");
    c->add_option("--model", model, "cache_size,miss_rate CSV (from predict)")->required()->check(CLI::ExistingFile);
    c->add_option("--emulated", emulated, "Emulation CSV or cache_size,miss_rate CSV")
        ->required()
        ->check(CLI::ExistingFile);
    c->add_option("--svg", svg, "Write both curves as an SVG chart");
    c->add_option("--title", title, "Chart title")->capture_default_str();
    c->add_option("--report", report, "Write the JSON report here instead of stdout");
    c->callback([this] { run(); });
  }

  void run() {
    const auto a = read_curve(model);
    const auto b = read_curve(emulated);
    const auto r = report::compare_curves(a, b);
    if (!svg.empty()) {
      const std::vector<report::Series> series{{"model", a}, {"emulated", b}};
      write_with(svg, [&](std::ostream& o) { report::write_svg(o, series, {.title = title}); });
    }
    auto doc = report::envelope("compare", std::nullopt, {{"model", model}, {"emulated", emulated}});
    doc["joined"] = r.joined;
    doc["max_abs_error"] = r.max_abs_error;
    doc["mean_abs_error"] = r.mean_abs_error;
    doc["worst_cache_size"] = r.worst_cache_size;
    emit(doc, report);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Map-cache locality analysis and LRU emulation", "mapcache"};
  app.set_version_flag("--version", MAPCACHE_VERSION);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  TableCmd table;
  GenCmd gen;
  AnalyzeCmd analyze;
  FitCmd fit;
  PredictCmd predict;
  EmulateCmd emulate;
  AttackCmd attack;
  CompareCmd compare;
  table.setup(app);
  gen.setup(app);
  analyze.setup(app);
  fit.setup(app);
  predict.setup(app);
  emulate.setup(app);
  attack.setup(app);
  compare.setup(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const mapcache::Error& e) {
    std::cerr << "mapcache: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "mapcache: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
