#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mapcache/attack_model.hpp"
#include "mapcache/emulator.hpp"
#include "mapcache/locality_model.hpp"
#include "mapcache/stationarity.hpp"
#include "mapcache/workingset.hpp"

namespace mapcache::report {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Common header of every JSON document: schema_version, version, command, seed, config.
json envelope(const std::string& command, std::optional<std::uint64_t> seed, json config);

// CSV ------------------------------------------------------------------------

void write_curves_csv(std::ostream& out, std::span<const WorkingSetCurve> curves);
void write_avg_ws_csv(std::ostream& out, const AvgWorkingSet& ws);
/// Reads `u,s,std,m` (std may be empty). Throws ParseError on bad rows.
AvgWorkingSet read_avg_ws_csv(std::istream& in);

void write_emulation_csv(std::ostream& out, std::span<const EmulationReport> reports);
void write_instant_csv(std::ostream& out, std::span<const EmulationReport> reports);

struct MissPoint {
  double cache_size = 0.0;
  double miss_rate = 0.0;
};
void write_miss_curve_csv(std::ostream& out, std::span<const MissPoint> points);
/// Accepts `cache_size,miss_rate` files and emulation CSVs (capacity with
/// the warm miss rate, falling back to raw when the cache never filled).
std::vector<MissPoint> read_miss_curve_csv(std::istream& in);

// JSON -----------------------------------------------------------------------

json to_json(const PiecewiseLocality& fit);
PiecewiseLocality fit_from_json(const json& j);
json to_json(const StationarityReport& r);
json to_json(const AttackSpec& spec);
json to_json(std::span<const AttackPoint> curve);
json to_json(const EmulationReport& r);

// Arithmetic -----------------------------------------------------------------

/// Truncates toward zero at `decimals` places, as ratio columns are usually printed.
double truncate_ratio(double value, int decimals = 2);
/// Same, formatted with exactly `decimals` places.
std::string format_truncated(double value, int decimals = 2);

struct TableStats {
  std::size_t raw_size = 0;
  std::size_t filtered_size = 0;
  std::optional<std::size_t> visited;
};
json to_json(const TableStats& stats);

struct CompareResult {
  std::size_t joined = 0;
  double max_abs_error = 0.0;
  double mean_abs_error = 0.0;
  double worst_cache_size = 0.0;
};

/// Joins two miss curves on integer cache size (rounded) and reports the
/// absolute miss-rate differences. Swapping the arguments gives the same
/// result. Throws Error if nothing joins.
CompareResult compare_curves(std::span<const MissPoint> a, std::span<const MissPoint> b);

// SVG ------------------------------------------------------------------------

struct Series {
  std::string name;
  std::vector<MissPoint> points;
};

struct ChartOptions {
  std::string title{};
  std::string x_label = "cache size";
  std::string y_label = "miss rate";
  bool log_x = true;
  bool log_y = false;
};

/// Self-contained SVG line chart of one or more series.
void write_svg(std::ostream& out, std::span<const Series> series, const ChartOptions& options);

}  // namespace mapcache::report
