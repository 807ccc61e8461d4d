#include "mapcache/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace mapcache::report {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string chomp(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

double to_double(const std::string& cell, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw ParseError(line, "trailing characters in '" + cell + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ParseError(line, "not a number: '" + cell + "'");
  }
}

// Reads a header line and maps column names to indices.
std::map<std::string, std::size_t> read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("CSV input is empty");
  std::map<std::string, std::size_t> cols;
  const auto names = split_csv(chomp(line));
  for (std::size_t i = 0; i < names.size(); ++i) cols[names[i]] = i;
  return cols;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

json envelope(const std::string& command, std::optional<std::uint64_t> seed, json config) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["version"] = MAPCACHE_VERSION;
  j["command"] = command;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["config"] = std::move(config);
  return j;
}

void write_curves_csv(std::ostream& out, std::span<const WorkingSetCurve> curves) {
  out << "curve,start_index,T,w\n";
  for (std::size_t c = 0; c < curves.size(); ++c)
    for (const auto& s : curves[c].samples)
      out << c << ',' << curves[c].start_index << ',' << s.window << ',' << s.distinct << '\n';
}

void write_avg_ws_csv(std::ostream& out, const AvgWorkingSet& ws) {
  out << "u,s,std,m\n";
  for (std::size_t i = 0; i < ws.size(); ++i) {
    out << ws.grid[i] << ',' << num(ws.s[i]) << ',';
    if (!ws.stddev.empty()) out << num(ws.stddev[i]);
    out << ',' << num(ws.m[i]) << '\n';
  }
}

AvgWorkingSet read_avg_ws_csv(std::istream& in) {
  auto cols = read_header(in);
  if (!cols.count("u") || !cols.count("s")) throw ParseError(1, "expected columns u,s[,std,m]");
  AvgWorkingSet ws;
  bool have_std = cols.count("std") > 0;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() < cols.size()) throw ParseError(lineno, "expected " + std::to_string(cols.size()) + " fields");
    const double u = to_double(cells[cols["u"]], lineno);
    if (u < 1.0 || u != std::floor(u)) throw ParseError(lineno, "u must be a positive integer");
    if (!ws.grid.empty() && static_cast<std::uint64_t>(u) <= ws.grid.back())
      throw ParseError(lineno, "u must be strictly increasing");
    ws.grid.push_back(static_cast<std::uint64_t>(u));
    ws.s.push_back(to_double(cells[cols["s"]], lineno));
    if (have_std) {
      const auto& cell = cells[cols["std"]];
      if (cell.empty()) have_std = false;
      else ws.stddev.push_back(to_double(cell, lineno));
    }
    ws.m.push_back(cols.count("m") ? to_double(cells[cols["m"]], lineno) : 0.0);
  }
  if (!have_std) ws.stddev.clear();
  if (ws.grid.empty()) throw Error("CSV input has no rows");
  return ws;
}

void write_emulation_csv(std::ostream& out, std::span<const EmulationReport> reports) {
  out << "capacity,normalized_size,misses,miss_rate_raw,miss_rate_warm\n";
  for (const auto& r : reports) {
    out << r.capacity << ',' << (r.normalized_size ? num(*r.normalized_size) : "") << ',' << r.misses << ','
        << num(r.miss_rate_raw) << ',' << (r.miss_rate_warm ? num(*r.miss_rate_warm) : "") << '\n';
  }
}

void write_instant_csv(std::ostream& out, std::span<const EmulationReport> reports) {
  out << "capacity,window_index,miss_rate\n";
  for (const auto& r : reports)
    for (const auto& w : r.instantaneous) out << r.capacity << ',' << w.window_index << ',' << num(w.miss_rate) << '\n';
}

void write_miss_curve_csv(std::ostream& out, std::span<const MissPoint> points) {
  out << "cache_size,miss_rate\n";
  for (const auto& p : points) out << num(p.cache_size) << ',' << num(p.miss_rate) << '\n';
}

std::vector<MissPoint> read_miss_curve_csv(std::istream& in) {
  auto cols = read_header(in);
  const bool emulation = cols.count("capacity") > 0;
  if (!emulation && !(cols.count("cache_size") && cols.count("miss_rate")))
    throw ParseError(1, "expected columns cache_size,miss_rate or an emulation report");
  std::vector<MissPoint> out;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() < cols.size()) throw ParseError(lineno, "expected " + std::to_string(cols.size()) + " fields");
    MissPoint p;
    if (emulation) {
      p.cache_size = to_double(cells[cols["capacity"]], lineno);
      const auto& warm = cells[cols["miss_rate_warm"]];
      p.miss_rate = warm.empty() ? to_double(cells[cols["miss_rate_raw"]], lineno) : to_double(warm, lineno);
    } else {
      p.cache_size = to_double(cells[cols["cache_size"]], lineno);
      p.miss_rate = to_double(cells[cols["miss_rate"]], lineno);
    }
    out.push_back(p);
  }
  return out;
}

json to_json(const PiecewiseLocality& fit) {
  json segs = json::array();
  for (const auto& s : fit.segments())
    segs.push_back({{"u_lo", s.u_lo}, {"u_hi", s.u_hi}, {"alpha", s.alpha}, {"beta", s.beta},
                    {"s_lo", s.s_lo()}, {"s_hi", s.s_hi()}});
  json knees = json::array();
  for (std::size_t i = 0; i + 1 < fit.segments().size(); ++i) knees.push_back(fit.segments()[i].s_hi());
  const auto& f = fit.flags();
  return {{"segments", segs},
          {"s_knees", knees},
          {"u_range", {fit.u_min(), fit.u_max()}},
          {"s_range", {fit.s_min(), fit.s_max()}},
          {"residual", fit.residual()},
          {"flags",
           {{"alpha_clamped", f.alpha_clamped},
            {"alpha_not_nonincreasing", f.alpha_not_nonincreasing},
            {"beta_not_nondecreasing", f.beta_not_nondecreasing}}}};
}

PiecewiseLocality fit_from_json(const json& j) {
  const json& body = j.contains("fit") ? j.at("fit") : j;
  try {
    std::vector<Segment> segs;
    for (const auto& s : body.at("segments"))
      segs.push_back(Segment{s.at("u_lo").get<double>(), s.at("u_hi").get<double>(), s.at("alpha").get<double>(),
                             s.at("beta").get<double>()});
    FitFlags flags;
    if (body.contains("flags")) {
      const auto& f = body.at("flags");
      flags.alpha_clamped = f.value("alpha_clamped", false);
      flags.alpha_not_nonincreasing = f.value("alpha_not_nonincreasing", false);
      flags.beta_not_nondecreasing = f.value("beta_not_nondecreasing", false);
    }
    return PiecewiseLocality(std::move(segs), body.value("residual", 0.0), flags);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed fit document: ") + e.what());
  }
}

json to_json(const StationarityReport& r) {
  json windows = json::array();
  for (const auto& p : r.clustering.per_window)
    windows.push_back({{"T", p.window},
                       {"curves", p.curves},
                       {"mean", p.mean},
                       {"std", p.stddev},
                       {"skewness", p.skewness},
                       {"excess_kurtosis", p.excess_kurtosis},
                       {"normality_stat", p.normality_stat},
                       {"threshold", p.threshold},
                       {"pass", p.pass}});
  return {{"verdict", to_string(r.verdict)},
          {"curve_spacing", r.spacing},
          {"clustering",
           {{"verdict", to_string(r.clustering.verdict)},
            {"pass_fraction", r.clustering.pass_fraction},
            {"dispersion_ok", r.clustering.dispersion_ok},
            {"per_T", windows}}},
          {"adf",
           {{"series_len", r.adf.series_len},
            {"lag_order", r.adf.lag_order},
            {"t_stat", r.adf.t_stat},
            {"critical_1pct", r.adf.critical_1pct},
            {"reject_unit_root", r.adf.reject_unit_root}}}};
}

json to_json(const AttackSpec& spec) {
  return {{"rho", spec.rho},
          {"delta", spec.delta},
          {"omega_size", spec.omega_size},
          {"tau", spec.tau()},
          {"u_k_legit", spec.u_k_legit()},
          {"u_k_total", spec.u_k_total()}};
}

json to_json(std::span<const AttackPoint> curve) {
  json out = json::array();
  for (const auto& p : curve) out.push_back({{"u", p.u_total}, {"cache_size", p.cache_size}, {"miss_rate", p.miss_rate}});
  return out;
}

json to_json(const EmulationReport& r) {
  json j = {{"capacity", r.capacity},
            {"normalized_size", r.normalized_size ? json(*r.normalized_size) : json(nullptr)},
            {"total_refs", r.total_refs},
            {"misses", r.misses},
            {"evictions", r.evictions},
            {"miss_rate_raw", r.miss_rate_raw},
            {"fill_index", r.fill_index ? json(*r.fill_index) : json(nullptr)},
            {"miss_rate_warm", r.miss_rate_warm ? json(*r.miss_rate_warm) : json(nullptr)}};
  if (r.legit_misses) j["per_class"] = {{"legit_misses", *r.legit_misses}, {"attack_misses", *r.attack_misses}};
  return j;
}

double truncate_ratio(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // Values stored just below a decimal (0.65 as 0.64999...) truncate to that decimal.
  return std::trunc(value * scale * (1.0 + 1e-12)) / scale;
}

std::string format_truncated(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, truncate_ratio(value, decimals));
  return buf;
}

json to_json(const TableStats& stats) {
  json j = {{"BGP_RT", stats.raw_size}, {"BGP_phi", stats.filtered_size}};
  if (stats.visited) {
    const double ratio = static_cast<double>(*stats.visited) / static_cast<double>(stats.filtered_size);
    j["Psi"] = *stats.visited;
    j["Psi_over_BGP_phi"] = format_truncated(ratio);
    j["Psi_over_BGP_phi_exact"] = ratio;
  }
  return j;
}

CompareResult compare_curves(std::span<const MissPoint> a, std::span<const MissPoint> b) {
  std::map<long long, double> left;
  for (const auto& p : a) left[std::llround(p.cache_size)] = p.miss_rate;
  std::map<long long, double> right;
  for (const auto& p : b) right[std::llround(p.cache_size)] = p.miss_rate;
  CompareResult r;
  double sum = 0.0;
  for (const auto& [key, mr] : left) {
    const auto it = right.find(key);
    if (it == right.end()) continue;
    const double err = std::abs(mr - it->second);
    ++r.joined;
    sum += err;
    if (err > r.max_abs_error || r.joined == 1) {
      r.max_abs_error = err;
      r.worst_cache_size = static_cast<double>(key);
    }
  }
  if (r.joined == 0) throw Error("compare: no common cache sizes between the two curves");
  r.mean_abs_error = sum / static_cast<double>(r.joined);
  return r;
}

void write_svg(std::ostream& out, std::span<const Series> series, const ChartOptions& opt) {
  constexpr double W = 720, H = 440, L = 70, R = 160, T = 40, B = 50;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  auto tx = [&](double x) { return opt.log_x ? std::log10(x) : x; };
  auto ty = [&](double y) { return opt.log_y ? std::log10(y) : y; };
  for (const auto& s : series)
    for (const auto& p : s.points) {
      if ((opt.log_x && p.cache_size <= 0) || (opt.log_y && p.miss_rate <= 0)) continue;
      x0 = std::min(x0, tx(p.cache_size));
      x1 = std::max(x1, tx(p.cache_size));
      y0 = std::min(y0, ty(p.miss_rate));
      y1 = std::max(y1, ty(p.miss_rate));
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  if (!opt.log_y) y0 = std::min(y0, 0.0);
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(opt.title)
      << "</text>\n";
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    const double sx = L + (W - L - R) * i / 4.0, sy = H - B - (H - T - B) * i / 4.0;
    out << "<text x=\"" << sx << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
        << num(std::round((opt.log_x ? std::pow(10.0, fx) : fx) * 1000) / 1000) << "</text>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">"
        << num(std::round((opt.log_y ? std::pow(10.0, fy) : fy) * 1e5) / 1e5) << "</text>\n";
  }
  out << "<text x=\"" << L + (W - L - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
      << xml_escape(opt.x_label) << "</text>\n";
  out << "<text transform=\"translate(16," << T + (H - T - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << xml_escape(opt.y_label) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : series[i].points) {
      if ((opt.log_x && p.cache_size <= 0) || (opt.log_y && p.miss_rate <= 0)) continue;
      out << num(std::round(px(p.cache_size) * 100) / 100) << ',' << num(std::round(py(p.miss_rate) * 100) / 100) << ' ';
    }
    out << "\"/>\n";
    const double ly = T + 14 + 18.0 * static_cast<double>(i);
    out << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - R + 34 << "\" y=\"" << ly + 4 << "\">" << xml_escape(series[i].name) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace mapcache::report
