#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ras/energy.hpp"
#include "ras/flocking.hpp"
#include "ras/lower_bound.hpp"
#include "ras/rng.hpp"
#include "ras/swarm.hpp"

namespace ras {

/// Validation failure tied to one configuration field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::invalid_argument("config field '" + field + "': " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Mode { Flock, RasReplay, LowerBound, Swarm };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::Flock: return "flock";
    case Mode::RasReplay: return "ras-replay";
    case Mode::LowerBound: return "lower-bound";
    case Mode::Swarm: return "swarm";
  }
  return "?";
}

/// Flat key = value scenario description.
///
/// Unset optional fields fall back to mode-specific defaults when the
/// scenario runs; serialize() only writes what was set plus the mode's
/// required fields, so parse/serialize round-trips are idempotent.
struct ScenarioConfig {
  Mode mode = Mode::Flock;
  std::uint64_t seed = 1;
  std::size_t replicas = 1;
  std::optional<std::string> out;
  std::vector<double> s_values{1.0};
  std::vector<double> alphas{0.1, 0.03, 0.01};
  std::size_t max_steps = 1000;
  std::size_t trace_stride = 1;
  double bound_c = 1.0;  // multiplier on the existential constants of the reported bounds

  // flock
  std::size_t n = 10;
  double r = 0.5;
  double eps_o = 0.05;
  std::optional<double> a;
  std::optional<double> theta;
  std::optional<std::size_t> quiet_steps;
  std::optional<double> trace_alpha;
  std::optional<std::string> initial;

  // lower-bound
  std::size_t m = 1;
  double rho = 0.1;
  std::size_t max_rounds = 16;
  double gap_cutoff = 1e-6;
  double contraction_cutoff = 1e-10;
  bool write_schedule = true;

  // ras-replay
  std::string schedule;

  // swarm
  std::string graph = "grid";
  std::size_t rows = 30;
  std::size_t cols = 30;
  double p = 0.7;
  std::string pinning = "mirror";

  // sweep
  std::optional<std::string> sweep_key;
  std::vector<std::string> sweep_values;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a real number, got '" + v + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError(key, "integer out of range: '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

inline std::vector<double> parse_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError(key, "expected a non-empty comma-separated list");
  return out;
}

inline std::string num(double v) { return fmt::format("{}", v); }

inline std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + num(xs[i]);
  return s;
}

}  // namespace detail

inline void apply_setting(ScenarioConfig& c, const std::string& key, const std::string& v) {
  using namespace detail;
  if (key == "mode") {
    if (v == "flock") c.mode = Mode::Flock;
    else if (v == "ras-replay") c.mode = Mode::RasReplay;
    else if (v == "lower-bound") c.mode = Mode::LowerBound;
    else if (v == "swarm") c.mode = Mode::Swarm;
    else throw ConfigError(key, "expected flock, ras-replay, lower-bound or swarm, got '" + v + "'");
  } else if (key == "seed") c.seed = parse_uint(key, v);
  else if (key == "replicas") c.replicas = parse_uint(key, v);
  else if (key == "out") c.out = v;
  else if (key == "s_values") c.s_values = parse_doubles(key, v);
  else if (key == "alphas") c.alphas = parse_doubles(key, v);
  else if (key == "max_steps") c.max_steps = parse_uint(key, v);
  else if (key == "trace_stride") c.trace_stride = parse_uint(key, v);
  else if (key == "bound_c") c.bound_c = parse_double(key, v);
  else if (key == "n") c.n = parse_uint(key, v);
  else if (key == "r") c.r = parse_double(key, v);
  else if (key == "eps_o") c.eps_o = parse_double(key, v);
  else if (key == "a") c.a = parse_double(key, v);
  else if (key == "theta") c.theta = parse_double(key, v);
  else if (key == "quiet_steps") c.quiet_steps = parse_uint(key, v);
  else if (key == "trace_alpha") c.trace_alpha = parse_double(key, v);
  else if (key == "initial") c.initial = v;
  else if (key == "m") c.m = parse_uint(key, v);
  else if (key == "rho") c.rho = parse_double(key, v);
  else if (key == "max_rounds") c.max_rounds = parse_uint(key, v);
  else if (key == "gap_cutoff") c.gap_cutoff = parse_double(key, v);
  else if (key == "contraction_cutoff") c.contraction_cutoff = parse_double(key, v);
  else if (key == "write_schedule") c.write_schedule = parse_bool(key, v);
  else if (key == "schedule") c.schedule = v;
  else if (key == "graph") c.graph = v;
  else if (key == "rows") c.rows = parse_uint(key, v);
  else if (key == "cols") c.cols = parse_uint(key, v);
  else if (key == "p") c.p = parse_double(key, v);
  else if (key == "pinning") c.pinning = v;
  else if (key == "sweep_key") c.sweep_key = v;
  else if (key == "sweep_values") {
    c.sweep_values = split_list(v);
    if (c.sweep_values.empty()) throw ConfigError(key, "expected a non-empty comma-separated list");
  } else throw ConfigError(key, "unknown field");
}

inline void validate(const ScenarioConfig& c) {
  if (c.replicas < 1) throw ConfigError("replicas", "must be at least 1");
  if (c.trace_stride < 1) throw ConfigError("trace_stride", "must be at least 1");
  if (!(c.bound_c > 0.0) || !std::isfinite(c.bound_c)) throw ConfigError("bound_c", "must be positive and finite");
  for (double s : c.s_values)
    if (!(s > 0.0 && s <= 1.0)) throw ConfigError("s_values", "each s must lie in (0, 1]");
  for (double al : c.alphas)
    if (!(al > 0.0)) throw ConfigError("alphas", "each alpha must be positive");
  switch (c.mode) {
    case Mode::Flock:
      if (c.n < 1) throw ConfigError("n", "must be at least 1");
      if (!(c.r > 0.0 && c.r <= 1.0)) throw ConfigError("r", "must lie in (0, 1]");
      if (!(c.eps_o > 0.0)) throw ConfigError("eps_o", "must be positive");
      if (c.a && !(*c.a > 0.0 && *c.a <= 1.0 / static_cast<double>(c.n)))
        throw ConfigError("a", "must lie in (0, 1/n] so every possible network is admissible");
      if (c.theta && !(*c.theta > 0.0)) throw ConfigError("theta", "must be positive");
      if (c.trace_alpha && !(*c.trace_alpha > 0.0 && *c.trace_alpha <= c.eps_o))
        throw ConfigError("trace_alpha", "must lie in (0, eps_o]");
      if (c.quiet_steps && *c.quiet_steps > c.max_steps) throw ConfigError("quiet_steps", "exceeds max_steps");
      break;
    case Mode::LowerBound:
      if (c.n < 1) throw ConfigError("n", "must be at least 1");
      if (c.m < 1 || c.m > c.n) throw ConfigError("m", "must lie in [1, n]");
      if (c.m >= 2 && c.n % c.m != 0) throw ConfigError("m", "n/m must be an integer");
      if (!(c.rho > 0.0 && c.rho < 0.25)) throw ConfigError("rho", "must lie in (0, 1/4)");
      if (c.max_rounds < 1) throw ConfigError("max_rounds", "must be at least 1");
      if (!(c.gap_cutoff > 0.0 && c.gap_cutoff < 1.0)) throw ConfigError("gap_cutoff", "must lie in (0, 1)");
      if (!(c.contraction_cutoff > 0.0 && c.contraction_cutoff < 1.0))
        throw ConfigError("contraction_cutoff", "must lie in (0, 1)");
      break;
    case Mode::RasReplay:
      if (c.schedule.empty()) throw ConfigError("schedule", "required for ras-replay");
      break;
    case Mode::Swarm:
      if (c.graph == "grid") {
        if (c.rows < 1) throw ConfigError("rows", "must be at least 1");
        if (c.cols < 2) throw ConfigError("cols", "must be at least 2");
      } else if (c.graph == "path") {
        if (c.n < 2) throw ConfigError("n", "path swarm needs at least 2 vertices");
      } else {
        throw ConfigError("graph", "expected grid or path");
      }
      if (!(c.p > 0.0 && c.p <= 1.0)) throw ConfigError("p", "must lie in (0, 1]");
      if (c.pinning != "mirror" && c.pinning != "zero-weight")
        throw ConfigError("pinning", "expected mirror or zero-weight");
      if (c.a && !(*c.a > 0.0)) throw ConfigError("a", "must be positive");
      break;
  }
  if (c.sweep_key && c.sweep_values.empty()) throw ConfigError("sweep_values", "required with sweep_key");
}

inline ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig c;
  std::string line;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(key, "given twice");
    apply_setting(c, key, value);
  }
  validate(c);
  return c;
}

inline ScenarioConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return parse_config(in);
}

inline std::string serialize(const ScenarioConfig& c) {
  using detail::join;
  using detail::num;
  std::string o;
  const auto put = [&](const std::string& k, const std::string& v) { o += k + " = " + v + "\n"; };
  put("mode", to_string(c.mode));
  put("seed", std::to_string(c.seed));
  put("replicas", std::to_string(c.replicas));
  if (c.out) put("out", *c.out);
  put("s_values", join(c.s_values));
  put("alphas", join(c.alphas));
  put("max_steps", std::to_string(c.max_steps));
  put("trace_stride", std::to_string(c.trace_stride));
  if (c.bound_c != 1.0) put("bound_c", num(c.bound_c));
  switch (c.mode) {
    case Mode::Flock:
      put("n", std::to_string(c.n));
      put("r", num(c.r));
      put("eps_o", num(c.eps_o));
      if (c.a) put("a", num(*c.a));
      if (c.theta) put("theta", num(*c.theta));
      if (c.quiet_steps) put("quiet_steps", std::to_string(*c.quiet_steps));
      if (c.trace_alpha) put("trace_alpha", num(*c.trace_alpha));
      if (c.initial) put("initial", *c.initial);
      break;
    case Mode::LowerBound:
      put("n", std::to_string(c.n));
      put("m", std::to_string(c.m));
      put("rho", num(c.rho));
      put("max_rounds", std::to_string(c.max_rounds));
      put("gap_cutoff", num(c.gap_cutoff));
      put("contraction_cutoff", num(c.contraction_cutoff));
      put("write_schedule", c.write_schedule ? "true" : "false");
      break;
    case Mode::RasReplay:
      put("schedule", c.schedule);
      break;
    case Mode::Swarm:
      put("graph", c.graph);
      if (c.graph == "grid") {
        put("rows", std::to_string(c.rows));
        put("cols", std::to_string(c.cols));
      } else {
        put("n", std::to_string(c.n));
      }
      put("p", num(c.p));
      if (c.a) put("a", num(*c.a));
      put("pinning", c.pinning);
      break;
  }
  if (c.sweep_key) {
    put("sweep_key", *c.sweep_key);
    std::string vs;
    for (std::size_t i = 0; i < c.sweep_values.size(); ++i) vs += (i ? "," : "") + c.sweep_values[i];
    put("sweep_values", vs);
  }
  return o;
}

/// Ordered key = value report.
class Summary {
 public:
  void set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_)
      if (k == key) {
        v = value;
        return;
      }
    entries_.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, detail::num(value)); }
  void set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

  std::optional<std::string> get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return v;
    return std::nullopt;
  }
  double number(const std::string& key) const {
    auto v = get(key);
    if (!v) throw std::out_of_range("summary: no key " + key);
    return std::stod(*v);
  }
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string str() const {
    std::string o;
    for (const auto& [k, v] : entries_) o += k + " = " + v + "\n";
    return o;
  }

  static Summary parse(std::istream& in) {
    Summary s;
    std::string line;
    while (std::getline(in, line)) {
      auto eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      s.set(line.substr(0, eq), line.substr(eq + 3));
    }
    return s;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Comma-separated table with a header row.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) { text_ = line(header_); }

  template <typename... Ts>
  void row(const Ts&... values) {
    std::vector<std::string> cells{cell(values)...};
    text_ += line(cells);
    ++rows_;
  }
  void row_cells(const std::vector<std::string>& cells) {
    text_ += line(cells);
    ++rows_;
  }

  const std::string& str() const { return text_; }
  std::size_t rows() const { return rows_; }

 private:
  static std::string cell(double v) { return detail::num(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }

  static std::string line(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
    return s + "\n";
  }

  std::vector<std::string> header_;
  std::string text_;
  std::size_t rows_ = 0;
};

struct ParsedCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }
};

inline ParsedCsv read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ParsedCsv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      csv.header = std::move(cells);
      first = false;
    } else if (!cells.empty()) {
      csv.rows.push_back(std::move(cells));
    }
  }
  return csv;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

struct ReplicaOutput {
  std::string trace;
  Summary summary;
  std::vector<std::pair<std::string, std::string>> files;  // extra (name, content)
};

namespace detail {

inline std::string energy_key(double s) { return "E_s[" + num(s) + "]"; }

inline std::vector<std::pair<std::vector<Vec3>, std::vector<Vec3>>> load_flock_initial(const std::string& path) {
  ParsedCsv csv = read_csv(path);
  std::vector<Vec3> x, v;
  for (const auto& row : csv.rows) {
    if (row.size() != 6) throw ConfigError("initial", "each row needs x0,x1,x2,v0,v1,v2");
    Vec3 p{}, w{};
    for (std::size_t c = 0; c < 3; ++c) {
      p[c] = parse_double("initial", row[c]);
      w[c] = parse_double("initial", row[c + 3]);
    }
    x.push_back(p);
    v.push_back(w);
  }
  return {{std::move(x), std::move(v)}};
}

inline ReplicaOutput run_flock_replica(const ScenarioConfig& sc, std::size_t replica) {
  FlockConfig cfg = make_flock_config(sc.n, sc.r, sc.eps_o, sc.max_steps);
  if (sc.a) cfg.a.assign(sc.n, *sc.a);
  cfg.theta = sc.theta;
  std::vector<Vec3> x0, v0;
  if (sc.initial) {
    auto loaded = load_flock_initial(*sc.initial).front();
    x0 = std::move(loaded.first);
    v0 = std::move(loaded.second);
    if (x0.size() != sc.n) throw ConfigError("initial", "row count differs from n");
  } else {
    CounterRng rng = CounterRng::stream(sc.seed, replica);
    std::tie(x0, v0) = sample_initial_conditions(cfg, rng);
  }
  try {
    validate_initial_conditions(cfg, x0, v0);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("initial", e.what());
  }
  const FlockRun run = simulate_flock(cfg, std::move(x0), std::move(v0));
  const auto q = run.q();

  ReplicaOutput out;
  CsvTable trace({"t", "switch", "flocks", "edges", "diameter", "max_block", "dirichlet", "qnorm2"});
  EnergyLedger ledger[3] = {EnergyLedger(sc.s_values, false), EnergyLedger(sc.s_values, false),
                            EnergyLedger(sc.s_values, false)};
  std::size_t max_flocks = 0;
  for (std::size_t t = 0; t <= run.steps(); ++t) {
    const Graph& g = run.graphs[t];
    max_flocks = std::max(max_flocks, g.component_count());
    double diam = 0.0, top = 0.0, dir = 0.0, qn = 0.0;
    for (const auto& members : g.components()) diam = std::max(diam, velocity_diameter(run.v[t], members));
    for (std::size_t c = 0; c < 3; ++c) {
      const auto w = coordinate(run.v[t], c);
      const auto blocks = compute_blocks(w, g);
      top = std::max(top, max_block_length(blocks));
      dir += dirichlet_form(w, g);
      qn += q_norm2(q, w);
      ledger[c].record(blocks);
    }
    if (t % sc.trace_stride == 0)
      trace.row(t, static_cast<std::size_t>(run.switched(t)), g.component_count(), g.edge_count(), diam, top, dir, qn);
  }
  out.trace = trace.str();

  Summary& s = out.summary;
  const StabilizationReport stab = detect_stabilization(run, sc.quiet_steps.value_or(sc.max_steps / 2));
  s.set("steps", run.steps());
  s.set("switches", run.log.switch_times().size());
  s.set("max_flocks", max_flocks);
  s.set("stabilized", stab.stabilized);
  s.set("t_stable", stab.t_stable);
  s.set("final_flocks", run.graphs.back().component_count());
  s.set("rho", cfg.rho());
  for (std::size_t f = 0; f < stab.flocks.size(); ++f) {
    const auto& lv = stab.flocks[f].limit_velocity;
    s.set("limit_velocity[" + std::to_string(f) + "]", num(lv[0]) + " " + num(lv[1]) + " " + num(lv[2]));
    s.set("decay_rate[" + std::to_string(f) + "]", stab.flocks[f].decay.rate);
  }
  for (double sv : sc.s_values) {
    double e = 0.0;
    for (auto& l : ledger) e += l.total(sv);
    s.set(energy_key(sv), e);
    const double m = static_cast<double>(std::max<std::size_t>(1, max_flocks));
    s.set("theorem2_bound[" + num(sv) + "]", theorem2_bound(static_cast<double>(sc.n), m, std::min(0.5, cfg.rho()), sv, sc.bound_c));
  }
  if (run.steps() >= 1) {
    const double alpha = sc.trace_alpha.value_or(sc.eps_o / 10.0);
    const SwitchStats st = count_switch_stats(run, alpha);
    const TraceResult tr = backward_trace(run, alpha);
    s.set("trace_alpha", alpha);
    s.set("R_count", st.r_count);
    s.set("N_alpha", st.n_alpha);
    s.set("identity_error", tr.identity_error());
    s.set("delta", tr.delta);
  }
  return out;
}

inline void replay_into(const RecursiveSchedule& sched, const ScenarioConfig& sc, ReplicaOutput& out) {
  std::vector<std::string> header{"t", "diameter", "blocks", "max_block"};
  for (double sv : sc.s_values) header.push_back("E_" + num(sv));
  CsvTable trace(header);
  std::vector<double> cum(sc.s_values.size(), 0.0);
  const ReplayResult res = replay_schedule(sched, sc.s_values, [&](std::size_t t, std::span<const double> x,
                                                                    std::span<const Block> blocks) {
    for (std::size_t k = 0; k < cum.size(); ++k)
      for (const Block& b : blocks)
        if (b.length() > 0.0) cum[k] += std::pow(b.length(), sc.s_values[k]);
    if (t % sc.trace_stride != 0) return;
    std::vector<std::string> cells{std::to_string(t), num(diameter(x)), std::to_string(blocks.size()),
                                   num(max_block_length(blocks))};
    for (double e : cum) cells.push_back(num(e));
    trace.row_cells(cells);
  });
  out.trace = trace.str();
  Summary& s = out.summary;
  const std::vector<double> q(sched.n, 1.0 / sched.rho);
  const double var = q_variance(q, sched.initial);
  s.set("steps", res.steps);
  s.set("max_components", res.max_components);
  s.set("phase1_energy", res.first_step_lengths.empty() ? 0.0 : res.first_step_lengths.front());
  s.set("variance", var);
  for (std::size_t k = 0; k < sc.s_values.size(); ++k) {
    const double sv = sc.s_values[k];
    s.set(energy_key(sv), res.energy[k]);
    const double normalized = var > 0.0 ? res.energy[k] / std::pow(var, sv / 2.0) : 0.0;
    s.set("E_s_unit_variance[" + num(sv) + "]", normalized);
    const double m = static_cast<double>(std::max<std::size_t>(1, res.max_components));
    s.set("theorem2_bound[" + num(sv) + "]", theorem2_bound(static_cast<double>(sched.n), m, sched.rho, sv, sc.bound_c));
    if (sched.m >= 1)
      s.set("theorem3_bound[" + num(sv) + "]",
            theorem3_bound(static_cast<double>(sched.n), static_cast<double>(sched.m), sched.rho, sv, sc.bound_c));
  }
}

inline ReplicaOutput run_lower_bound_replica(const ScenarioConfig& sc) {
  ReplicaOutput out;
  if (sc.m == 1) {
    const PathSpectralModel model(sc.n, sc.rho);
    std::vector<std::string> header{"t", "diameter", "spectral_diameter", "lower_bound"};
    CsvTable trace(header);
    Summary& s = out.summary;
    std::size_t steps = 0;
    for (double sv : sc.s_values) {
      const PathEnergy pe = path_s_energy(model, sv);
      steps = std::max(steps, pe.steps);
      s.set(energy_key(sv), pe.energy);
      s.set("path_lower_bound[" + num(sv) + "]", pe.lower_bound);
      s.set("theorem3_bound[" + num(sv) + "]", theorem3_bound(static_cast<double>(sc.n), 1.0, sc.rho, sv, sc.bound_c));
      const std::vector<double> q(sc.n, 1.0 / sc.rho);
      std::vector<double> x0(sc.n, 0.0);
      x0[0] = 1.0;
      const double var = q_variance(q, x0);
      s.set("E_s_unit_variance[" + num(sv) + "]", var > 0.0 ? pe.energy / std::pow(var, sv / 2.0) : 0.0);
      s.set("theorem2_bound[" + num(sv) + "]", theorem2_bound(static_cast<double>(sc.n), 1.0, sc.rho, sv, sc.bound_c));
    }
    s.set("steps", steps);
    const auto sim = simulate_path_diameters(model, steps);
    for (std::size_t t = 1; t <= sim.size(); ++t)
      if ((t - 1) % sc.trace_stride == 0)
        trace.row(t, sim[t - 1], path_diameter(model, t), path_diameter_lower_bound(model, t));
    out.trace = trace.str();
    return out;
  }
  ScheduleOptions opt;
  opt.max_rounds = sc.max_rounds;
  opt.gap_cutoff = sc.gap_cutoff;
  opt.contraction_cutoff = sc.contraction_cutoff;
  const RecursiveSchedule sched = build_recursive_schedule(sc.n, sc.m, sc.rho, opt);
  replay_into(sched, sc, out);
  if (sc.write_schedule) {
    std::ostringstream o;
    write_schedule(o, sched);
    out.files.emplace_back("schedule.txt", o.str());
  }
  return out;
}

inline ReplicaOutput run_replay_replica(const ScenarioConfig& sc) {
  std::ifstream in(sc.schedule);
  if (!in) throw std::runtime_error("cannot open schedule file " + sc.schedule);
  RecursiveSchedule sched;
  try {
    sched = read_schedule(in);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("schedule", e.what());
  }
  ReplicaOutput out;
  replay_into(sched, sc, out);
  return out;
}

inline ReplicaOutput run_swarm_replica(const ScenarioConfig& sc, std::size_t replica) {
  const CounterRng init = CounterRng::stream(sc.seed, replica).child(~std::uint64_t{0});
  SwarmScenario scen = sc.graph == "grid" ? make_grid_scenario(sc.rows, sc.cols, init) : make_path_scenario(sc.n, init);
  SwarmConfig cfg;
  cfg.graph = scen.graph;
  cfg.pinned = scen.pinned;
  cfg.pinning = sc.pinning == "mirror" ? PinningMode::Mirror : PinningMode::ZeroWeight;
  cfg.a = sc.a ? std::vector<double>(scen.graph.n(), *sc.a) : default_swarm_weights(scen.graph, scen.pinned, cfg.pinning);
  cfg.p = sc.p;
  cfg.seed = sc.seed;
  cfg.stream = replica;
  cfg.max_steps = sc.max_steps;
  cfg.alphas = sc.alphas;
  cfg.exponents = sc.s_values;
  SwarmRun run;
  try {
    run = run_swarm(cfg, scen.x0);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("a", e.what());
  }

  ReplicaOutput out;
  CsvTable trace({"t", "max_block", "diameter", "qnorm2", "retained"});
  for (const SwarmRow& r : run.rows)
    if (r.t % sc.trace_stride == 0) trace.row(r.t, r.max_block, r.diameter, r.qnorm2, r.retained);
  out.trace = trace.str();

  CsvTable pos({"id", "pinned", "X", "Y", "Z"});
  for (std::size_t i = 0; i < run.n; ++i) {
    const Vec3& p = run.final_positions[i];
    pos.row(i, static_cast<std::size_t>(run.pinned[i]), p[0], p[1], p[2]);
  }
  out.files.emplace_back("positions.csv", pos.str());

  Summary& s = out.summary;
  const double n = static_cast<double>(run.n);
  const double d = static_cast<double>(run.max_degree);
  s.set("vertices", run.n);
  s.set("simulated_vertices", run.size);
  s.set("max_degree", run.max_degree);
  s.set("rho", run.rho);
  s.set("steps", run.rows.size());
  s.set("final_max_free_abs_x", run.max_free_abs_x());
  s.set("max_pinned_offset", run.max_pinned_offset);
  s.set("max_antisymmetry_error", run.max_antisymmetry_error);
  s.set("qnorm_monotone", run.qnorm_monotone);
  double mean_ratio = 0.0;
  for (double c : run.contraction) mean_ratio += c;
  if (!run.contraction.empty()) mean_ratio /= static_cast<double>(run.contraction.size());
  s.set("mean_contraction_ratio", mean_ratio);
  s.set("contraction_constant", contraction_constant(run.rho, sc.p, d, static_cast<double>(run.size)));
  for (std::size_t k = 0; k < run.exponents.size(); ++k) s.set(energy_key(run.exponents[k]), run.energy[k]);
  for (const auto& st : run.stats) {
    const std::string a = "[" + num(st.alpha) + "]";
    s.set("N_alpha" + a, st.n_alpha);
    s.set("K_alpha" + a, st.k_alpha);
    s.set("T_alpha" + a, st.t_alpha ? std::to_string(*st.t_alpha) : std::string("none"));
    if (st.alpha < 1.0) s.set("theorem4_bound" + a, theorem4_bound(n, d, sc.p, std::min(0.5, run.rho), st.alpha, sc.bound_c));
  }
  return out;
}

inline ReplicaOutput run_replica(const ScenarioConfig& sc, std::size_t replica) {
  switch (sc.mode) {
    case Mode::Flock: return run_flock_replica(sc, replica);
    case Mode::LowerBound: return run_lower_bound_replica(sc);
    case Mode::RasReplay: return run_replay_replica(sc);
    case Mode::Swarm: return run_swarm_replica(sc, replica);
  }
  throw std::logic_error("unreachable");
}

inline std::string replica_name(const std::string& stem, std::size_t r, const std::string& ext) {
  return fmt::format("{}_{:03}{}", stem, r, ext);
}

}  // namespace detail

inline std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("RASIM_OUT_DIR"); env && *env) return env;
  return "rasim-out";
}

/// Runs every replica (in parallel), then writes trace_NNN.csv per replica,
/// extra per-replica files, and summary.txt in `out_dir`.
inline Summary run_scenario(const ScenarioConfig& sc, const std::filesystem::path& out_dir) {
  validate(sc);
  std::vector<std::future<ReplicaOutput>> jobs;
  for (std::size_t r = 0; r < sc.replicas; ++r)
    jobs.push_back(std::async(std::launch::async, [&sc, r] { return detail::run_replica(sc, r); }));
  std::vector<ReplicaOutput> outs;
  for (auto& j : jobs) outs.push_back(j.get());

  std::filesystem::create_directories(out_dir);
  Summary summary;
  summary.set("mode", to_string(sc.mode));
  summary.set("seed", std::to_string(sc.seed));
  summary.set("replicas", sc.replicas);
  for (std::size_t r = 0; r < outs.size(); ++r) {
    write_text(out_dir / detail::replica_name("trace", r, ".csv"), outs[r].trace);
    for (const auto& [name, content] : outs[r].files) {
      const auto dot = name.find('.');
      write_text(out_dir / detail::replica_name(name.substr(0, dot), r, name.substr(dot)), content);
    }
  }
  for (const auto& [k, v] : outs.front().summary.entries()) summary.set(k, v);
  if (outs.size() > 1) {
    // Means of numeric entries across replicas.
    for (const auto& [k, v] : outs.front().summary.entries()) {
      double acc = 0.0;
      bool numeric = true;
      for (const auto& o : outs) {
        auto val = o.summary.get(k);
        char* end = nullptr;
        double d = val ? std::strtod(val->c_str(), &end) : 0.0;
        if (!val || end == val->c_str() || *end != '\0') {
          numeric = false;
          break;
        }
        acc += d;
      }
      if (numeric) summary.set("mean." + k, acc / static_cast<double>(outs.size()));
    }
  }
  write_text(out_dir / "summary.txt", summary.str());
  return summary;
}

/// Runs the scenario once per sweep value into out_dir/<key>_<value>/ and
/// collects the numeric summary entries into out_dir/sweep.csv.
inline ParsedCsv run_sweep(const ScenarioConfig& sc, const std::filesystem::path& out_dir) {
  if (!sc.sweep_key) throw ConfigError("sweep_key", "required for sweep");
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> keys;
  std::vector<std::vector<std::string>> rows;
  const std::string base = serialize(sc);
  for (const std::string& value : sc.sweep_values) {
    std::istringstream in(base);
    ScenarioConfig point;
    std::string line;
    while (std::getline(in, line)) {
      auto eq = line.find(" = ");
      std::string k = line.substr(0, eq);
      if (k == "sweep_key" || k == "sweep_values" || k == *sc.sweep_key) continue;
      apply_setting(point, k, line.substr(eq + 3));
    }
    apply_setting(point, *sc.sweep_key, value);
    validate(point);
    const Summary s = run_scenario(point, out_dir / (*sc.sweep_key + "_" + value));
    if (keys.empty()) {
      for (const auto& [k, v] : s.entries()) {
        char* end = nullptr;
        std::strtod(v.c_str(), &end);
        if (k != "seed" && k != "replicas" && end != v.c_str() && *end == '\0') keys.push_back(k);
      }
    }
    std::vector<std::string> row{value};
    for (const auto& k : keys) row.push_back(s.get(k).value_or(""));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> header{*sc.sweep_key};
  header.insert(header.end(), keys.begin(), keys.end());
  CsvTable table(header);
  for (const auto& r : rows) table.row_cells(r);
  write_text(out_dir / "sweep.csv", table.str());
  return read_csv(out_dir / "sweep.csv");
}

/// Plot-ready files under dir/plot/: diameter_vs_t.csv from the traces,
/// energy_vs_<key>.csv from a sweep table, and split pinned/free final
/// positions from swarm runs. Returns the written paths.
inline std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("plot-data: no such directory " + dir.string());
  std::vector<fs::path> traces, positions;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("trace_", 0) == 0 && entry.path().extension() == ".csv") traces.push_back(entry.path());
    if (name.rfind("positions_", 0) == 0 && entry.path().extension() == ".csv") positions.push_back(entry.path());
  }
  std::sort(traces.begin(), traces.end());
  std::sort(positions.begin(), positions.end());
  const bool have_sweep = fs::exists(dir / "sweep.csv");
  if (traces.empty() && !have_sweep) throw std::runtime_error("plot-data: missing traces in " + dir.string());

  const fs::path plot = dir / "plot";
  fs::create_directories(plot);
  std::vector<fs::path> written;

  if (!traces.empty()) {
    CsvTable diam({"replica", "t", "diameter", "log_diameter"});
    for (std::size_t r = 0; r < traces.size(); ++r) {
      const ParsedCsv csv = read_csv(traces[r]);
      const auto tcol = csv.column("t");
      const auto dcol = csv.column("diameter");
      if (!tcol || !dcol) continue;
      for (const auto& row : csv.rows) {
        const double d = std::stod(row[*dcol]);
        if (d > 0.0) diam.row_cells({std::to_string(r), row[*tcol], row[*dcol], detail::num(std::log(d))});
      }
    }
    write_text(plot / "diameter_vs_t.csv", diam.str());
    written.push_back(plot / "diameter_vs_t.csv");
  }

  if (have_sweep) {
    const ParsedCsv sweep = read_csv(dir / "sweep.csv");
    std::vector<std::string> header{sweep.header.front()};
    std::vector<std::size_t> cols;
    for (std::size_t i = 1; i < sweep.header.size(); ++i)
      if (sweep.header[i].rfind("E_s", 0) == 0 || sweep.header[i].rfind("mean.E_s", 0) == 0) {
        header.push_back(sweep.header[i]);
        cols.push_back(i);
      }
    CsvTable energy(header);
    for (const auto& row : sweep.rows) {
      std::vector<std::string> cells{row.front()};
      for (std::size_t c : cols) cells.push_back(row[c]);
      energy.row_cells(cells);
    }
    const fs::path p = plot / ("energy_vs_" + sweep.header.front() + ".csv");
    write_text(p, energy.str());
    written.push_back(p);
  }

  for (std::size_t r = 0; r < positions.size(); ++r) {
    const ParsedCsv csv = read_csv(positions[r]);
    CsvTable pinned({"X", "Y", "Z"}), free({"X", "Y", "Z"});
    for (const auto& row : csv.rows) (row[1] == "1" ? pinned : free).row_cells({row[2], row[3], row[4]});
    const fs::path pp = plot / detail::replica_name("positions_pinned", r, ".csv");
    const fs::path fp = plot / detail::replica_name("positions_free", r, ".csv");
    write_text(pp, pinned.str());
    write_text(fp, free.str());
    written.push_back(pp);
    written.push_back(fp);
  }
  return written;
}

}  // namespace ras
