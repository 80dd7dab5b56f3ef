// rasim: run, sweep and check reversible agreement scenarios.
#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "ras/ras.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kInvariant = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> replicas;
};

ras::ScenarioConfig load(const Options& o) {
  ras::ScenarioConfig c = ras::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.replicas) c.replicas = *o.replicas;
  ras::validate(c);
  return c;
}

std::filesystem::path out_dir(const Options& o, const ras::ScenarioConfig* c) {
  if (o.out) return *o.out;
  if (c && c->out) return *c->out;
  return ras::default_output_dir();
}

// Summary entries that must hold for any run; failures map to exit code 2.
bool summary_invariants_hold(const ras::Summary& s) {
  const auto below = [&](const std::string& key, double tol) {
    auto v = s.get(key);
    return !v || std::stod(*v) <= tol;
  };
  bool ok = below("max_pinned_offset", 1e-12) && below("max_antisymmetry_error", 1e-12) &&
            below("identity_error", 1e-9);
  if (auto v = s.get("qnorm_monotone"); v && *v != "true") ok = false;
  return ok;
}

int cmd_run(const Options& o) {
  const ras::ScenarioConfig c = load(o);
  const auto dir = out_dir(o, &c);
  const ras::Summary s = ras::run_scenario(c, dir);
  std::cout << s.str();
  std::cout << "wrote " << dir.string() << "\n";
  return summary_invariants_hold(s) ? kOk : kInvariant;
}

int cmd_sweep(const Options& o) {
  const ras::ScenarioConfig c = load(o);
  const auto dir = out_dir(o, &c);
  const ras::ParsedCsv table = ras::run_sweep(c, dir);
  std::cout << "wrote " << table.rows.size() << " sweep points to " << (dir / "sweep.csv").string() << "\n";
  return kOk;
}

int cmd_check(const Options& o) {
  bool ok = true;
  for (const auto& r : ras::run_invariant_checks(o.seed.value_or(1))) {
    std::cout << fmt::format("{} {} ({})\n", r.passed ? "PASS" : "FAIL", r.name, r.detail);
    ok = ok && r.passed;
  }
  if (!o.config.empty()) {
    const ras::ScenarioConfig c = load(o);
    const auto dir = out_dir(o, &c);
    const bool held = summary_invariants_hold(ras::run_scenario(c, dir));
    std::cout << fmt::format("{} scenario invariants for {}\n", held ? "PASS" : "FAIL", o.config);
    ok = ok && held;
  }
  return ok ? kOk : kInvariant;
}

int cmd_plot(const Options& o) {
  for (const auto& p : ras::emit_plot_data(out_dir(o, nullptr))) std::cout << "wrote " << p.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reversible agreement systems: flocking, lower bounds and swarm pattern formation"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* sub, bool needs_config) {
    auto* cfg = sub->add_option("--config", o.config, "scenario file (key = value lines)");
    if (needs_config) cfg->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the scenario seed");
    sub->add_option("--out", o.out, "output directory (default: $RASIM_OUT_DIR or ./rasim-out)");
    sub->add_option("--replicas", o.replicas, "override the number of replicas")->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "run one scenario and write traces plus summary.txt");
  common(run, true);
  auto* sweep = app.add_subcommand("sweep", "run a scenario for every value of sweep_key");
  common(sweep, true);
  auto* check = app.add_subcommand("check", "run the randomized invariant suite");
  common(check, false);
  auto* plot = app.add_subcommand("plot-data", "turn traces under --out into plot-ready CSV files");
  plot->add_option("--out", o.out, "directory holding traces");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*check) return cmd_check(o);
    if (*plot) return cmd_plot(o);
  } catch (const ras::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kValidation;
}
