#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chaoslink/analysis.hpp"
#include "chaoslink/config.hpp"
#include "chaoslink/engine.hpp"
#include "chaoslink/error.hpp"
#include "chaoslink/io.hpp"
#include "chaoslink/link.hpp"

#ifndef CHAOSLINK_VERSION
#define CHAOSLINK_VERSION "0.0.0"
#endif

namespace chaoslink {

namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config;
  std::string out = ".";
  std::vector<std::string> sets;
  std::optional<double> duration;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve(const Globals &g) {
  RunConfig cfg = g.config.empty() ? parse_config("") : load_config(g.config);
  for (const auto &s : g.sets) apply_override(cfg, s);
  if (g.duration) apply_override(cfg, "link.duration=" + format_double(*g.duration));
  if (g.seed) apply_override(cfg, "channel.seed=" + std::to_string(*g.seed));
  return cfg;
}

fs::path out_dir(const Globals &g) {
  fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DomainError("cannot create output directory " + dir.string());
  return dir;
}

class Run {
public:
  Run(const Globals &g, std::string command)
      : cfg(resolve(g)), dir(out_dir(g)), start_(std::chrono::steady_clock::now()) {
    manifest_.tool_version = CHAOSLINK_VERSION;
    manifest_.command = std::move(command);
    manifest_.config = config_entries(cfg);
    manifest_.channel_seed = cfg.channel.seed;
  }

  fs::path output(const std::string &name) {
    manifest_.outputs.push_back(name);
    return dir / name;
  }
  void result(const std::string &key, const std::string &value) {
    manifest_.results.emplace_back(key, value);
    std::cout << key << " = " << value << "\n";
  }
  void finish() {
    manifest_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_manifest(manifest_, dir);
  }

  RunConfig cfg;
  fs::path dir;

private:
  std::chrono::steady_clock::time_point start_;
  RunManifest manifest_;
};

void simulate(const Globals &g, const std::string &which) {
  Run run(g, "simulate " + which);
  const SystemKind kind = parse_system_kind(which);
  const auto sim = make_simulation(kind, run.cfg.link, run.cfg.analysis);
  const double h = sim->step_size();
  const auto stride = std::max<std::int64_t>(1, std::llround(run.cfg.link.sample_step / h));
  const auto steps = static_cast<std::int64_t>(std::floor(run.cfg.link.duration / h));
  std::vector<double> t;
  std::vector<std::array<double, 2>> x;
  for (std::int64_t k = 0; k <= steps; ++k) {
    if (k % stride == 0) {
      const auto s = sim->state();
      t.push_back(sim->time());
      x.push_back({s[0], s[1]});
    }
    if (k < steps) sim->step();
  }
  write_trajectory_csv(t, x, run.output("trajectory.csv"));
  run.result("integrator_step", format_double(h));
  run.finish();
}

void bifurcate(const Globals &g, bool serial) {
  Run run(g, serial ? "bifurcate --serial" : "bifurcate");
  const SweepRequest req = run.cfg.sweep_request();
  const BifurcationData d = serial ? bifurcation_sweep(req) : bifurcation_sweep_parallel(req);
  write_bifurcation_csv(d, run.output("bifurcation.csv"));
  std::size_t flagged = 0;
  for (bool f : d.flagged) flagged += f ? 1 : 0;
  run.result("flagged_points", std::to_string(flagged));
  run.finish();
}

void lyapunov(const Globals &g) {
  Run run(g, "lyapunov");
  const double lambda = lyapunov_estimate(run.cfg.system, run.cfg.link, run.cfg.analysis,
                                          run.cfg.lyapunov);
  run.result("lyapunov_exponent", format_double(lambda));
  run.finish();
}

void link(const Globals &g) {
  Run run(g, "link");
  const LinkResult res = run_link(run.cfg.link, run.cfg.message_source(), run.cfg.channel_model());
  write_waveform_csv(res.composite, run.output("composite.csv"));
  write_waveform_csv(res.recovered, run.output("recovered.csv"));
  write_waveform_csv(res.message, run.output("message.csv"));
  write_waveform_csv(res.sync_error, run.output("sync_error.csv"));
  if (run.cfg.message.kind != "silence") {
    const RecoveryMetrics m = recovery_metrics(res.message, res.recovered, run.cfg.link.transient_cut);
    run.result("rmse", format_double(m.rmse));
    run.result("relative_rmse", format_double(m.relative_rmse));
    run.result("correlation", format_double(m.correlation));
    run.result("snr_db", format_double(m.snr_db));
  }
  run.result("rx_pinned_turn_offs", std::to_string(res.rx_stats.boost_pinned_turn_offs));
  run.finish();
}

void sensitivity(const Globals &g) {
  Run run(g, "sensitivity");
  const auto points = mismatch_sensitivity_parallel(
      run.cfg.link, run.cfg.message_source(), run.cfg.channel_model(),
      run.cfg.sensitivity_parameter, run.cfg.sensitivity_deltas);
  write_sensitivity_csv(points, run.output("sensitivity.csv"));
  run.finish();
}

} // namespace

int cli_main(int argc, const char *const *argv) {
  CLI::App app{"Chaotic DC-DC converter masking link: simulation and analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Configuration file (key = value)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--set", g.sets, "Override one key, key=value (repeatable)");
  app.add_option("--duration", g.duration, "Simulated time, s (link.duration)");
  app.add_option("--seed", g.seed, "Channel noise seed (channel.seed)");

  std::string which;
  bool serial = false;
  auto *sim = app.add_subcommand("simulate", "Stand-alone converter trajectory");
  sim->add_option("system", which, "buck or boost")->required()->check(CLI::IsMember({"buck", "boost"}));
  auto *bif = app.add_subcommand("bifurcate", "Stroboscopic parameter sweep");
  bif->add_flag("--serial", serial, "Use the serial reference sweep");
  auto *lya = app.add_subcommand("lyapunov", "Largest Lyapunov exponent estimate");
  auto *lnk = app.add_subcommand("link", "End-to-end masking link run");
  auto *sen = app.add_subcommand("sensitivity", "Receiver parameter mismatch sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, std::cout, std::cerr);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed())
      simulate(g, which);
    else if (bif->parsed())
      bifurcate(g, serial);
    else if (lya->parsed())
      lyapunov(g);
    else if (lnk->parsed())
      link(g);
    else if (sen->parsed())
      sensitivity(g);
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError &e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DomainError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

} // namespace chaoslink
