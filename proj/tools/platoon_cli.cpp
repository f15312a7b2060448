// platoon: simulate and analyze CACC platoons with MPF topology.
//
//   platoon simulate --config cfg --out dir [--set key=value]... [--seed N]
//   platoon analyze  --config cfg --out dir
//   platoon freq     --config cfg --out dir [--omega-min W] [--omega-max W] [--omega-points N]
//   platoon sweep    --config cfg --out dir [--grid key=list]... [--norms]
//
// Exit codes: 0 success/certified, 1 analysis failed, 2 invalid input,
// 3 divergence, 4 I/O error. PLATOON_LOG=quiet|info|debug sets verbosity.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "platoon/config.hpp"
#include "platoon/output.hpp"
#include "platoon/scenario.hpp"
#include "platoon/stability.hpp"

namespace {

namespace fs = std::filesystem;
using namespace platoon;

enum Exit : int { kOk = 0, kFailed = 1, kInvalid = 2, kDiverged = 3, kIo = 4 };

enum class Verbosity { quiet, info, debug };

Verbosity verbosity() {
  const char* env = std::getenv("PLATOON_LOG");
  if (!env) return Verbosity::info;
  const std::string v = env;
  if (v == "quiet") return Verbosity::quiet;
  if (v == "debug") return Verbosity::debug;
  return Verbosity::info;
}

void log(Verbosity level, const std::string& msg) {
  if (level <= verbosity() && verbosity() != Verbosity::quiet) std::cerr << msg << '\n';
}

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string out = ".";
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<double> omega_min, omega_max;
  std::optional<std::size_t> omega_points;
  std::vector<std::string> grid;
  bool norms = false;
};

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  body(os);
  os.flush();
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

RunConfig resolve(const Options& o, std::vector<std::string>& applied) {
  applied = o.sets;
  if (o.seed) applied.push_back("seed=" + std::to_string(*o.seed));
  if (o.omega_min) applied.push_back("freq.omega_min=" + format_number(*o.omega_min));
  if (o.omega_max) applied.push_back("freq.omega_max=" + format_number(*o.omega_max));
  if (o.omega_points) applied.push_back("freq.points=" + std::to_string(*o.omega_points));
  for (const auto& g : o.grid) applied.push_back("sweep." + g);
  if (o.norms) applied.emplace_back("sweep.norms=true");
  return load_config(o.config, applied);
}

int cmd_simulate(const Options& o) {
  std::vector<std::string> applied;
  const RunConfig cfg = resolve(o, applied);
  const auto out = prepare_out(o.out);
  log(Verbosity::info, "simulating " + std::to_string(cfg.scenario.n_followers + 1) +
                           " vehicles for " + format_number(cfg.scenario.t_end) + " s");

  TrajectoryLog traj;
  try {
    traj = run(cfg.scenario);
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    write_file(out / "divergence.txt", [&](std::ostream& os) {
      os << "step = " << e.step() << "\nvehicle = " << e.vehicle() << "\nmessage = " << e.what()
         << '\n';
    });
    return kDiverged;
  }
  const Metrics m = metrics(traj, cfg.scenario.leader);

  write_file(out / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  write_file(out / "metrics.csv", [&](std::ostream& os) { write_metrics_csv(os, m); });
  write_file(out / "manifest.cfg", [&](std::ostream& os) {
    os << "# resolved configuration of a 'platoon simulate' run\n";
    os << "# source: " << o.config << '\n';
    for (const auto& s : applied) os << "# override: " << s << '\n';
    os << serialize_config(cfg);
  });
  write_file(out / "summary.json", [&](std::ostream& os) {
    nlohmann::json j;
    j["command"] = "simulate";
    j["rows"] = traj.rows();
    j["seed"] = cfg.scenario.channel.seed;
    auto& fs_ = j["followers"] = nlohmann::json::array();
    for (std::size_t f = 0; f < m.followers.size(); ++f) {
      const auto& fm = m.followers[f];
      fs_.push_back({{"vehicle", f + 1},
                     {"peak_abs_error", fm.peak_abs_error},
                     {"peak_time", fm.peak_time},
                     {"rms_error", fm.rms_error},
                     {"final_error", fm.final_error},
                     {"window_peak", fm.window_peak}});
    }
    j["window_peak_ratios"] = m.peak_ratios;
    j["window"] = {m.window_start, m.window_end};
    os << j.dump(2) << '\n';
  });
  log(Verbosity::info, "wrote " + std::to_string(traj.rows()) + " rows to " +
                           (out / "trajectory.csv").string());
  return kOk;
}

int cmd_analyze(const Options& o) {
  std::vector<std::string> applied;
  const RunConfig cfg = resolve(o, applied);
  const auto out = prepare_out(o.out);
  const auto rep = analyze(cfg.scenario.platoon_params(), cfg.freq);

  write_file(out / "stability_report.csv", [&](std::ostream& os) { write_stability_csv(os, rep); });
  write_file(out / "summary.json", [&](std::ostream& os) {
    auto j = stability_json(rep);
    j["command"] = "analyze";
    os << j.dump(2) << '\n';
  });
  for (const auto& row : condition_rows(rep)) {
    if (!row.pass) log(Verbosity::info, "FAILED " + row.name + ": " + format_number(row.value) +
                                            " " + row.relation + " " + format_number(row.bound));
    else log(Verbosity::debug, "ok " + row.name);
  }
  log(Verbosity::info, std::string(rep.certified() ? "certified" : "not certified") +
                           " (h_min = " + format_number(rep.h_min) + " s)");
  return rep.certified() ? kOk : kFailed;
}

int cmd_freq(const Options& o) {
  std::vector<std::string> applied;
  const RunConfig cfg = resolve(o, applied);
  const auto out = prepare_out(o.out);
  const auto params = cfg.scenario.platoon_params();
  if (auto v = params.violations(); !v.empty()) throw ValidationError(std::move(v));
  const auto fr = frequency_response(params, cfg.freq);
  write_file(out / "freq_response.csv", [&](std::ostream& os) { write_freq_csv(os, fr); });
  log(Verbosity::info, "wrote " + std::to_string(fr.omegas.size()) + " frequencies");
  return kOk;
}

int cmd_sweep(const Options& o) {
  std::vector<std::string> applied;
  const RunConfig cfg = resolve(o, applied);
  const auto out = prepare_out(o.out);
  std::vector<RegionPoint> pts;
  try {
    pts = sweep_gain_region(cfg.region, cfg.scenario.platoon_params(), cfg.region_norms, cfg.freq);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  write_file(out / "region.csv", [&](std::ostream& os) { write_region_csv(os, pts); });
  std::size_t certified = 0;
  for (const auto& p : pts) certified += p.certified ? 1 : 0;
  log(Verbosity::info, std::to_string(certified) + " of " + std::to_string(pts.size()) +
                           " grid points certified");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CACC platoon simulation and string stability analysis"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "configuration file")->required();
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--set", o.sets, "override KEY=VALUE (repeatable)");
    sub->add_option("--seed", o.seed, "random seed for packet loss");
  };
  auto* sim = app.add_subcommand("simulate", "run the closed-loop scenario");
  auto* ana = app.add_subcommand("analyze", "certify internal and string stability");
  auto* frq = app.add_subcommand("freq", "tabulate |H_l(jw)| over a frequency grid");
  auto* swp = app.add_subcommand("sweep", "classify a grid of parameters");
  for (auto* sub : {sim, ana, frq, swp}) add_common(sub);
  frq->add_option("--omega-min", o.omega_min, "lowest nonzero frequency [rad/s]");
  frq->add_option("--omega-max", o.omega_max, "highest frequency [rad/s]");
  frq->add_option("--omega-points", o.omega_points, "log-spaced points");
  swp->add_option("--grid", o.grid, "KEY=LIST, e.g. kp=-0.1,0.1 or h=0.5:1:11 (repeatable)");
  swp->add_flag("--norms", o.norms, "also sweep the frequency response at every point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*ana) return cmd_analyze(o);
    if (*frq) return cmd_freq(o);
    if (*swp) return cmd_sweep(o);
  } catch (const ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}
