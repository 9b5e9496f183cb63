// boltzslab: check-kernel | cancellation | simulate | verify --renorm | sweep-n
//
// Exit status: 0 when every asserted invariant holds, 1 on a violation (the
// failing certificate entry goes to stderr), 2 on configuration errors.

#include "boltzslab/run_io.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace boltzslab;

namespace {

struct Options {
  std::string config = "slab-hot-wall";
  std::string out = "boltzslab-out";
  std::vector<std::string> sets;
  int workers = 0;
  long long seed = -1;
  // subcommand specific
  std::string run_path;
  bool renorm = true;
  bool traces = false;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "config file or preset name")->capture_default_str();
  sub->add_option("--out", o.out, "output directory")->capture_default_str();
  sub->add_option("--set", o.sets, "override section.key=value (repeatable)");
  sub->add_option("--workers", o.workers, "worker threads for collision sums");
  sub->add_option("--seed", o.seed, "seed for subsampling, random initial data and 𝒯 pairs");
}

std::vector<std::string> overrides(const Options& o) {
  std::vector<std::string> v = o.sets;
  if (o.workers > 0) v.push_back("run.workers=" + std::to_string(o.workers));
  if (o.seed >= 0) v.push_back("collision.seed=" + std::to_string(o.seed));
  return v;
}

std::string config_base_dir(const std::string& source) {
  if (fs::is_regular_file(source)) return fs::absolute(source).parent_path().string();
  return fs::current_path().string();
}

int finish(const Certificate& c, const std::string& path) {
  write_json(path, c.doc);
  std::cout << "wrote " << path << "\n";
  if (!c.pass) {
    std::cerr << "invariant violation: " << c.failure << "\n";
    return 1;
  }
  return 0;
}

int check_kernel(const Options& o) {
  const SimConfig cfg = load_config(o.config, overrides(o));
  const AssumptionReport rep = check_assumptions(cfg.kernel, cfg.n);
  std::cout << "kernel " << to_string(cfg.kernel.kind) << ": admissible=" << rep.admissible
            << " angular_divergence=" << rep.angular_divergence << "\n";
  return finish(kernel_certificate(cfg, rep), (fs::path(o.out) / "kernel_report.json").string());
}

int cancellation(const Options& o) {
  const SimConfig cfg = load_config(o.config, overrides(o));
  const SProfile prof = s_profile(cfg.kernel, cancellation_radii());
  const TruncatedKernel tk(cfg.kernel, cfg.n, cfg.damping);
  const auto pairs = sample_pairs(100, cfg.seed.value_or(1));
  const TQuadrature coarse{}, fine{2 * coarse.n_theta, coarse.n_azimuth};
  const TBoundReport a = verify_t_bound(tk, standard_battery(), pairs, coarse);
  const TBoundReport b = verify_t_bound(tk, standard_battery(), pairs, fine);
  const std::string csv = (fs::path(o.out) / "s_profile.csv").string();
  write_s_profile_csv(csv, prof);
  std::cout << "wrote " << csv << "\nT bound: C=" << a.fitted_C << " (doubled " << b.fitted_C
            << "), violations " << a.violations << "/" << b.violations << "\n";
  return finish(cancellation_certificate(cfg, prof, a, b), (fs::path(o.out) / "cancellation_certificate.json").string());
}

int simulate(const Options& o) {
  SimConfig cfg = load_config(o.config, overrides(o));
  cfg.run.dump_dir = o.out;
  const Problem p = cfg.problem();
  const DistributionField f0 = cfg.prepared_initial();
  fs::create_directories(o.out);
  {
    std::ofstream ini(fs::path(o.out) / "config.ini");
    ini << cfg.ini;
  }
  const RunHistory h = run(p, cfg.run, f0, [](const CaptureRow& r) {
    std::cout << "t=" << r.t << " step=" << r.step << " mass=" << r.mass << " H_rel=" << r.H_rel << " D=" << r.D
              << "\n";
  });
  const fs::path out(o.out);
  write_timeseries_csv((out / "timeseries.csv").string(), h.rows);
  if (cfg.run.store_phases) save_run((out / "run.cbor").string(), cfg, config_base_dir(o.config), h);
  if (o.traces) write_traces_csv((out / "traces.csv").string(), p.grid, h.log);
  std::cout << "steps=" << h.summary.steps << " dt in [" << h.summary.dt_min << ", " << h.summary.dt_max << "]\n";
  return finish(simulate_certificate(cfg, h), (out / "certificate.json").string());
}

int verify(const Options& o) {
  if (!o.renorm) throw ConfigError("verify: only --renorm is available");
  const std::string path = o.run_path.empty() ? (fs::path(o.out) / "run.cbor").string() : o.run_path;
  const StoredRun stored = load_run(path);
  const SimConfig cfg = parse_config(stored.config_ini, o.sets, stored.base_dir);
  const std::string out =
      o.run_path.empty() ? o.out : fs::absolute(o.run_path).parent_path().string();
  return finish(verify_certificate(cfg, stored), (fs::path(out) / "verify_certificate.json").string());
}

int sweep(const Options& o) {
  const SimConfig cfg = load_config(o.config, overrides(o));
  const SweepReport rep = n_sweep(cfg.problem(), cfg.run, cfg.initial_field(), cfg.sweep_levels);
  const std::string csv = (fs::path(o.out) / "sweep.csv").string();
  write_sweep_csv(csv, rep);
  std::cout << "wrote " << csv << "\n";
  return finish(sweep_certificate(cfg, rep), (fs::path(o.out) / "sweep_certificate.json").string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truncated non-cutoff Boltzmann solver on a slab"};
  app.require_subcommand(1);
  Options o;
  auto* ck = app.add_subcommand("check-kernel", "kernel assumption report");
  auto* ca = app.add_subcommand("cancellation", "S profile and T bound certificate");
  auto* si = app.add_subcommand("simulate", "run the slab or homogeneous problem");
  auto* ve = app.add_subcommand("verify", "weak-form checks on a stored run");
  auto* sw = app.add_subcommand("sweep-n", "compare runs over truncation levels");
  for (auto* s : {ck, ca, si, ve, sw}) add_common(s, o);
  si->add_flag("--traces", o.traces, "also write traces.csv");
  ve->add_flag("--renorm", o.renorm, "renormalized residuals and norm report (default)");
  ve->add_option("--run", o.run_path, "stored run (default OUT/run.cbor)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (ck->parsed()) return check_kernel(o);
    if (ca->parsed()) return cancellation(o);
    if (si->parsed()) return simulate(o);
    if (ve->parsed()) return verify(o);
    return sweep(o);
  } catch (const ConfigError& e) {  // includes CflViolation
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
