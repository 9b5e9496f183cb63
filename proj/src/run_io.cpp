#include "boltzslab/run_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace boltzslab {

namespace {

namespace fs = std::filesystem;

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  ensure_parent(path);
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw ConfigError("cannot write " + path);
  return os;
}

Json vec3(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }
Vec3 vec3(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

bool holds(double value, const std::string& rel, double tol) {
  if (std::isnan(value) || std::isnan(tol)) return false;
  if (rel == "<=") return value <= tol;
  if (rel == ">=") return value >= tol;
  if (rel == "<") return value < tol;
  if (rel == "==") return value == tol;
  throw InvariantError("unknown relation " + rel);
}

// ---- stored-run encoding ----

Json field_json(const DistributionField& f) {
  return {{"n_cells", f.n_cells}, {"n_vel", f.n_vel}, {"time", f.time}, {"values", f.values}};
}

DistributionField field_from(const Json& j) {
  DistributionField f(j.at("n_cells").get<int>(), j.at("n_vel").get<int>());
  f.time = j.at("time").get<double>();
  f.values = j.at("values").get<std::vector<double>>();
  if (f.values.size() != static_cast<std::size_t>(f.n_cells) * f.n_vel) throw DataError("stored field has wrong size");
  return f;
}

Json face_json(const FaceFlux& f) {
  return {{"mass_in", f.mass_in},       {"mass_out", f.mass_out},       {"momentum_in", vec3(f.momentum_in)},
          {"momentum_out", vec3(f.momentum_out)}, {"energy_in", f.energy_in}, {"energy_out", f.energy_out},
          {"entropy_in", f.entropy_in}, {"entropy_out", f.entropy_out}, {"flogf_in", f.flogf_in},
          {"flogf_out", f.flogf_out},   {"abslog_in", f.abslog_in},     {"abslog_out", f.abslog_out},
          {"weighted_in", f.weighted_in}, {"weighted_out", f.weighted_out}};
}

FaceFlux face_from(const Json& j) {
  FaceFlux f;
  f.mass_in = j.at("mass_in");
  f.mass_out = j.at("mass_out");
  f.momentum_in = vec3(j.at("momentum_in"));
  f.momentum_out = vec3(j.at("momentum_out"));
  f.energy_in = j.at("energy_in");
  f.energy_out = j.at("energy_out");
  f.entropy_in = j.at("entropy_in");
  f.entropy_out = j.at("entropy_out");
  f.flogf_in = j.at("flogf_in");
  f.flogf_out = j.at("flogf_out");
  f.abslog_in = j.at("abslog_in");
  f.abslog_out = j.at("abslog_out");
  f.weighted_in = j.at("weighted_in");
  f.weighted_out = j.at("weighted_out");
  return f;
}

Json row_json(const CaptureRow& r) {
  return {{"t", r.t},
          {"step", r.step},
          {"mass", r.mass},
          {"momentum", vec3(r.momentum)},
          {"energy", r.energy},
          {"H_rel", r.H_rel},
          {"D", r.D},
          {"D_integral", r.D_integral},
          {"mass_in", r.mass_in},
          {"mass_out", r.mass_out},
          {"momentum_in", vec3(r.momentum_in)},
          {"momentum_out", vec3(r.momentum_out)},
          {"energy_in", r.energy_in},
          {"energy_out", r.energy_out},
          {"entropy_flux_in", r.entropy_flux_in},
          {"entropy_flux_out", r.entropy_flux_out},
          {"clamp_mass", r.clamp_mass},
          {"clamp_energy", r.clamp_energy},
          {"collision_entropy_error", r.collision_entropy_error}};
}

CaptureRow row_from(const Json& j) {
  CaptureRow r;
  r.t = j.at("t");
  r.step = j.at("step");
  r.mass = j.at("mass");
  r.momentum = vec3(j.at("momentum"));
  r.energy = j.at("energy");
  r.H_rel = j.at("H_rel");
  r.D = j.at("D");
  r.D_integral = j.at("D_integral");
  r.mass_in = j.at("mass_in");
  r.mass_out = j.at("mass_out");
  r.momentum_in = vec3(j.at("momentum_in"));
  r.momentum_out = vec3(j.at("momentum_out"));
  r.energy_in = j.at("energy_in");
  r.energy_out = j.at("energy_out");
  r.entropy_flux_in = j.at("entropy_flux_in");
  r.entropy_flux_out = j.at("entropy_flux_out");
  r.clamp_mass = j.at("clamp_mass");
  r.clamp_energy = j.at("clamp_energy");
  r.collision_entropy_error = j.at("collision_entropy_error");
  return r;
}

Json summary_json(const RunSummary& s) {
  return {{"steps", s.steps},
          {"halvings", s.halvings},
          {"dt_min", s.dt_min},
          {"dt_max", s.dt_max},
          {"max_mass_residual", s.max_mass_residual},
          {"max_momentum_residual", vec3(s.max_momentum_residual)},
          {"max_energy_residual", s.max_energy_residual},
          {"clamp_energy_ratio", s.clamp_energy_ratio},
          {"max_entropy_excess", s.max_entropy_excess},
          {"collision_entropy_error", s.collision_entropy_error},
          {"max_local_mass_residual", s.max_local_mass_residual},
          {"max_local_momentum_residual", s.max_local_momentum_residual},
          {"H_monotone", s.H_monotone},
          {"max_H_increase", s.max_H_increase}};
}

RunSummary summary_from(const Json& j) {
  RunSummary s;
  s.steps = j.at("steps");
  s.halvings = j.at("halvings");
  s.dt_min = j.at("dt_min");
  s.dt_max = j.at("dt_max");
  s.max_mass_residual = j.at("max_mass_residual");
  s.max_momentum_residual = vec3(j.at("max_momentum_residual"));
  s.max_energy_residual = j.at("max_energy_residual");
  s.clamp_energy_ratio = j.at("clamp_energy_ratio");
  s.max_entropy_excess = j.at("max_entropy_excess");
  s.collision_entropy_error = j.at("collision_entropy_error");
  s.max_local_mass_residual = j.at("max_local_mass_residual");
  s.max_local_momentum_residual = j.at("max_local_momentum_residual");
  s.H_monotone = j.at("H_monotone");
  s.max_H_increase = j.at("max_H_increase");
  return s;
}

Json phase_json(const PhaseRecord& p) {
  Json j = {{"kind", p.kind == PhaseRecord::Kind::Transport ? "transport" : "collision"},
            {"time", p.time},
            {"dt", p.dt},
            {"before", field_json(p.before)}};
  if (p.kind == PhaseRecord::Kind::Transport) {
    j["trace"] = {{"time", p.trace.time},         {"dt", p.trace.dt},
                  {"left_out", p.trace.left_out}, {"right_out", p.trace.right_out},
                  {"left_in", p.trace.left_in},   {"right_in", p.trace.right_in}};
  } else {
    j["increment"] = p.increment;
  }
  return j;
}

PhaseRecord phase_from(const Json& j) {
  PhaseRecord p;
  const std::string kind = j.at("kind");
  p.kind = kind == "transport" ? PhaseRecord::Kind::Transport : PhaseRecord::Kind::Collision;
  p.time = j.at("time");
  p.dt = j.at("dt");
  p.before = field_from(j.at("before"));
  if (p.kind == PhaseRecord::Kind::Transport) {
    const Json& t = j.at("trace");
    p.trace.time = t.at("time");
    p.trace.dt = t.at("dt");
    p.trace.left_out = t.at("left_out").get<std::vector<double>>();
    p.trace.right_out = t.at("right_out").get<std::vector<double>>();
    p.trace.left_in = t.at("left_in").get<std::vector<double>>();
    p.trace.right_in = t.at("right_in").get<std::vector<double>>();
  } else {
    p.increment = j.at("increment").get<std::vector<double>>();
  }
  return p;
}

}  // namespace

void Certificate::check(const std::string& name, double value, const std::string& relation, double tolerance,
                        const Json& disc) {
  const bool ok = holds(value, relation, tolerance);
  doc["checks"].push_back(
      {{"name", name}, {"value", value}, {"relation", relation}, {"tolerance", tolerance}, {"pass", ok},
       {"discretization", disc}});
  if (!ok && pass) {
    pass = false;
    std::ostringstream os;
    os << std::setprecision(6) << name << ": " << value << " " << relation << " " << tolerance << " fails";
    failure = os.str();
  }
}

void Certificate::info(const std::string& name, double value, const Json& disc) {
  doc["reported"].push_back({{"name", name}, {"value", value}, {"tolerance", nullptr}, {"discretization", disc}});
}

Json discretization_json(const SimConfig& cfg) {
  const VelocityGrid g(cfg.n_per_axis, cfg.v_max);
  const SlabMesh m = cfg.run.homogeneous ? SlabMesh(1.0, 1) : SlabMesh(cfg.length, cfg.n_cells);
  return {{"n_per_axis", cfg.n_per_axis},
          {"v_max", cfg.v_max},
          {"dv", g.dv()},
          {"length", m.length},
          {"n_cells", m.n_cells},
          {"dx", m.dx()},
          {"n_theta", cfg.n_theta},
          {"n_azimuth", cfg.n_azimuth},
          {"n", cfg.n},
          {"damping", cfg.damping},
          {"kernel",
           {{"kind", to_string(cfg.kernel.kind)},
            {"s", cfg.kernel.s},
            {"K", cfg.kernel.K},
            {"gamma", cfg.kernel.gamma},
            {"sprime", cfg.kernel.sprime},
            {"theta_support", cfg.kernel.theta_support}}},
          {"collision_mode", to_string(cfg.mode)},
          {"dt_policy", to_string(cfg.run.dt_policy)},
          {"dt", cfg.run.dt},
          {"stability", cfg.run.stability},
          {"horizon", cfg.run.horizon},
          {"homogeneous", cfg.run.homogeneous}};
}

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void write_json(const std::string& path, const Json& doc) {
  auto os = open_out(path);
  os << doc.dump(2) << "\n";
}

void write_timeseries_csv(const std::string& path, const std::vector<CaptureRow>& rows) {
  auto os = open_out(path);
  os << "t,mass,px,py,pz,energy,H_rel,D,mass_in,mass_out,energy_in,energy_out,entropy_flux_in,entropy_flux_out,"
        "clamp_mass,step,D_integral,clamp_energy,collision_entropy_error\n";
  os << std::setprecision(17);
  for (const CaptureRow& r : rows)
    os << r.t << ',' << r.mass << ',' << r.momentum[0] << ',' << r.momentum[1] << ',' << r.momentum[2] << ','
       << r.energy << ',' << r.H_rel << ',' << r.D << ',' << r.mass_in << ',' << r.mass_out << ',' << r.energy_in
       << ',' << r.energy_out << ',' << r.entropy_flux_in << ',' << r.entropy_flux_out << ',' << r.clamp_mass << ','
       << r.step << ',' << r.D_integral << ',' << r.clamp_energy << ',' << r.collision_entropy_error << '\n';
}

void write_traces_csv(const std::string& path, const VelocityGrid& grid, const EvolutionLog& log) {
  auto os = open_out(path);
  os << "t,face,v1,v2,v3,gamma_f\n" << std::setprecision(17);
  for (const PhaseRecord& p : log.phases) {
    if (p.kind != PhaseRecord::Kind::Transport) continue;
    const double t = p.trace.time;
    auto emit = [&](const char* face, const std::vector<double>& vals) {
      for (int i = 0; i < grid.size(); ++i) {
        if (vals[i] == 0.0) continue;
        const Vec3& v = grid.node(i);
        os << t << ',' << face << ',' << v[0] << ',' << v[1] << ',' << v[2] << ',' << vals[i] << '\n';
      }
    };
    emit("left_out", p.trace.left_out);
    emit("left_in", p.trace.left_in);
    emit("right_out", p.trace.right_out);
    emit("right_in", p.trace.right_in);
  }
}

Certificate kernel_certificate(const SimConfig& cfg, const AssumptionReport& rep) {
  Certificate c;
  Json disc = discretization_json(cfg);
  disc["truncation_level"] = rep.truncation_level;
  auto moment = [](const MomentResult& m) {
    return Json{{"value", m.value},
                {"divergent", m.divergent},
                {"converged", m.converged},
                {"nodes", m.nodes},
                {"refinement_delta", m.refinement_delta}};
  };
  Json growth = Json::array();
  for (const AlphaGrowthRow& g : rep.m_alpha_growth)
    growth.push_back({{"alpha", g.alpha},
                      {"radii", g.radii},
                      {"ratios", g.ratios},
                      {"divergent", g.divergent},
                      {"nonincreasing_tail", g.nonincreasing_tail}});
  c.doc["kind"] = "check-kernel";
  c.doc["discretization"] = disc;
  c.doc["report"] = {{"borderline_split", rep.borderline_split},
                     {"mu0", moment(rep.mu0)},
                     {"angular_mu", moment(rep.angular_mu)},
                     {"m1_local_integrable", rep.m1_local_integrable},
                     {"m1_partial_sums", rep.m1_partial_sums},
                     {"m_alpha_growth", growth},
                     {"growth_assumption_holds", rep.growth_assumption_holds},
                     {"angular_partial_sums", rep.angular_partial_sums},
                     {"angular_divergence", rep.angular_divergence},
                     {"angular_monotone", rep.angular_monotone},
                     {"grad_cutoff_1", rep.grad_cutoff_1},
                     {"grad_cutoff_2", rep.grad_cutoff_2},
                     {"grad2_ratios", rep.grad2_ratios},
                     {"admissible", rep.admissible}};
  c.doc["checks"] = Json::array();
  c.check("admissible", rep.admissible ? 1.0 : 0.0, "==", 1.0, disc);
  c.info("truncated_angular_mass", truncated_angular_mass(cfg.kernel, cfg.n), disc);
  return c;
}

std::vector<double> cancellation_radii() { return {0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0}; }

void write_s_profile_csv(const std::string& path, const SProfile& prof) {
  auto os = open_out(path);
  os << "z,S,S_over_z2\n" << std::setprecision(17);
  for (std::size_t i = 0; i < prof.radii.size(); ++i)
    os << prof.radii[i] << ',' << prof.values[i] << ',' << prof.growth_ratios[i] << '\n';
}

Certificate cancellation_certificate(const SimConfig& cfg, const SProfile& prof, const TBoundReport& coarse,
                                     const TBoundReport& fine) {
  Certificate c;
  const Json disc = discretization_json(cfg);
  c.doc["kind"] = "cancellation";
  c.doc["discretization"] = disc;
  c.doc["checks"] = Json::array();
  Json sdisc = disc;
  sdisc["truncated"] = false;
  for (std::size_t i = 0; i < prof.radii.size(); ++i) {
    Json d = sdisc;
    d["z"] = prof.radii[i];
    d["refinement_delta"] = prof.refinement_deltas[i];
    c.info("S(z=" + std::to_string(prof.radii[i]).substr(0, 5) + ")", prof.values[i], d);
  }
  // strict decrease of S(z)/z² over the large radii
  const std::vector<double> big = {10.0, 30.0, 100.0};
  std::vector<double> ratios;
  for (double z : big)
    for (std::size_t i = 0; i < prof.radii.size(); ++i)
      if (prof.radii[i] == z) ratios.push_back(prof.growth_ratios[i]);
  if (cfg.kernel.sprime + cfg.kernel.gamma < 2.0 && ratios.size() == big.size()) {
    for (std::size_t i = 1; i < ratios.size(); ++i)
      c.check("S_over_z2(" + std::to_string(static_cast<int>(big[i])) + ") / S_over_z2(" +
                  std::to_string(static_cast<int>(big[i - 1])) + ")",
              ratios[i] / ratios[i - 1], "<", 1.0, sdisc);
  }
  auto tdisc = [&](const TBoundReport& r) {
    Json d = disc;
    d["t_quadrature"] = {{"n_theta", r.quad.n_theta}, {"n_azimuth", r.quad.n_azimuth}};
    d["evaluations"] = r.evaluations;
    return d;
  };
  c.check("T_bound_violations", coarse.violations, "==", 0.0, tdisc(coarse));
  c.check("T_bound_violations_doubled", fine.violations, "==", 0.0, tdisc(fine));
  c.info("T_fitted_C", coarse.fitted_C, tdisc(coarse));
  c.info("T_fitted_C_doubled", fine.fitted_C, tdisc(fine));
  c.info("T_theory_C", coarse.theory_C, tdisc(coarse));
  const double drift = coarse.fitted_C > 0.0 ? std::abs(fine.fitted_C - coarse.fitted_C) / coarse.fitted_C : 0.0;
  c.check("T_fitted_C_relative_change", drift, "<=", 0.2, tdisc(fine));
  return c;
}

Certificate simulate_certificate(const SimConfig& cfg, const RunHistory& hist) {
  Certificate c;
  const RunSummary& s = hist.summary;
  Json disc = discretization_json(cfg);
  disc["steps"] = s.steps;
  disc["dt_min"] = s.dt_min;
  disc["dt_max"] = s.dt_max;
  disc["dt_halvings"] = s.halvings;
  c.doc["kind"] = "simulate";
  c.doc["discretization"] = disc;
  c.doc["config"] = cfg.ini;
  c.doc["checks"] = Json::array();
  c.check("mass_identity", s.max_mass_residual, "<=", 1e-12, disc);
  for (int k = 0; k < 3; ++k)
    c.check("momentum_identity_" + std::string(1, "xyz"[k]), s.max_momentum_residual[k], "<=", 1e-12, disc);
  c.check("energy_identity", s.max_energy_residual, "<=", 1e-12, disc);
  c.check("clamp_energy_ratio", s.clamp_energy_ratio, "<=", 1e-8, disc);
  c.check("local_mass_balance", s.max_local_mass_residual, "<=", 1e-12, disc);
  const double H0 = hist.rows.empty() ? 0.0 : hist.rows.front().H_rel;
  c.check("entropy_inequality_excess", s.max_entropy_excess, "<=",
          s.collision_entropy_error + 1e-12 * std::max(1.0, std::abs(H0)), disc);
  if (cfg.run.homogeneous) {
    c.check("H_increase_over_H0", s.max_H_increase, "<=", 1e-10, disc);
    c.doc["H_monotone"] = s.H_monotone;
  }
  c.info("local_momentum_balance", s.max_local_momentum_residual, disc);
  c.info("collision_entropy_error", s.collision_entropy_error, disc);
  if (!hist.rows.empty()) {
    const CaptureRow& last = hist.rows.back();
    c.info("H_rel_initial", H0, disc);
    c.info("H_rel_final", last.H_rel, disc);
    c.info("D_integral", last.D_integral, disc);
    c.info("energy_final", last.energy, disc);
    c.info("clamp_mass", last.clamp_mass, disc);
  }
  return c;
}

void save_run(const std::string& path, const SimConfig& cfg, const std::string& base_dir, const RunHistory& hist) {
  Json j;
  j["format"] = "boltzslab-run-1";
  j["config"] = cfg.ini;
  j["base_dir"] = base_dir;
  j["rows"] = Json::array();
  for (const CaptureRow& r : hist.rows) j["rows"].push_back(row_json(r));
  j["ledger"] = {{"left", face_json(hist.ledger.left)},
                 {"right", face_json(hist.ledger.right)},
                 {"phases", hist.ledger.phases}};
  j["summary"] = summary_json(hist.summary);
  j["log"] = {{"initial", field_json(hist.log.initial)},
              {"final", field_json(hist.log.final_state)},
              {"phases", Json::array()}};
  for (const PhaseRecord& p : hist.log.phases) j["log"]["phases"].push_back(phase_json(p));
  j["snapshots"] = Json::array();
  for (const auto& f : hist.snapshots) j["snapshots"].push_back(field_json(f));
  j["final_state"] = field_json(hist.final_state);
  const std::vector<std::uint8_t> bytes = Json::to_cbor(j);
  auto os = open_out(path, true);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

StoredRun load_run(const std::string& path) {
  const std::string raw = read_text(path);
  Json j;
  try {
    j = Json::from_cbor(raw.begin(), raw.end());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("stored run " + path + " is not readable: " + e.what());
  }
  if (j.value("format", "") != "boltzslab-run-1") throw DataError(path + " is not a stored run");
  StoredRun s;
  try {
    s.config_ini = j.at("config");
    s.base_dir = j.at("base_dir");
    RunHistory& h = s.history;
    for (const Json& r : j.at("rows")) h.rows.push_back(row_from(r));
    h.ledger.left = face_from(j.at("ledger").at("left"));
    h.ledger.right = face_from(j.at("ledger").at("right"));
    h.ledger.phases = j.at("ledger").at("phases");
    h.summary = summary_from(j.at("summary"));
    h.log.initial = field_from(j.at("log").at("initial"));
    h.log.final_state = field_from(j.at("log").at("final"));
    for (const Json& p : j.at("log").at("phases")) h.log.phases.push_back(phase_from(p));
    for (const Json& f : j.at("snapshots")) h.snapshots.push_back(field_from(f));
    h.final_state = field_from(j.at("final_state"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("stored run " + path + " is incomplete: " + e.what());
  }
  return s;
}

Certificate verify_certificate(const SimConfig& cfg, const StoredRun& run) {
  const RunHistory& h = run.history;
  const EvolutionLog& log = h.log;
  if (h.summary.steps > 0 && log.phases.empty())
    throw DataError("stored run has no phase log; rerun with run.store_phases = true");
  const Problem p = cfg.problem();
  const VelocityGrid& g = p.grid;
  const SlabMesh mesh = cfg.run.homogeneous ? SlabMesh(1.0, 1) : p.mesh;
  const BetaFunction beta(cfg.beta_delta);

  Certificate c;
  Json disc = discretization_json(cfg);
  disc["steps"] = h.summary.steps;
  disc["dt_min"] = h.summary.dt_min;
  disc["dt_max"] = h.summary.dt_max;
  disc["beta_delta"] = cfg.beta_delta;
  c.doc["kind"] = "verify";
  c.doc["discretization"] = disc;
  c.doc["config"] = cfg.ini;
  c.doc["checks"] = Json::array();

  // the ledger must be reproducible from the stored traces
  const GreenReport green =
      green_identity_check(g, mesh, log, h.ledger, identity_renormalizer(), default_green_battery(mesh));
  const FaceFlux tot = h.ledger.total();
  c.check("ledger_from_traces", green.ledger_mismatch, "<=",
          1e-12 * std::max(1.0, tot.mass_in + tot.mass_out), disc);

  std::vector<SlabTestFunction> battery = default_green_battery(mesh);
  const std::vector<SlabTestFunction> renorm_battery = renorm_psi_battery(mesh, g);
  battery.insert(battery.end(), renorm_battery.begin(), renorm_battery.end());
  for (const SlabTestFunction& psi : battery) {
    const WeakFormTerms t = weak_form_terms(g, mesh, log, identity_renormalizer(), psi, WeakPairing::Discrete);
    c.check("identity_weak_form[" + psi.label + "]", std::abs(t.residual()), "<=",
            1e-12 * std::max(t.scale(), std::numeric_limits<double>::min()), disc);
  }

  for (const RenormResidualRow& r : renormalized_residual(g, mesh, log, beta, renorm_battery)) {
    c.check("renormalized_residual[" + r.label + "]", r.residual, ">=", r.collision_jensen - 1e-12 * r.scale, disc);
    c.info("collision_jensen[" + r.label + "]", r.collision_jensen, disc);
  }

  const CollisionOperator op(g, p.collision);
  const SConvolution sconv(g, p.collision.kernel);
  if (!h.snapshots.empty()) {
    const NormReport nr = lemma_norm_report(op, sconv, mesh, h.snapshots, h.ledger, beta);
    Json ndisc = disc;
    ndisc["snapshot_times"] = nr.times;
    for (std::size_t a = 0; a < nr.radii.size(); ++a) {
      const std::string R = "(R=" + std::to_string(nr.radii[a]).substr(0, 4) + ")";
      c.info("R1_sup_L1" + R, nr.r1_sup[a], ndisc);
      c.info("R2_sup_over_phi_norm" + R, nr.r2_sup[a], ndisc);
      c.check("R3_integral" + R, nr.r3_integral[a], "<=", nr.r3_bound[a], ndisc);
    }
  }

  R3SignReport sign;
  const DistributionField& fin = log.final_state.values.empty() ? h.final_state : log.final_state;
  for (int cell = 0; cell < fin.n_cells; ++cell) {
    const RenormFields rf = compute_R3(op, fin.cell(cell), beta);
    sign.terms += rf.sign.terms;
    sign.positive += rf.sign.positive;
    sign.nodal_terms += rf.sign.nodal_terms;
    sign.nodal_positive += rf.sign.nodal_positive;
  }
  // concavity makes every bracket ≤ 0, interpolated or not
  c.check("R3_positive_brackets", static_cast<double>(sign.positive), "==", 0.0, disc);
  c.check("R3_nodal_positive_brackets", static_cast<double>(sign.nodal_positive), "==", 0.0, disc);
  c.info("R3_brackets", static_cast<double>(sign.terms), disc);
  c.info("R3_nodal_brackets", static_cast<double>(sign.nodal_terms), disc);

  // δ → 0 drives β to the identity and R1, R3 to zero
  const auto mid = fin.cell(fin.n_cells / 2);
  std::vector<double> r1n, r3n;
  for (double d : {1.0, 0.1, 0.01}) {
    const BetaFunction b(d);
    double s1 = 0.0, s3 = 0.0;
    for (double x : compute_R1(op, sconv, mid, b)) s1 += std::abs(x) * g.weight();
    for (double x : compute_R3(op, mid, b).r3) s3 += std::abs(x) * g.weight();
    Json dd = disc;
    dd["beta_delta"] = d;
    dd["cell"] = fin.n_cells / 2;
    c.info("R1_L1(delta=" + std::to_string(d).substr(0, 4) + ")", s1, dd);
    c.info("R3_L1(delta=" + std::to_string(d).substr(0, 4) + ")", s3, dd);
    r1n.push_back(s1);
    r3n.push_back(s3);
  }
  for (std::size_t k = 1; k < r1n.size(); ++k) {
    if (r1n[k - 1] > 0.0) c.check("R1_delta_ratio_" + std::to_string(k), r1n[k] / r1n[k - 1], "<", 1.0, disc);
    if (r3n[k - 1] > 0.0) c.check("R3_delta_ratio_" + std::to_string(k), r3n[k] / r3n[k - 1], "<", 1.0, disc);
  }
  return c;
}

Certificate sweep_certificate(const SimConfig& cfg, const SweepReport& rep) {
  Certificate c;
  const Json disc = discretization_json(cfg);
  c.doc["kind"] = "sweep-n";
  c.doc["discretization"] = disc;
  c.doc["checks"] = Json::array();
  for (const SweepLevel& lv : rep.levels) {
    Json d = disc;
    d["n"] = lv.n;
    d["steps"] = lv.summary.steps;
    d["dt_min"] = lv.summary.dt_min;
    d["dt_max"] = lv.summary.dt_max;
    const std::string tag = "[n=" + std::to_string(lv.n) + "]";
    c.check("mass_identity" + tag, lv.summary.max_mass_residual, "<=", 1e-12, d);
    c.check("momentum_identity" + tag, lv.summary.max_momentum_residual.maxCoeff(), "<=", 1e-12, d);
    c.check("energy_identity" + tag, lv.summary.max_energy_residual, "<=", 1e-12, d);
    c.check("clamp_energy_ratio" + tag, lv.summary.clamp_energy_ratio, "<=", 1e-8, d);
    c.info("truncated_angular_mass" + tag, lv.angular_mass, d);
    c.info("floor_mass" + tag, lv.floor_mass, d);
  }
  for (std::size_t k = 0; k + 1 < rep.levels.size(); ++k)
    for (std::size_t t = 0; t < rep.times.size(); ++t) {
      Json d = disc;
      d["n_lo"] = rep.levels[k].n;
      d["n_hi"] = rep.levels[k + 1].n;
      d["t"] = rep.times[t];
      c.info("L1_distance[n=" + std::to_string(rep.levels[k].n) + "|" + std::to_string(rep.levels[k + 1].n) + "]",
             rep.distances[k][t], d);
    }
  return c;
}

void write_sweep_csv(const std::string& path, const SweepReport& rep) {
  auto os = open_out(path);
  os << "t,n_lo,n_hi,distance\n" << std::setprecision(17);
  for (std::size_t t = 0; t < rep.times.size(); ++t)
    for (std::size_t k = 0; k + 1 < rep.levels.size(); ++k)
      os << rep.times[t] << ',' << rep.levels[k].n << ',' << rep.levels[k + 1].n << ',' << rep.distances[k][t] << '\n';
}

}  // namespace boltzslab
