#include "boltzslab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace boltzslab {

namespace pt = boost::property_tree;

namespace {

// Every accepted key with its default, in output order.
const std::vector<std::pair<std::string, std::string>>& known_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"kernel.kind", "inverse_power"},
      {"kernel.s", "5"},
      {"kernel.K", "1"},
      {"kernel.theta_support", "1.5707963267948966"},
      {"kernel.gamma", "0"},
      {"kernel.table", ""},
      {"grid.n_per_axis", "12"},
      {"grid.v_max", "6"},
      {"mesh.length", "2"},
      {"mesh.n_cells", "16"},
      {"sphere.n_theta", "16"},
      {"sphere.n_azimuth", "8"},
      {"collision.n", "8"},
      {"collision.damping", "true"},
      {"collision.mode", "exact"},
      {"collision.samples", "4096"},
      {"collision.seed", ""},
      {"collision.projection", "weighted"},
      {"boundary.left_mode", "vacuum"},
      {"boundary.left_rho_w", "1"},
      {"boundary.left_u_w", "0,0,0"},
      {"boundary.left_T_w", "1"},
      {"boundary.left_table", ""},
      {"boundary.right_mode", "vacuum"},
      {"boundary.right_rho_w", "1"},
      {"boundary.right_u_w", "0,0,0"},
      {"boundary.right_T_w", "1"},
      {"boundary.right_table", ""},
      {"boundary.check_entropy_bound", "true"},
      {"initial.kind", "maxwellian"},
      {"initial.rho", "1"},
      {"initial.T", "1"},
      {"initial.u", "0,0,0"},
      {"initial.separation", "1.5"},
      {"initial.mollify", "true"},
      {"run.horizon", "1"},
      {"run.dt_policy", "auto"},
      {"run.dt", "0"},
      {"run.stability", "0.5"},
      {"run.capture_stride", "1"},
      {"run.snapshots", ""},
      {"run.homogeneous", "false"},
      {"run.collisions", "true"},
      {"run.store_phases", "true"},
      {"run.workers", "1"},
      {"verify.delta", "1"},
      {"sweep.levels", "4,8,16"},
  };
  return keys;
}

const std::map<std::string, std::string>& presets() {
  static const std::map<std::string, std::string> p = {
      {"homogeneous-relaxation",
       "; space-homogeneous relaxation of two noisy beams\n"
       "[kernel]\nkind = inverse_power\ns = 5\nK = 1\n"
       "[grid]\nn_per_axis = 12\nv_max = 6\n"
       "[mesh]\nlength = 1\nn_cells = 1\n"
       "[collision]\nn = 8\n"
       "[initial]\nkind = random\nT = 0.6\nseparation = 1.5\nmollify = false\n"
       "[run]\nhomogeneous = true\nhorizon = 0.25\n"},
      {"slab-hot-wall",
       "; slab between a hot wall (left) and a cold wall (right)\n"
       "[kernel]\nkind = inverse_power\ns = 5\nK = 0.1\n"
       "[grid]\nn_per_axis = 12\nv_max = 6\n"
       "[mesh]\nlength = 8\nn_cells = 16\n"
       "[collision]\nn = 8\n"
       "[boundary]\nleft_mode = maxwellian\nleft_rho_w = 1\nleft_T_w = 2\n"
       "right_mode = maxwellian\nright_rho_w = 1\nright_T_w = 1\n"
       "[initial]\nkind = maxwellian\nrho = 1\nT = 1\n"
       "[run]\nhorizon = 1\n"},
      {"coulomb-endpoint",
       "; s = 2: gamma = -3 and s' = 2, outside the admissible range but finite once truncated\n"
       "[kernel]\nkind = inverse_power\ns = 2\nK = 0.01\n"
       "[grid]\nn_per_axis = 12\nv_max = 6\n"
       "[mesh]\nlength = 4\nn_cells = 8\n"
       "[collision]\nn = 8\n"
       "[boundary]\nleft_mode = maxwellian\nleft_T_w = 1.5\nright_mode = maxwellian\n"
       "[initial]\nkind = maxwellian\n"
       "[run]\nhorizon = 0.5\n"},
  };
  return p;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

class Values {
 public:
  explicit Values(std::map<std::string, std::string> v) : v_(std::move(v)) {}

  const std::string& str(const std::string& key) const { return v_.at(key); }

  double num(const std::string& key) const {
    const std::string& s = str(key);
    try {
      std::size_t pos = 0;
      const double x = std::stod(s, &pos);
      if (pos != s.size() || !std::isfinite(x)) throw std::invalid_argument(s);
      return x;
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected a finite number, got '" + s + "'");
    }
  }

  int integer(const std::string& key) const {
    const double x = num(key);
    if (x != std::floor(x) || std::abs(x) > 1e9) throw ConfigError(key + ": expected an integer, got '" + str(key) + "'");
    return static_cast<int>(x);
  }

  bool flag(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(key + ": expected true or false, got '" + s + "'");
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      try {
        std::size_t pos = 0;
        out.push_back(std::stod(item, &pos));
        if (pos != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ConfigError(key + ": bad list entry '" + item + "'");
      }
    }
    return out;
  }

  Vec3 vec(const std::string& key) const {
    const auto l = list(key);
    if (l.size() != 3) throw ConfigError(key + ": expected three comma-separated numbers");
    return {l[0], l[1], l[2]};
  }

 private:
  std::map<std::string, std::string> v_;
};

CrossSectionSpec read_kernel(const Values& v, const std::string& base_dir) {
  const std::string kind = v.str("kernel.kind");
  const double support = v.num("kernel.theta_support");
  if (kind == "inverse_power") return CrossSectionSpec::inverse_power(v.num("kernel.s"), v.num("kernel.K"), support);
  if (kind == "hard_sphere") return CrossSectionSpec::hard_sphere(support);
  if (kind == "tabulated") {
    const std::string rel = v.str("kernel.table");
    if (rel.empty()) throw ConfigError("kernel.table is required for a tabulated kernel");
    const std::filesystem::path path = std::filesystem::path(base_dir) / rel;
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open kernel table " + path.string());
    std::vector<double> th, b;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      std::stringstream ss(line);
      std::string a, c;
      std::getline(ss, a, ',');
      std::getline(ss, c, ',');
      try {
        const double ta = std::stod(a), tb = std::stod(c);
        th.push_back(ta);
        b.push_back(tb);
      } catch (const std::exception&) {
        if (lineno == 1) continue;  // header
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'theta,b'");
      }
    }
    return CrossSectionSpec::tabulated(th, b, v.num("kernel.gamma"), support);
  }
  throw ConfigError("kernel.kind must be inverse_power, hard_sphere or tabulated (got '" + kind + "')");
}

FaceInflow read_face(const Values& v, const std::string& side, const VelocityGrid& grid, const std::string& base_dir) {
  const std::string mode = v.str("boundary." + side + "_mode");
  if (mode == "vacuum") return FaceInflow::vacuum();
  if (mode == "maxwellian") {
    const double rho = v.num("boundary." + side + "_rho_w"), T = v.num("boundary." + side + "_T_w");
    if (!(rho >= 0.0)) throw ConfigError("boundary." + side + "_rho_w must be >= 0");
    if (!(T > 0.0)) throw ConfigError("boundary." + side + "_T_w must be > 0");
    return FaceInflow::maxwellian({rho, v.vec("boundary." + side + "_u_w"), T});
  }
  if (mode == "table") {
    const std::string rel = v.str("boundary." + side + "_table");
    if (rel.empty()) throw ConfigError("boundary." + side + "_table is required for table mode");
    const std::string path = (std::filesystem::path(base_dir) / rel).string();
    return FaceInflow::tabulated(std::make_shared<InflowTable>(InflowTable::from_csv(path, grid)));
  }
  throw ConfigError("boundary." + side + "_mode must be vacuum, maxwellian or table (got '" + mode + "')");
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [k, _] : presets()) out.push_back(k);
  return out;
}

std::string preset_text(const std::string& name) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw ConfigError("unknown preset '" + name + "'");
  return it->second;
}

SimConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides,
                       const std::string& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream is(ini_text);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  std::map<std::string, std::string> values;
  for (const auto& [k, d] : known_keys()) values[k] = d;
  auto assign = [&](const std::string& key, const std::string& val) {
    if (!values.count(key)) throw ConfigError("unknown config key '" + key + "'");
    values[key] = trim(val);
  };
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config key '" + section + "' outside any section");
    for (const auto& [key, leaf] : body) assign(section + "." + key, leaf.data());
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    assign(trim(o.substr(0, eq)), o.substr(eq + 1));
  }
  const Values v(values);

  SimConfig c;
  c.kernel = read_kernel(v, base_dir);
  c.n = v.integer("collision.n");
  if (c.n < 1) throw ConfigError("collision.n must be >= 1");
  c.damping = v.flag("collision.damping");
  c.n_theta = v.integer("sphere.n_theta");
  c.n_azimuth = v.integer("sphere.n_azimuth");
  if (c.n_theta < 1 || c.n_azimuth < 1) throw ConfigError("sphere.n_theta and sphere.n_azimuth must be >= 1");
  const std::string mode = v.str("collision.mode");
  if (mode == "exact") c.mode = CollisionMode::ExactSum;
  else if (mode == "subsampled") c.mode = CollisionMode::Subsampled;
  else throw ConfigError("collision.mode must be exact or subsampled (got '" + mode + "')");
  c.samples = v.integer("collision.samples");
  if (c.samples < 1) throw ConfigError("collision.samples must be >= 1");
  if (!v.str("collision.seed").empty()) {
    const double s = v.num("collision.seed");
    if (s < 0 || s != std::floor(s)) throw ConfigError("collision.seed must be a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (c.mode == CollisionMode::Subsampled && !c.seed)
    throw ConfigError("subsampled collisions need a seed (collision.seed or --seed)");
  c.projection = projection_kind_from_string(v.str("collision.projection"));

  c.n_per_axis = v.integer("grid.n_per_axis");
  c.v_max = v.num("grid.v_max");
  if (c.n_per_axis < 2 || c.n_per_axis % 2 != 0) throw ConfigError("grid.n_per_axis must be even and >= 2");
  if (!(c.v_max > 0.0)) throw ConfigError("grid.v_max must be positive");
  c.length = v.num("mesh.length");
  c.n_cells = v.integer("mesh.n_cells");
  if (!(c.length > 0.0) || c.n_cells < 1) throw ConfigError("mesh.length must be > 0 and mesh.n_cells >= 1");
  const VelocityGrid grid(c.n_per_axis, c.v_max);

  c.boundary.left = read_face(v, "left", grid, base_dir);
  c.boundary.right = read_face(v, "right", grid, base_dir);
  c.boundary.check_entropy_bound = v.flag("boundary.check_entropy_bound");

  const std::string ik = v.str("initial.kind");
  if (ik == "maxwellian") c.initial.kind = InitialSpec::Kind::Maxwellian;
  else if (ik == "bimodal") c.initial.kind = InitialSpec::Kind::Bimodal;
  else if (ik == "random") c.initial.kind = InitialSpec::Kind::Random;
  else throw ConfigError("initial.kind must be maxwellian, bimodal or random (got '" + ik + "')");
  c.initial.rho = v.num("initial.rho");
  c.initial.T = v.num("initial.T");
  c.initial.u = v.vec("initial.u");
  c.initial.separation = v.num("initial.separation");
  c.initial.mollify = v.flag("initial.mollify");
  if (!(c.initial.rho >= 0.0) || !(c.initial.T > 0.0)) throw ConfigError("initial.rho must be >= 0 and initial.T > 0");

  RunConfig& r = c.run;
  r.horizon = v.num("run.horizon");
  r.dt_policy = dt_policy_from_string(v.str("run.dt_policy"));
  r.dt = v.num("run.dt");
  r.stability = v.num("run.stability");
  r.capture_stride = v.integer("run.capture_stride");
  r.snapshot_times = v.list("run.snapshots");
  r.homogeneous = v.flag("run.homogeneous");
  r.collisions = v.flag("run.collisions");
  r.store_phases = v.flag("run.store_phases");
  r.workers = v.integer("run.workers");
  if (r.homogeneous) {
    c.n_cells = 1;
    values["mesh.n_cells"] = "1";
  }
  c.beta_delta = v.num("verify.delta");
  if (!(c.beta_delta > 0.0)) throw ConfigError("verify.delta must be positive");
  c.sweep_levels.clear();
  for (double x : v.list("sweep.levels")) {
    if (x < 1 || x != std::floor(x)) throw ConfigError("sweep.levels must be positive integers");
    c.sweep_levels.push_back(static_cast<int>(x));
  }

  r.validate(c.problem());

  // resolved INI, fixed key order
  std::ostringstream os;
  std::string section;
  for (const auto& [key, _] : known_keys()) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << key.substr(dot + 1) << " = " << values[key] << '\n';
  }
  c.ini = os.str();
  return c;
}

SimConfig load_config(const std::string& source, const std::vector<std::string>& overrides) {
  if (presets().count(source) && !std::filesystem::exists(source)) return parse_config(preset_text(source), overrides);
  std::ifstream is(source);
  if (!is) throw ConfigError("cannot open config '" + source + "' (not a file or preset name)");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), overrides, std::filesystem::path(source).parent_path().string().empty()
                                               ? "."
                                               : std::filesystem::path(source).parent_path().string());
}

Problem SimConfig::problem() const {
  Problem p{VelocityGrid(n_per_axis, v_max), SlabMesh(length, n_cells),
            CollisionConfig::make(TruncatedKernel(kernel, n, damping), n_theta, n_azimuth), boundary};
  p.collision.mode = mode;
  p.collision.subsample_pairs = samples;
  p.collision.seed = seed;
  p.collision.projection = projection;
  return p;
}

DistributionField SimConfig::initial_field() const {
  const VelocityGrid grid(n_per_axis, v_max);
  DistributionField f(n_cells, grid.size());
  if (initial.kind == InitialSpec::Kind::Maxwellian) {
    const auto M = maxwellian(initial.rho, initial.u, initial.T, grid);
    for (int c = 0; c < n_cells; ++c) std::copy(M.begin(), M.end(), f.cell(c).begin());
    return f;
  }
  const Vec3 du(initial.separation, 0.0, 0.0);
  const auto a = maxwellian(0.5 * initial.rho, initial.u + du, initial.T, grid);
  const auto b = maxwellian(0.5 * initial.rho, initial.u - du, initial.T, grid);
  std::mt19937_64 rng(seed.value_or(1));
  std::uniform_real_distribution<double> U(0.5, 1.5);
  for (int c = 0; c < n_cells; ++c)
    for (int i = 0; i < grid.size(); ++i)
      f.at(c, i) = (a[i] + b[i]) * (initial.kind == InitialSpec::Kind::Random ? U(rng) : 1.0);
  return f;
}

DistributionField SimConfig::prepared_initial() const {
  const DistributionField f0 = initial_field();
  if (!initial.mollify) return f0;
  const Problem p = problem();
  return mollify_initial(f0, p.grid, p.mesh, n);
}

}  // namespace boltzslab
