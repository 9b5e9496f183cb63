#include "doctest.h"

#include "boltzslab/config.hpp"

#include <filesystem>
#include <fstream>

using namespace boltzslab;

TEST_CASE("defaults") {
  const SimConfig c = parse_config("");
  CHECK(c.n_per_axis == 12);
  CHECK(c.v_max == 6.0);
  CHECK(c.n == 8);
  CHECK(c.n_theta == 16);
  CHECK(c.n_azimuth == 8);
  CHECK(c.kernel.kind == KernelKind::InversePower);
  CHECK(c.kernel.s == 5.0);
  CHECK(c.mode == CollisionMode::ExactSum);
  CHECK(c.run.dt_policy == DtPolicy::Auto);
  CHECK(c.run.store_phases);
  CHECK(c.sweep_levels == std::vector<int>{4, 8, 16});
  CHECK(c.boundary.left.wall.rho == 0.0);  // vacuum
  CHECK(c.ini.find("[kernel]\nkind = inverse_power\n") == 0);
}

TEST_CASE("resolved text round-trips") {
  for (const std::string& name : preset_names()) {
    CAPTURE(name);
    const SimConfig a = load_config(name);
    const SimConfig b = parse_config(a.ini);
    CHECK(a.ini == b.ini);
  }
  const SimConfig a = parse_config("", {"grid.n_per_axis=8", "run.snapshots=0.1,0.2"});
  CHECK(parse_config(a.ini).ini == a.ini);
}

TEST_CASE("presets") {
  CHECK(preset_names().size() == 3);
  const SimConfig h = load_config("homogeneous-relaxation");
  CHECK(h.run.homogeneous);
  CHECK(h.n_cells == 1);
  CHECK(h.initial.kind == InitialSpec::Kind::Random);
  const SimConfig s = load_config("slab-hot-wall");
  CHECK(s.boundary.left.wall.T == 2.0);
  CHECK(s.boundary.right.wall.T == 1.0);
  const SimConfig c = load_config("coulomb-endpoint");
  CHECK(c.kernel.s == 2.0);
  CHECK(c.kernel.gamma == doctest::Approx(-3.0));
  CHECK_FALSE(c.kernel.admissible());
  CHECK_THROWS_AS(load_config("no-such-preset"), ConfigError);
}

TEST_CASE("shipped preset files match the built-in presets") {
  const std::filesystem::path dir = std::filesystem::path(BOLTZSLAB_SOURCE_DIR) / "presets";
  for (const std::string& name : preset_names()) {
    CAPTURE(name);
    const std::filesystem::path file = dir / (name + ".ini");
    REQUIRE(std::filesystem::exists(file));
    CHECK(load_config(file.string()).ini == load_config(name).ini);
  }
}

TEST_CASE("overrides") {
  const SimConfig c = load_config("slab-hot-wall", {"grid.n_per_axis=8", " kernel.K = 0.5", "run.workers=3"});
  CHECK(c.n_per_axis == 8);
  CHECK(c.kernel.K == 0.5);
  CHECK(c.run.workers == 3);
  CHECK(c.ini.find("n_per_axis = 8\n") != std::string::npos);
  CHECK_THROWS_AS(parse_config("", {"grid.n_per_axis"}), ConfigError);
  CHECK_THROWS_AS(parse_config("", {"grid.nope=1"}), ConfigError);
}

TEST_CASE("rejections") {
  CHECK_THROWS_AS(parse_config("[grid]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nosuch]\nkind = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nn_per_axis = 7\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nn_per_axis = twelve\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nv_max = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[collision]\nmode = subsampled\n"), ConfigError);
  CHECK_NOTHROW(parse_config("[collision]\nmode = subsampled\nseed = 4\n"));
  CHECK_THROWS_AS(parse_config("[collision]\ndamping = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[kernel]\nkind = tabulated\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[boundary]\nleft_mode = mirror\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[boundary]\nleft_mode = maxwellian\nleft_T_w = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[initial]\nu = 1,2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[sweep]\nlevels = 4,8.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[run]\nhorizon = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[run]\ndt_policy = sometimes\n"), std::exception);
}

TEST_CASE("fixed dt above the CFL limit") {
  // defaults: dx = 2/16, v_max = 6
  const double required = (2.0 / 16) / 6.0;
  try {
    parse_config("[run]\ndt_policy = fixed\ndt = 0.5\n");
    FAIL("expected a CFL violation");
  } catch (const CflViolation& e) {
    CHECK(e.required_dt() == doctest::Approx(required).epsilon(1e-12));
    CHECK(std::string(e.what()).find("require dt") != std::string::npos);
  }
  CHECK_NOTHROW(parse_config("[run]\ndt_policy = fixed\ndt = 0.02\n"));
  // homogeneous runs have no transport limit
  CHECK_NOTHROW(parse_config("[run]\nhomogeneous = true\ndt_policy = fixed\ndt = 0.02\n"));
}

TEST_CASE("initial data") {
  const SimConfig a = parse_config("[grid]\nn_per_axis = 8\n[mesh]\nn_cells = 3\n[initial]\nkind = random\n");
  const DistributionField fa = a.initial_field(), fb = a.initial_field();
  CHECK(fa.values == fb.values);
  const SimConfig b = parse_config(a.ini, {"collision.seed=7"});
  CHECK(b.initial_field().values != fa.values);

  const SimConfig m = parse_config("[grid]\nn_per_axis = 8\n[mesh]\nn_cells = 2\n[initial]\nkind = bimodal\nrho = 2\n");
  const VelocityGrid g(8, 6.0);
  const DistributionField f = m.initial_field();
  const Moments mo = moments(g, f.cell(0));
  CHECK(mo.mass == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(std::abs(mo.momentum[0]) < 1e-12);  // beams at ±separation cancel

  // mollification adds the floor
  const DistributionField p = m.prepared_initial();
  CHECK(p.values.size() == f.values.size());
  double sp = 0.0, sf = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    sp += p.values[i];
    sf += f.values[i];
  }
  CHECK(sp > sf);
}

TEST_CASE("tabulated inflow relative to the config file") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "boltzslab_cfg_test";
  fs::create_directories(dir);
  {
    std::ofstream t(dir / "inflow.csv");
    t << "t,v1,v2,v3,g\n0,0.75,0.75,0.75,0.1\n1,0.75,0.75,0.75,0.2\n";
    std::ofstream c(dir / "run.ini");
    c << "[grid]\nn_per_axis = 8\n[boundary]\nleft_mode = table\nleft_table = inflow.csv\n";
  }
  const SimConfig c = load_config((dir / "run.ini").string());
  REQUIRE(c.boundary.left.mode == FaceInflow::Mode::Tabulated);
  const VelocityGrid g(8, 6.0);
  const auto vals = c.boundary.left.values(g, 0.5);
  double total = 0.0;
  for (double x : vals) total += x;
  CHECK(total == doctest::Approx(0.15));
  CHECK_THROWS_AS(parse_config("[boundary]\nleft_mode = table\nleft_table = missing.csv\n", {}, dir.string()),
                  ConfigError);
  fs::remove_all(dir);
}
