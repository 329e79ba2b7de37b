#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "lrwi/grid.hpp"
#include "lrwi/grid_io.hpp"
#include "lrwi/hash.hpp"
#include "lrwi/rng.hpp"
#include "lrwi/synthetic.hpp"
#include "oracle_helpers.hpp"

using namespace lrwi;

namespace {

std::filesystem::path temp_file(const char* name) {
  auto p = std::filesystem::temp_directory_path() / "lrwi_test_grid";
  std::filesystem::create_directories(p);
  return p / name;
}

}  // namespace

TEST_CASE("grid indexing is x-fastest and round-trips") {
  const Grid2D g(5, 4, 0.1, 0.2);
  REQUIRE(g.size() == 20);
  REQUIRE(g.index(0, 0) == 0);
  REQUIRE(g.index(1, 0) == 1);
  REQUIRE(g.index(0, 1) == 5);
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix) {
      const int i = g.index(ix, iz);
      REQUIRE(g.ix_of(i) == ix);
      REQUIRE(g.iz_of(i) == iz);
    }
  REQUIRE(g.x_of(4) == Catch::Approx(0.4));
  REQUIRE(g.z_of(3) == Catch::Approx(0.6));
  REQUIRE(g.width() == Catch::Approx(0.4));
  REQUIRE(g.depth() == Catch::Approx(0.6));
}

TEST_CASE("grid interior excludes exactly the outermost ring") {
  const Grid2D g(4, 3, 1.0, 1.0);
  int interior = 0;
  for (int iz = 0; iz < g.nz; ++iz)
    for (int ix = 0; ix < g.nx; ++ix)
      if (g.interior(ix, iz)) ++interior;
  REQUIRE(interior == 2);  // (1,1) and (2,1)
  REQUIRE(g.interior(1, 1));
  REQUIRE_FALSE(g.interior(0, 1));
  REQUIRE_FALSE(g.interior(1, 0));
  REQUIRE_FALSE(g.interior(3, 1));
}

TEST_CASE("grid construction validates sizes and spacings") {
  REQUIRE_NOTHROW(Grid2D(2, 2, 0.5, 0.5));
  REQUIRE_THROWS_AS(Grid2D(1, 5, 0.1, 0.1), DomainError);
  REQUIRE_THROWS_AS(Grid2D(5, 1, 0.1, 0.1), DomainError);
  REQUIRE_THROWS_AS(Grid2D(5, 5, 0.0, 0.1), DomainError);
  REQUIRE_THROWS_AS(Grid2D(5, 5, 0.1, -1.0), DomainError);
}

TEST_CASE("model construction validates shape and positivity") {
  const Grid2D g(3, 3, 0.1, 0.1);
  REQUIRE_THROWS_AS(SlownessModel(g, Eigen::VectorXd::Ones(5)), ShapeError);
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(9);
  bad[4] = 0.0;
  REQUIRE_THROWS_AS(SlownessModel(g, bad), DomainError);
  REQUIRE_THROWS_AS(VelocityModel(g, bad), DomainError);
}

TEST_CASE("velocity and slowness conversions invert each other") {
  const Grid2D g(3, 2, 0.1, 0.1);
  Eigen::VectorXd v(6);
  v << 1.5, 2.0, 2.5, 3.0, 4.0, 4.5;
  const SlownessModel m = velocity_to_slowness(VelocityModel(g, v));
  REQUIRE(m.values[0] == Catch::Approx(1.0 / 2.25).epsilon(1e-15));
  REQUIRE(m.values[3] == Catch::Approx(1.0 / 9.0).epsilon(1e-15));
  const VelocityModel back = slowness_to_velocity(m);
  REQUIRE((back.values - v).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("combine matches direct arithmetic") {
  const Grid2D g(2, 2, 1.0, 1.0);
  const double s2 = std::numbers::sqrt2 / 2.0;

  SECTION("theta = pi/4 with equal components recovers the base model") {
    Eigen::VectorXd m0(4);
    m0 << 0.3, 0.5, 0.7, 0.9;
    const Rank2Model r(g, s2 * m0, s2 * m0, std::numbers::pi / 4.0);
    REQUIRE((combine_values(r) - m0).lpNorm<Eigen::Infinity>() < 1e-15);
  }

  SECTION("theta = 0 returns the second component exactly") {
    Eigen::VectorXd m1 = Eigen::VectorXd::Constant(4, 0.2);
    Eigen::VectorXd m2(4);
    m2 << 0.1, 0.2, 0.3, 0.4;
    const Rank2Model r(g, m1, m2, 0.0);
    REQUIRE(combine_values(r) == m2);
  }

  SECTION("theta = pi/4 literal") {
    Eigen::VectorXd m1(4), m2(4);
    m1 << 0.2, 0.4, 0.2, 0.4;
    m2 << 0.1, 0.1, 0.1, 0.1;
    const Eigen::VectorXd got =
        combine_values(Rank2Model(g, m1, m2, std::numbers::pi / 4.0));
    Eigen::VectorXd want(4);
    want << s2 * 0.3, s2 * 0.5, s2 * 0.3, s2 * 0.5;
    REQUIRE((got - want).lpNorm<Eigen::Infinity>() < 1e-15);
  }

  SECTION("theta unconstrained: no wrapping applied") {
    Eigen::VectorXd m1 = Eigen::VectorXd::Constant(4, 1.0);
    Eigen::VectorXd m2 = Eigen::VectorXd::Constant(4, 2.0);
    const double theta = 10.0;
    const Eigen::VectorXd got = combine_values(Rank2Model(g, m1, m2, theta));
    REQUIRE(got[0] ==
            Catch::Approx(std::sin(10.0) + 2.0 * std::cos(10.0)).epsilon(1e-15));
  }
}

TEST_CASE("split matches direct arithmetic and round-trips") {
  const Grid2D g(2, 2, 1.0, 1.0);

  SECTION("theta = pi/4 on a constant model") {
    const SlownessModel m(g, Eigen::VectorXd::Ones(4));
    const Rank2Model r = split(m, std::numbers::pi / 4.0);
    const double s2 = std::numbers::sqrt2 / 2.0;
    REQUIRE(r.m1[0] == Catch::Approx(s2).epsilon(1e-15));
    REQUIRE(r.m2[3] == Catch::Approx(s2).epsilon(1e-15));
  }

  SECTION("theta = pi/2 puts everything in the first component") {
    Eigen::VectorXd mv(4);
    mv << 0.2, 0.3, 0.4, 0.5;
    const Rank2Model r = split(SlownessModel(g, mv), std::numbers::pi / 2.0);
    REQUIRE((r.m1 - mv).lpNorm<Eigen::Infinity>() < 1e-15);
    REQUIRE(r.m2.lpNorm<Eigen::Infinity>() < 1e-15);
  }

  SECTION("combine(split(m, theta)) = m for random m and theta") {
    oracle::Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXd mv = rng.uniform_vector(4, 0.05, 1.0);
      const double theta = rng.uniform(-8.0, 8.0);
      const SlownessModel m(g, mv);
      const Eigen::VectorXd back = combine_values(split(m, theta));
      REQUIRE((back - mv).lpNorm<Eigen::Infinity>() <=
              4.0 * std::numeric_limits<double>::epsilon());
      const double st = std::sin(theta), ct = std::cos(theta);
      REQUIRE(std::abs(st * st + ct * ct - 1.0) <=
              2.0 * std::numeric_limits<double>::epsilon());
    }
  }
}

TEST_CASE("relative model error matches its definition") {
  const Grid2D g(2, 2, 1.0, 1.0);
  Eigen::VectorXd t(4);
  t << 1.0, 1.0, 1.0, 1.0;

  SECTION("identical models give zero") {
    REQUIRE(relative_values_error(t, t) == 0.0);
  }

  SECTION("zero estimate gives one") {
    REQUIRE(relative_values_error(t, Eigen::VectorXd::Zero(4)) ==
            Catch::Approx(1.0));
  }

  SECTION("literal: half the entries zeroed") {
    Eigen::VectorXd f(4);
    f << 1.0, 0.0, 1.0, 0.0;
    REQUIRE(relative_values_error(t, f) ==
            Catch::Approx(1.0 / std::numbers::sqrt2).epsilon(1e-15));
  }

  SECTION("scale awareness: error(m, c m) = |1 - c|") {
    oracle::Rng rng(3);
    const Eigen::VectorXd m = rng.uniform_vector(6, 0.1, 2.0);
    for (const double c : {0.0, 0.5, 1.0, 1.7, 3.0})
      REQUIRE(relative_values_error(m, c * m) ==
              Catch::Approx(std::abs(1.0 - c)).margin(1e-14));
  }

  SECTION("shape and zero-norm errors") {
    REQUIRE_THROWS_AS(relative_values_error(t, Eigen::VectorXd::Zero(3)),
                      ShapeError);
    REQUIRE_THROWS_AS(
        relative_values_error(Eigen::VectorXd::Zero(4), t), DomainError);
    const SlownessModel a(g, t);
    const SlownessModel b(Grid2D(2, 3, 1.0, 1.0), Eigen::VectorXd::Ones(6));
    REQUIRE_THROWS_AS(relative_model_error(a, b), ShapeError);
  }
}

TEST_CASE("linear-gradient synthetic interpolates top to bottom") {
  const Grid2D g(3, 10, 0.1, 0.1);
  SyntheticParams p;
  p.v_top = 1.5;
  p.v_bottom = 4.5;
  const VelocityModel v =
      make_synthetic(SyntheticKind::linear_gradient, g, p);
  for (int iz = 0; iz < g.nz; ++iz) {
    const double want = 1.5 + 3.0 * iz / 9.0;
    for (int ix = 0; ix < g.nx; ++ix)
      REQUIRE(v.values[g.index(ix, iz)] == Catch::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("layered synthetic") {
  const Grid2D g(3, 6, 0.1, 0.1);
  SyntheticParams p;

  SECTION("single layer is constant") {
    p.layer_velocities = {2.5};
    const VelocityModel v = make_synthetic(SyntheticKind::layered, g, p);
    REQUIRE(v.values.minCoeff() == 2.5);
    REQUIRE(v.values.maxCoeff() == 2.5);
  }

  SECTION("two layers switch at the interface depth") {
    p.layer_depths = {0.25};
    p.layer_velocities = {2.0, 3.0};
    const VelocityModel v = make_synthetic(SyntheticKind::layered, g, p);
    for (int iz = 0; iz < g.nz; ++iz) {
      const double want = g.z_of(iz) >= 0.25 ? 3.0 : 2.0;
      REQUIRE(v.values[g.index(1, iz)] == want);
    }
  }

  SECTION("mismatched or unsorted layer lists are rejected") {
    p.layer_depths = {0.2, 0.1};
    p.layer_velocities = {1.0, 2.0, 3.0};
    REQUIRE_THROWS_AS(make_synthetic(SyntheticKind::layered, g, p),
                      DomainError);
    p.layer_depths = {0.2};
    p.layer_velocities = {1.0};
    REQUIRE_THROWS_AS(make_synthetic(SyntheticKind::layered, g, p),
                      DomainError);
  }
}

TEST_CASE("wedge synthetic matches the hand-built fixture file") {
  const Grid2D g(7, 5, 0.1, 0.1);
  SyntheticParams p;
  p.layer_depths = {0.2};
  p.layer_velocities = {2.0, 3.0};
  p.wedge_z0 = 0.3;
  p.wedge_slope = -0.5;
  p.wedge_velocity = 4.0;
  const VelocityModel v = make_synthetic(SyntheticKind::wedge, g, p);

  const GridFileContents fix =
      read_grid_file(std::filesystem::path(LRWI_FIXTURE_DIR) /
                     "wedge_7x5.grid");
  REQUIRE(fix.grid == g);
  REQUIRE(fix.unit == GridUnit::velocity);
  REQUIRE((fix.values - v.values).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("synthetic perturbation is seeded and reproducible") {
  const Grid2D g(4, 4, 0.1, 0.1);
  SyntheticParams p;
  p.v_top = 2.0;
  p.v_bottom = 3.0;
  p.perturb_std = 0.05;
  p.perturb_seed = 42;
  const VelocityModel a =
      make_synthetic(SyntheticKind::linear_gradient, g, p);
  const VelocityModel b =
      make_synthetic(SyntheticKind::linear_gradient, g, p);
  REQUIRE(a.values == b.values);
  p.perturb_seed = 43;
  const VelocityModel c =
      make_synthetic(SyntheticKind::linear_gradient, g, p);
  REQUIRE((a.values - c.values).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("unknown synthetic kind name is rejected") {
  REQUIRE_THROWS_AS(synthetic_kind_from_string("marmousi"), DomainError);
  REQUIRE(synthetic_kind_from_string("wedge") == SyntheticKind::wedge);
}

TEST_CASE("grid file round-trip is bit exact") {
  const Grid2D g(7, 5, 0.1, 0.1);
  oracle::Rng rng(11);
  const Eigen::VectorXd vals = rng.uniform_vector(g.size(), 0.04, 0.45);
  const auto path = temp_file("roundtrip.grid");
  write_grid_file(path, SlownessModel(g, vals));

  const GridFileContents got = read_grid_file(path);
  REQUIRE(got.grid == g);
  REQUIRE(got.unit == GridUnit::slowness2);
  REQUIRE(got.values == vals);

  const SlownessModel m = got.as_slowness();
  REQUIRE(m.values == vals);
  const VelocityModel v = got.as_velocity();
  REQUIRE((v.values.array() - vals.array().rsqrt()).abs().maxCoeff() <
          1e-15);
}

TEST_CASE("grid file header format is pinned") {
  const Grid2D g(3, 2, 0.25, 0.5);
  const auto path = temp_file("header.grid");
  write_grid_file(path, g, GridUnit::velocity,
                  Eigen::VectorXd::Constant(6, 2.0));
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  REQUIRE(header == "LRWI-GRID v1 nx=3 nz=2 dx=0.25 dz=0.5 unit=velocity");
}

TEST_CASE("grid file parser rejects malformed input") {
  const auto path = temp_file("bad.grid");
  const auto write = [&](const std::string& text) {
    std::ofstream out(path);
    out << text;
  };

  write("LRWI-GRID v2 nx=2 nz=2 dx=1 dz=1 unit=velocity\n1 2\n3 4\n");
  REQUIRE_THROWS_AS(read_grid_file(path), ConfigError);

  write("LRWI-GRID v1 nx=2 nz=2 dx=1 dz=1 unit=feet\n1 2\n3 4\n");
  REQUIRE_THROWS_AS(read_grid_file(path), ConfigError);

  write("LRWI-GRID v1 nx=2 nz=2 dx=1 dz=1 unit=velocity\n1 2\n3\n");
  REQUIRE_THROWS_AS(read_grid_file(path), ConfigError);

  write("LRWI-GRID v1 nx=2 nz=2 dx=1 dz=1 unit=velocity\n1 2 9\n3 4\n");
  REQUIRE_THROWS_AS(read_grid_file(path), ConfigError);

  write("LRWI-GRID v1 nx=2 nz=2 dx=1 dz=1 unit=velocity\n1 2\n");
  REQUIRE_THROWS_AS(read_grid_file(path), ConfigError);

  write("LRWI-GRID v1 nx=2 nz=2 dx=1 dz=1 unit=velocity\n1 2\n3 4\n5 6\n");
  REQUIRE_THROWS_AS(read_grid_file(path), ConfigError);

  write("LRWI-GRID v1 nx=two nz=2 dx=1 dz=1 unit=velocity\n1 2\n3 4\n");
  REQUIRE_THROWS_AS(read_grid_file(path), ConfigError);

  REQUIRE_THROWS_AS(read_grid_file(temp_file("does_not_exist.grid")),
                    IoError);
}

TEST_CASE("gaussian rng is deterministic per seed") {
  GaussianRng a(123), b(123), c(124);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const double va = a(), vb = b(), vc = c();
    all_equal = all_equal && (va == vb);
    any_diff = any_diff || (va != vc);
  }
  REQUIRE(all_equal);
  REQUIRE(any_diff);
}

TEST_CASE("gaussian rng has roughly standard moments") {
  GaussianRng rng(2024);
  const int n = 40000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.02);
  REQUIRE(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("fnv1a matches published reference values") {
  // Reference digests of the 64-bit FNV-1a test vectors.
  REQUIRE(fnv1a("") == 0xcbf29ce484222325ull);
  REQUIRE(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  REQUIRE(fnv1a("foobar") == 0x85944171f73967e8ull);
  REQUIRE(fnv1a_bytes("a", 1) == fnv1a("a"));
}

TEST_CASE("fnv1a is order sensitive and chainable") {
  const std::uint64_t ab = fnv1a("b", fnv1a("a"));
  REQUIRE(ab == fnv1a("ab"));
  REQUIRE(fnv1a("ba") != ab);
  const std::uint64_t h1 = fnv1a_append(kFnvOffset, 1.5);
  const std::uint64_t h2 = fnv1a_append(kFnvOffset, -1.5);
  REQUIRE(h1 != h2);
  REQUIRE(hex64(0) == "0000000000000000");
  REQUIRE(hex64(0xdeadbeefull) == "00000000deadbeef");
}
