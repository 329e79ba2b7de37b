#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "lrwi/acquisition.hpp"
#include "lrwi/data_io.hpp"
#include "oracle_helpers.hpp"

using namespace lrwi;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

ObservedData tiny_data() {
  ObservedData d(2, 3, {3.0, 4.5});
  for (int s = 0; s < 2; ++s)
    for (int r = 0; r < 3; ++r)
      for (int f = 0; f < 2; ++f)
        d.at(s, r, f) = cd(0.1 * s - 0.7 * r + 0.01 * f,
                           std::numbers::pi * (s + 1) * (f - r));
  return d;
}

}  // namespace

TEST_CASE("ricker weight hits its closed-form peak value at f0") {
  const double f0 = 15.0;
  const double want = 2.0 / std::sqrt(std::numbers::pi) / f0 / std::numbers::e;
  REQUIRE(ricker_weight(f0, f0) == Catch::Approx(want).epsilon(1e-14));
  REQUIRE(ricker_weight(0.0, f0) == 0.0);
  REQUIRE(ricker_weight(1e-6, f0) < 1e-12);
  REQUIRE_THROWS_AS(ricker_weight(5.0, 0.0), DomainError);
  REQUIRE_THROWS_AS(ricker_weight(5.0, -2.0), DomainError);
}

TEST_CASE("ricker weight peaks at the center frequency") {
  const double f0 = 12.0;
  double best_f = 0.0, best_w = -1.0;
  for (int i = 1; i <= 3000; ++i) {
    const double f = 3.0 * f0 * i / 3000.0;
    const double w = ricker_weight(f, f0);
    if (w > best_w) {
      best_w = w;
      best_f = f;
    }
  }
  REQUIRE(std::abs(best_f - f0) <= 3.0 * f0 / 3000.0 + 1e-12);
}

TEST_CASE("source spectrum scales the ricker weight") {
  const SourceSpectrum sp{10.0, 2.5};
  REQUIRE(sp.weight(7.0).real() ==
          Catch::Approx(2.5 * ricker_weight(7.0, 10.0)).epsilon(1e-14));
  REQUIRE(sp.weight(7.0).imag() == 0.0);
}

TEST_CASE("coordinates snap to the nearest node with half-cell slack") {
  const Grid2D g(5, 4, 0.1, 0.2);  // width 0.4, depth 0.6
  REQUIRE(snap_to_node(g, {0.14, 0.41}, "probe") == g.index(1, 2));
  REQUIRE(snap_to_node(g, {0.0, 0.0}, "probe") == g.index(0, 0));
  // slack: up to half a cell outside the footprint clamps onto the rim
  REQUIRE(snap_to_node(g, {-0.04, 0.0}, "probe") == g.index(0, 0));
  REQUIRE(snap_to_node(g, {0.44, 0.69}, "probe") == g.index(4, 3));
  REQUIRE_THROWS_AS(snap_to_node(g, {-0.06, 0.0}, "probe"), DomainError);
  REQUIRE_THROWS_AS(snap_to_node(g, {0.0, 0.71}, "probe"), DomainError);
}

TEST_CASE("snap_geometry rejects colliding receivers and empty axes") {
  const Grid2D g(5, 5, 0.1, 0.1);
  Geometry geo;
  geo.sources = {{0.2, 0.0}};
  geo.receivers = {{0.1, 0.4}, {0.3, 0.4}};
  const SnappedGeometry s = snap_geometry(g, geo);
  REQUIRE(s.source_nodes == std::vector<int>{g.index(2, 0)});
  REQUIRE(s.receiver_nodes ==
          std::vector<int>{g.index(1, 4), g.index(3, 4)});

  geo.receivers = {{0.1, 0.4}, {0.12, 0.41}};  // both snap to (1, 4)
  REQUIRE_THROWS_AS(snap_geometry(g, geo), DomainError);

  Geometry empty;
  empty.receivers = {{0.1, 0.1}};
  REQUIRE_THROWS_AS(snap_geometry(g, empty), DomainError);
}

TEST_CASE("projection matrix selects receiver nodes") {
  const Grid2D g(4, 3, 0.1, 0.1);
  const std::vector<int> nodes{5, 0, 11};
  const SparseComplexMatrix p = projection_matrix(g, nodes);
  REQUIRE(p.rows() == 3);
  REQUIRE(p.cols() == 12);
  const Eigen::MatrixXcd dense(p.eigen());
  const Eigen::MatrixXcd want = oracle::dense_projection(12, nodes);
  REQUIRE((dense - want).norm() == 0.0);
  REQUIRE_THROWS_AS(projection_matrix(g, {12}), ShapeError);
  REQUIRE_THROWS_AS(projection_matrix(g, {-1}), ShapeError);
}

TEST_CASE("source vector is a delta scaled by inverse cell area") {
  const Grid2D g(4, 4, 0.05, 0.02);
  const Eigen::VectorXcd q = source_vector(g, 7, cd(3.0, -1.0));
  REQUIRE(q.size() == 16);
  REQUIRE(q[7] == cd(3.0, -1.0) / cd(0.05 * 0.02, 0.0));
  REQUIRE(std::abs(q.norm() - std::abs(q[7])) == 0.0);
  REQUIRE_THROWS_AS(source_vector(g, 16, cd(1.0, 0.0)), ShapeError);
}

TEST_CASE("observed data uses frequency-fastest flat storage") {
  ObservedData d(2, 3, {3.0, 4.0});
  REQUIRE(d.nf() == 2);
  REQUIRE(d.values.size() == 12);
  REQUIRE(d.flat(1, 2, 0) == 10);  // (s*nr + r)*nf + f
  d.at(1, 2, 0) = cd(5.0, -2.0);
  REQUIRE(d.values[10] == cd(5.0, -2.0));

  const Eigen::VectorXcd col = d.gather(1, 0);
  REQUIRE(col.size() == 3);
  REQUIRE(col[2] == cd(5.0, -2.0));

  REQUIRE_THROWS_AS(d.at(2, 0, 0), ShapeError);
  REQUIRE_THROWS_AS(d.at(0, 3, 0), ShapeError);
  REQUIRE_THROWS_AS(d.at(0, 0, 2), ShapeError);
  REQUIRE_THROWS_AS(ObservedData(0, 3, {1.0}), ShapeError);
}

TEST_CASE("frequency validation rejects nonpositive and nonfinite entries") {
  REQUIRE_NOTHROW(check_frequencies({1.0, 2.5}));
  REQUIRE_THROWS_AS(check_frequencies({1.0, 0.0}), DomainError);
  REQUIRE_THROWS_AS(check_frequencies({-3.0}), DomainError);
  REQUIRE_THROWS_AS(
      check_frequencies({std::numeric_limits<double>::infinity()}),
      DomainError);
}

TEST_CASE("forward modeling matches a hand-rolled solve per source") {
  const Grid2D g(9, 8, 0.1, 0.1);
  oracle::Rng rng(31);
  const SlownessModel m(g, rng.uniform_vector(g.size(), 0.1, 0.35));
  Geometry geo;
  geo.sources = {{0.2, 0.0}, {0.6, 0.0}};
  geo.receivers = {{0.1, 0.6}, {0.4, 0.6}, {0.7, 0.6}};
  const std::vector<double> freqs{2.0, 3.0};
  const SourceSpectrum sp{8.0, 1.3};

  const ObservedData data = forward_model(m, geo, freqs, sp);
  REQUIRE(data.ns == 2);
  REQUIRE(data.nr == 3);

  const SnappedGeometry snap = snap_geometry(g, geo);
  const SparseComplexMatrix p = projection_matrix(g, snap.receiver_nodes);
  for (int jf = 0; jf < 2; ++jf) {
    const HelmholtzOperator op = assemble(m, freqs[jf]);
    const Factorization lu(op.matrix);
    for (int js = 0; js < 2; ++js) {
      const Eigen::VectorXcd u = lu.solve(
          source_vector(g, snap.source_nodes[js], sp.weight(freqs[jf])));
      const Eigen::VectorXcd want = p.apply(u);
      const Eigen::VectorXcd got = data.gather(js, jf);
      REQUIRE((got - want).norm() <= 1e-14 * want.norm());
    }
  }
}

TEST_CASE("forward modeling is linear in amplitude and silent at zero") {
  const Grid2D g(7, 7, 0.1, 0.1);
  const SlownessModel m(g, Eigen::VectorXd::Constant(49, 0.2));
  Geometry geo;
  geo.sources = {{0.3, 0.0}};
  geo.receivers = {{0.1, 0.5}, {0.5, 0.5}};
  const std::vector<double> freqs{2.5};

  const ObservedData zero = forward_model(m, geo, freqs, {10.0, 0.0}),
                     one = forward_model(m, geo, freqs, {10.0, 1.0}),
                     two = forward_model(m, geo, freqs, {10.0, 2.0});
  REQUIRE(zero.values.norm() == 0.0);
  REQUIRE(one.values.norm() > 0.0);
  REQUIRE((two.values - 2.0 * one.values).norm() <= 1e-14 * two.values.norm());
}

TEST_CASE("forward modeling factors each frequency exactly once") {
  const Grid2D g(6, 6, 0.1, 0.1);
  const SlownessModel m(g, Eigen::VectorXd::Constant(36, 0.25));
  Geometry geo;
  geo.sources = {{0.1, 0.0}, {0.2, 0.0}, {0.3, 0.0}};
  geo.receivers = {{0.1, 0.5}, {0.3, 0.5}};

  FactorizationStats::reset();
  forward_model(m, geo, {2.0, 3.0, 4.0, 5.0}, {10.0, 1.0});
  const std::vector<int> dims = FactorizationStats::dims();
  REQUIRE(dims.size() == 4);  // one per frequency, shared by the 3 sources
  for (int d : dims) REQUIRE(d == 36);
  FactorizationStats::reset();
}

TEST_CASE("receiver traces track the free-space line source") {
  // Same physics as the helmholtz-level probe test, but through the
  // acquisition path: snapped ring receivers, ricker-weighted source.
  // Bounds follow the measured boundary-reflection envelope.
  const double v = 2.0, f = 10.0;
  const double lam = v / f, h = lam / 10.0;
  const int n = 201;
  const Grid2D g(n, n, h, h);
  const SlownessModel m(g, Eigen::VectorXd::Constant(n * n, 1.0 / (v * v)));
  const double cx = (n / 2) * h, cz = (n / 2) * h;

  Geometry geo;
  geo.sources = {{cx, cz}};
  for (int j = 0; j < 16; ++j) {
    const double phi = 2.0 * std::numbers::pi * j / 16.0;
    geo.receivers.push_back(
        {cx + 2.2 * lam * std::cos(phi), cz + 2.2 * lam * std::sin(phi)});
  }
  const SourceSpectrum sp{15.0, 1.0};
  const ObservedData data = forward_model(m, geo, {f}, sp);

  const SnappedGeometry snap = snap_geometry(g, geo);
  const double k = angular_frequency(f) / v;
  const cd w = sp.weight(f);
  double ratio_sum = 0.0, worst = 0.0;
  for (int r = 0; r < data.nr; ++r) {
    const int node = snap.receiver_nodes[r];
    const double rx = (node % n) * h - cx, rz = (node / n) * h - cz;
    const double rr = std::hypot(rx, rz);
    const cd green = w * cd(0.0, -0.25) *
                     cd(std::cyl_bessel_j(0, k * rr),
                        std::cyl_neumann(0, k * rr));
    const double ratio = std::abs(data.at(0, r, 0)) / std::abs(green);
    ratio_sum += ratio;
    worst = std::max(worst, std::abs(ratio - 1.0));
  }
  REQUIRE(std::abs(ratio_sum / data.nr - 1.0) < 0.10);
  REQUIRE(worst < 0.35);
}

TEST_CASE("noise injection is seeded and optional") {
  ObservedData a = tiny_data(), b = tiny_data(), c = tiny_data(),
               d = tiny_data();
  add_noise(a, 0.5, 42);
  add_noise(b, 0.5, 42);
  add_noise(c, 0.5, 43);
  REQUIRE((a.values - b.values).norm() == 0.0);
  REQUIRE((a.values - c.values).norm() > 0.0);
  add_noise(d, 0.0, 42);
  REQUIRE((d.values - tiny_data().values).norm() == 0.0);
  REQUIRE_THROWS_AS(add_noise(d, -0.1, 1), DomainError);
}

TEST_CASE("noise has roughly the requested scale") {
  ObservedData big(10, 25, {1.0, 2.0});
  add_noise(big, 2.0, 7);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < big.values.size(); ++i)
    ss += std::norm(big.values[i]);
  // 500 complex samples, each component variance 4: E[|z|^2] = 8
  REQUIRE(ss / big.values.size() == Catch::Approx(8.0).margin(1.0));
}

TEST_CASE("data files round-trip bit-exactly") {
  const ObservedData d = tiny_data();
  const auto path = temp_file("lrwi_test_data.dat");
  write_data_file(path, d);

  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  REQUIRE(first == "LRWI-DATA v1 ns=2 nr=3 nf=2");
  in.close();

  const ObservedData back = read_data_file(path);
  REQUIRE(back.ns == d.ns);
  REQUIRE(back.nr == d.nr);
  REQUIRE(back.freqs == d.freqs);
  REQUIRE((back.values - d.values).norm() == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("data reader rejects malformed files") {
  const auto path = temp_file("lrwi_test_bad.dat");
  auto write = [&](const std::string& body) {
    std::ofstream out(path);
    out << body;
  };
  const std::string good_header = "LRWI-DATA v1 ns=1 nr=1 nf=1\n2.5\n";

  write("LRWI-GRID v1 ns=1 nr=1 nf=1\n2.5\n0 0 0 1 0\n");
  REQUIRE_THROWS_AS(read_data_file(path), ConfigError);
  write("LRWI-DATA v2 ns=1 nr=1 nf=1\n2.5\n0 0 0 1 0\n");
  REQUIRE_THROWS_AS(read_data_file(path), ConfigError);
  write("LRWI-DATA v1 ns=1 nr=1 nf=1 junk\n2.5\n0 0 0 1 0\n");
  REQUIRE_THROWS_AS(read_data_file(path), ConfigError);
  write("LRWI-DATA v1 ns=0 nr=1 nf=1\n2.5\n");
  REQUIRE_THROWS_AS(read_data_file(path), ConfigError);
  write("LRWI-DATA v1 ns=1 nr=1 nf=2\n2.5\n0 0 0 1 0\n0 0 1 1 0\n");
  REQUIRE_THROWS_AS(read_data_file(path), ConfigError);  // one freq short
  write("LRWI-DATA v1 ns=1 nr=1 nf=1\n2.5 3.5\n0 0 0 1 0\n");
  REQUIRE_THROWS_AS(read_data_file(path), ConfigError);  // extra freq
  write("LRWI-DATA v1 ns=1 nr=1 nf=1\n-2.5\n0 0 0 1 0\n");
  REQUIRE_THROWS_AS(read_data_file(path), DomainError);
  write(good_header);  // samples missing entirely
  REQUIRE_THROWS_AS(read_data_file(path), ConfigError);
  write(good_header + "0 0 0 1\n");
  REQUIRE_THROWS_AS(read_data_file(path), ConfigError);  // short line
  write(good_header + "0 0 0 1 0 9\n");
  REQUIRE_THROWS_AS(read_data_file(path), ConfigError);  // long line
  write("LRWI-DATA v1 ns=1 nr=2 nf=1\n2.5\n0 1 0 1 0\n0 0 0 1 0\n");
  REQUIRE_THROWS_AS(read_data_file(path), ConfigError);  // out of order
  write(good_header + "0 0 0 1 0\nstray\n");
  REQUIRE_THROWS_AS(read_data_file(path), ConfigError);
  std::filesystem::remove(path);
  REQUIRE_THROWS_AS(read_data_file(path), IoError);
}
