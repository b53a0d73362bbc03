#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "scr/metrics.hpp"
#include "scr/rng.hpp"

using namespace scr;

namespace {
Tensor random_depth(Rng& rng, int g) {
  Tensor d({g, g});
  for (std::size_t i = 0; i < d.numel(); ++i) d[i] = rng.uniform(0.5, 2.5);
  return d;
}
}  // namespace

TEST_CASE("side is zero on identical maps and scale-invariant") {
  Rng rng(1);
  const Tensor d = random_depth(rng, 8);
  CHECK(side(d, d) == 0.0);
  for (double k : {0.5, 2.0, 10.0}) {
    Tensor scaled = d;
    for (std::size_t i = 0; i < scaled.numel(); ++i) scaled[i] *= k;
    CHECK(side(scaled, d) < 1e-12);
  }
}

TEST_CASE("side hand case: log-diffs {0, 2} give exactly 1") {
  const double e2 = std::exp(2.0);
  Tensor gt({1, 2}, {1.0, 1.0});
  Tensor pred({1, 2}, {1.0, e2});
  CHECK(std::fabs(side(pred, gt) - 1.0) < 1e-12);
}

TEST_CASE("side rejects invalid input") {
  Tensor a({2, 2}, {1.0, 1.0, 1.0, 1.0});
  Tensor bad = a;
  bad[2] = 0.0;
  CHECK_THROWS(side(bad, a));
  CHECK_THROWS(side(a, bad));
  CHECK_THROWS(side(a, Tensor({2, 3}, 1.0)));
}

TEST_CASE("mad is zero on identical maps and symmetric") {
  Rng rng(2);
  const Tensor a = random_depth(rng, 7);
  const Tensor b = random_depth(rng, 7);
  CHECK(mad_degrees(a, a) == 0.0);
  CHECK(mad_degrees(a, b) == Catch::Approx(mad_degrees(b, a)).margin(1e-12));
  CHECK(mad_degrees(a, b) >= 0.0);
  CHECK(mad_degrees(a, b) <= 180.0);
  CHECK_THROWS(mad_degrees(Tensor({2, 2}, 1.0), Tensor({2, 2}, 1.0)));
}

TEST_CASE("mad on tilted planes matches the analytic angle") {
  const int g = 9;
  auto plane = [&](double gx) {
    Tensor d({g, g});
    for (int r = 0; r < g; ++r) {
      for (int c = 0; c < g; ++c) d.at(r, c) = 3.0 + gx * c;
    }
    return d;
  };
  const double rad_to_deg = 57.295779513082320876798154814105;
  for (double gx : {0.25, 0.5, 1.0, 2.0}) {
    const double expected = std::atan(gx) * rad_to_deg;
    CHECK(std::fabs(mad_degrees(plane(gx), plane(0.0)) - expected) < 0.1);
    CHECK(std::fabs(mad_degrees(plane(gx), plane(0.0)) - expected) < 1e-9);
  }
}

TEST_CASE("structure recovery counting") {
  AdjacencyMatrix gt(4);
  gt.at(1, 2) = 1.0;  // D->L
  gt.at(0, 2) = 1.0;  // V->L
  gt.at(1, 3) = 1.0;  // D->A

  StructureRecovery perfect = structure_recovery(gt, gt);
  CHECK(perfect.shd == 0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);

  StructureRecovery empty = structure_recovery(AdjacencyMatrix(4), gt);
  CHECK(empty.shd == 3);
  CHECK(empty.recall == 0.0);
  CHECK(empty.precision == 1.0);  // nothing predicted

  const AdjacencyMatrix dense = ordering_to_mask(DenseOrdering::from_label("DVAL"));
  StructureRecovery sup = structure_recovery(dense, gt);
  CHECK(sup.recall == 1.0);
  CHECK(sup.precision == Catch::Approx(3.0 / 6.0));
  CHECK(sup.shd == 3);  // three extra edges

  // reversal counts once per pair
  AdjacencyMatrix rev(4);
  rev.at(2, 1) = 1.0;  // L->D instead of D->L
  StructureRecovery r = structure_recovery(rev, gt);
  CHECK(r.shd == 3);
  CHECK(r.recall == 0.0);
  CHECK(r.precision == 0.0);

  CHECK_THROWS(structure_recovery(AdjacencyMatrix(3), gt));
  AdjacencyMatrix cont(4);
  cont.at(0, 1) = 0.5;
  CHECK_THROWS(structure_recovery(cont, gt));
}
