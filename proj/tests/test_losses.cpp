#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "protoverb/losses.hpp"
#include "protoverb/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace protoverb;
namespace pt = protoverb::testing;

namespace {

// 2 roots x 2 children, small and fully labeled.
SenseHierarchy small_hierarchy() {
  return SenseHierarchy::parse(
      "1\tA\t\n1\tB\t\n2\tA1\tA\n2\tA2\tA\n2\tB1\tB\n2\tB2\tB\n");
}

std::vector<int> labels_at_level(const Batch& b, int level) {
  std::vector<int> out;
  for (size_t i = 0; i < b.size(); ++i) out.push_back(b.label_at(i, level));
  return out;
}

}  // namespace

TEST_CASE("ins_ins: two identical same-class vectors give zero loss") {
  Batch b;
  b.tau = 0.1;
  b.vecs = {{1.0, 0.0}, {1.0, 0.0}};
  b.paths = {{0}, {0}};
  auto r = loss_ins_ins(b, 1);
  CHECK(r.loss == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.active_anchors == 2);
}

TEST_CASE("ins_ins: all-singleton classes trigger the skip rule") {
  Batch b;
  b.tau = 0.1;
  b.vecs = {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  b.paths = {{0}, {1}, {2}};
  auto r = loss_ins_ins(b, 1);
  CHECK(r.loss == 0.0);
  CHECK(r.active_anchors == 0);
  for (const Vec& g : r.d_vecs) {
    for (double x : g) CHECK(x == 0.0);
  }
}

TEST_CASE("ins_ins: (A,A,B) case equals enumeration and the closed form") {
  Batch b;
  b.tau = 0.1;
  b.vecs = {{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  b.paths = {{0}, {0}, {1}};
  auto r = loss_ins_ins(b, 1);
  const double oracle = pt::oracle_ins_ins(b.vecs, labels_at_level(b, 1), b.tau);
  CHECK(r.loss == doctest::Approx(oracle).epsilon(1e-12));
  // Both active anchors contribute log(1 + e^{-10}): positive at sim 1,
  // the lone negative at sim 0, tau = 0.1.
  CHECK(r.loss == doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-12));
}

TEST_CASE("ins_ins errors") {
  Batch b;
  b.tau = 0.1;
  b.vecs = {{1.0, 0.0}};
  b.paths = {{0}};
  CHECK_THROWS_AS(loss_ins_ins(b, 1), std::invalid_argument);

  Batch c;
  c.tau = 0.1;
  c.vecs = {{1.0, 0.0}, {0.0, 1.0}};
  c.paths = {{0, 0}, {0}};  // second instance lacks level 2
  CHECK_THROWS(loss_ins_ins(c, 2));

  Batch d;
  d.tau = -1.0;
  d.vecs = {{1.0, 0.0}, {0.0, 1.0}};
  d.paths = {{0}, {0}};
  CHECK_THROWS(loss_ins_ins(d, 1));
}

TEST_CASE("ins_ins matches the enumeration oracle on random batches") {
  SenseHierarchy h = small_hierarchy();
  Rng rng(42);
  for (int seed = 0; seed < 25; ++seed) {
    Rng batch_rng(seed);
    Batch b = pt::random_batch(batch_rng, h, 3 + seed % 6, 4, 0.1);
    auto r = loss_ins_ins(b, 2);
    const double oracle =
        pt::oracle_ins_ins(b.vecs, labels_at_level(b, 2), b.tau);
    CHECK(std::abs(r.loss - oracle) < 1e-9);
  }
}

TEST_CASE("ins_ins multilevel averages levels 2 and 3") {
  SenseHierarchy h = SenseHierarchy::parse(
      "1\tA\t\n1\tB\t\n2\tA1\tA\n2\tB1\tB\n3\tA1x\tA.A1\n3\tA1y\tA.A1\n");
  Rng rng(7);
  Batch b;
  b.tau = 0.1;
  for (int i = 0; i < 4; ++i) {
    b.vecs.push_back(pt::random_vec(rng, 3));
    // Two depth-3 instances under A.A1, two depth-2 under B.B1.
    if (i < 2) {
      b.paths.push_back({0, 0, i});  // A, A1, leaf i
    } else {
      b.paths.push_back({1, 1});  // B, B1
    }
  }
  auto combined = loss_ins_ins_multilevel(b);

  auto level2 = loss_ins_ins(b, 2);
  Batch sub;
  sub.tau = b.tau;
  sub.vecs = {b.vecs[0], b.vecs[1]};
  sub.paths = {b.paths[0], b.paths[1]};
  auto level3 = loss_ins_ins(sub, 3);
  CHECK(combined.loss ==
        doctest::Approx(0.5 * (level2.loss + level3.loss)).epsilon(1e-12));
}

TEST_CASE("ins_ins multilevel is zero on a depth-1 corpus") {
  Batch b;
  b.tau = 0.1;
  b.vecs = {{1.0, 0.0}, {1.0, 0.1}};
  b.paths = {{0}, {0}};
  auto r = loss_ins_ins_multilevel(b);
  CHECK(r.loss == 0.0);
}

TEST_CASE("ins_pro: singleton level contributes exactly zero") {
  SenseHierarchy h = SenseHierarchy::parse("1\tA\t\n");
  PrototypeSet ps = PrototypeSet::init(h, 3, 11);
  Batch b;
  b.tau = 0.1;
  b.vecs = {{1.0, 2.0, 3.0}};
  b.paths = {{0}};
  auto r = loss_ins_pro(b, ps);
  CHECK(r.loss == 0.0);
  for (double x : r.d_vecs[0]) CHECK(x == 0.0);
}

TEST_CASE("ins_pro: two equidistant prototypes give ln 2 at any tau") {
  SenseHierarchy h = SenseHierarchy::parse("1\tA\t\n1\tB\t\n");
  PrototypeSet ps = PrototypeSet::init(h, 2, 12);
  auto r0 = ps.at_level(1).row(0);
  r0[0] = 1.0; r0[1] = 0.0;
  auto r1 = ps.at_level(1).row(1);
  r1[0] = 0.0; r1[1] = 1.0;
  for (double tau : {0.1, 0.5, 3.0}) {
    Batch b;
    b.tau = tau;
    b.vecs = {{1.0, 1.0}};
    b.paths = {{0}};
    auto r = loss_ins_pro(b, ps);
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("ins_pro matches the term-by-term oracle") {
  SenseHierarchy h = small_hierarchy();
  for (int seed = 0; seed < 25; ++seed) {
    PrototypeSet ps = PrototypeSet::init(h, 4, 1000 + seed);
    Rng rng(seed);
    Batch b = pt::random_batch(rng, h, 2 + seed % 4, 4, 0.1);
    auto r = loss_ins_pro(b, ps);
    CHECK(std::abs(r.loss - pt::oracle_ins_pro(b.vecs, b.paths, ps, b.tau)) <
          1e-9);
  }
}

TEST_CASE("ins_pro error paths") {
  SenseHierarchy h = SenseHierarchy::parse("1\tA\t\n");
  PrototypeSet ps = PrototypeSet::init(h, 3, 1);
  Batch b;
  b.tau = 0.1;
  b.vecs = {{1.0, 0.0, 0.0}};
  b.paths = {{0, 0}};  // path covers level 2, prototypes do not
  CHECK_THROWS_WITH_AS(loss_ins_pro(b, ps), doctest::Contains("level 2"),
                       std::runtime_error);

  Batch dim;
  dim.tau = 0.1;
  dim.vecs = {{1.0, 0.0}};
  dim.paths = {{0}};
  CHECK_THROWS_AS(loss_ins_pro(dim, ps), std::invalid_argument);
}

TEST_CASE("pro_pro: single father keeps the loss at zero") {
  SenseHierarchy h = SenseHierarchy::parse("1\tA\t\n2\tX\tA\n2\tY\tA\n");
  PrototypeSet ps = PrototypeSet::init(h, 3, 13);
  auto r = loss_pro_pro(ps, h, 0.1);
  CHECK(r.loss == 0.0);
}

TEST_CASE("pro_pro: child equidistant from both fathers gives ln 2") {
  SenseHierarchy h = SenseHierarchy::parse("1\tA\t\n1\tB\t\n2\tC\tA\n");
  PrototypeSet ps = PrototypeSet::init(h, 2, 14);
  auto a = ps.at_level(1).row(0);
  a[0] = 1.0; a[1] = 0.0;
  auto b = ps.at_level(1).row(1);
  b[0] = 0.0; b[1] = 1.0;
  auto c = ps.at_level(2).row(0);
  c[0] = 1.0; c[1] = 1.0;
  auto r = loss_pro_pro(ps, h, 0.1);
  CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("pro_pro on the 4x11 fixture equals the 44-pair enumeration") {
  SenseHierarchy h = pt::pdtb2_hierarchy();
  for (int seed = 0; seed < 25; ++seed) {
    PrototypeSet ps = PrototypeSet::init(h, 6, 2000 + seed);
    auto r = loss_pro_pro(ps, h, 0.1);
    CHECK(std::abs(r.loss - pt::oracle_pro_pro(ps, h, 0.1)) < 1e-9);
  }
}

TEST_CASE("pro_pro requires two levels") {
  SenseHierarchy h = SenseHierarchy::parse("1\tA\t\n1\tB\t\n");
  PrototypeSet ps = PrototypeSet::init(h, 3, 15);
  CHECK_THROWS_AS(loss_pro_pro(ps, h, 0.1), std::invalid_argument);
}

TEST_CASE("total_loss toggles and additivity") {
  SenseHierarchy h = small_hierarchy();
  PrototypeSet ps = PrototypeSet::init(h, 4, 3000);
  Rng rng(31);
  Batch b = pt::random_batch(rng, h, 5, 4, 0.1);

  LossBreakdown all = total_loss(b, ps, h, LossToggles{true, true});
  CHECK(all.total ==
        doctest::Approx(all.ins_ins + all.ins_pro + all.pro_pro)
            .epsilon(1e-15));
  CHECK(all.ins_ins > 0.0);
  CHECK(all.pro_pro > 0.0);

  LossBreakdown only_ins_pro = total_loss(b, ps, h, LossToggles{false, false});
  CHECK(only_ins_pro.ins_ins == 0.0);
  CHECK(only_ins_pro.pro_pro == 0.0);
  CHECK(only_ins_pro.total == only_ins_pro.ins_pro);
  CHECK(only_ins_pro.ins_pro == doctest::Approx(all.ins_pro).epsilon(1e-15));

  LossBreakdown no_ins_ins = total_loss(b, ps, h, LossToggles{false, true});
  CHECK(no_ins_ins.ins_ins == 0.0);
  CHECK(no_ins_ins.total ==
        doctest::Approx(all.ins_pro + all.pro_pro).epsilon(1e-15));

  // Disabled terms keep their gradients at exactly zero: compare the
  // prototype gradient of {ins_pro only} against {ins_pro + pro_pro}.
  LossBreakdown no_pro_pro = total_loss(b, ps, h, LossToggles{true, false});
  ProProResult pp = loss_pro_pro(ps, h, b.tau);
  for (int level = 1; level <= 2; ++level) {
    const auto& with = all.d_protos.at(level).data();
    const auto& without = no_pro_pro.d_protos.at(level).data();
    const auto& pp_only = pp.d_protos.at(level).data();
    for (size_t i = 0; i < with.size(); ++i) {
      CHECK(with[i] ==
            doctest::Approx(without[i] + pp_only[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("every loss is invariant under positive rescaling of one vector") {
  SenseHierarchy h = small_hierarchy();
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    PrototypeSet ps = PrototypeSet::init(h, 4, 4000 + trial);
    Rng batch_rng(500 + trial);
    Batch b = pt::random_batch(batch_rng, h, 4, 4, 0.1);
    LossBreakdown base = total_loss(b, ps, h, LossToggles{});

    const double alpha = 0.25 + 4.0 * rng.uniform();
    Batch scaled = b;
    scale(scaled.vecs[trial % scaled.vecs.size()], alpha);
    LossBreakdown after = total_loss(scaled, ps, h, LossToggles{});
    CHECK(std::abs(after.total - base.total) < 1e-9);

    PrototypeSet scaled_ps = ps;
    scale(scaled_ps.at_level(2).row(static_cast<size_t>(trial) % 4), alpha);
    LossBreakdown after_ps = total_loss(b, scaled_ps, h, LossToggles{});
    CHECK(std::abs(after_ps.total - base.total) < 1e-9);
  }
}

TEST_CASE("gradients are orthogonal to their own vectors") {
  SenseHierarchy h = small_hierarchy();
  for (int trial = 0; trial < 20; ++trial) {
    PrototypeSet ps = PrototypeSet::init(h, 5, 5000 + trial);
    Rng rng(600 + trial);
    Batch b = pt::random_batch(rng, h, 4, 5, 0.1);
    LossBreakdown out = total_loss(b, ps, h, LossToggles{});
    for (size_t i = 0; i < b.size(); ++i) {
      const double g_dot_v = dot(as_span(out.d_vecs[i]), as_span(b.vecs[i]));
      CHECK(std::abs(g_dot_v) <=
            1e-8 * norm(as_span(out.d_vecs[i])) * norm(as_span(b.vecs[i])) +
                1e-12);
    }
    for (int level = 1; level <= 2; ++level) {
      const Matrix& grad = out.d_protos.at(level);
      const Matrix& rows = ps.at_level(level);
      for (size_t r = 0; r < grad.rows(); ++r) {
        const double g_dot_c = dot(grad.row(r), rows.row(r));
        CHECK(std::abs(g_dot_c) <=
              1e-8 * norm(grad.row(r)) * norm(rows.row(r)) + 1e-12);
      }
    }
  }
}

TEST_CASE("total_loss gradients match central finite differences") {
  SenseHierarchy h = small_hierarchy();
  for (int trial = 0; trial < 8; ++trial) {
    PrototypeSet ps = PrototypeSet::init(h, 3, 6000 + trial);
    Rng rng(700 + trial);
    Batch b = pt::random_batch(rng, h, 4, 3, 0.1);

    LossBreakdown out = total_loss(b, ps, h, LossToggles{});
    auto loss = [&]() { return total_loss(b, ps, h, LossToggles{}).total; };

    for (size_t i = 0; i < b.size(); ++i) {
      auto check = pt::check_gradient(b.vecs[i], as_span(out.d_vecs[i]), loss);
      CHECK(check.max_rel_error < 1e-4);
    }
    for (int level = 1; level <= 2; ++level) {
      auto check = pt::check_gradient(ps.at_level(level).data(),
                                      as_span(out.d_protos.at(level).data()),
                                      loss);
      CHECK(check.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("losses are non-negative and finite on random inputs") {
  SenseHierarchy h = small_hierarchy();
  for (int trial = 0; trial < 20; ++trial) {
    PrototypeSet ps = PrototypeSet::init(h, 4, 7000 + trial);
    Rng rng(800 + trial);
    Batch b = pt::random_batch(rng, h, 5, 4, 0.1);
    LossBreakdown out = total_loss(b, ps, h, LossToggles{});
    for (double value : {out.ins_ins, out.ins_pro, out.pro_pro, out.total}) {
      CHECK(value >= 0.0);
      CHECK(std::isfinite(value));
    }
  }
}
