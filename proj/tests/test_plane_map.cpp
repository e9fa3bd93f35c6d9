#include <acrkit/error.hpp>
#include <acrkit/plane_map.hpp>
#include <acrkit/plane_match.hpp>
#include <acrkit/simulator.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>

#include "fixtures.hpp"

using namespace acrkit;
using acrkit::testing::throws_kind;

namespace {

void fill(PlaneSegmentMap& m, int x0, int y0, int w, int h, PlaneSegmentMap::Label id) {
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) m.set(x, y, id);
}

struct Extent {
  int x0, y0, x1, y1;
  std::size_t count;
};

Extent extent(const PlaneSegmentMap& m, int id) {
  Extent e{m.width(), m.height(), -1, -1, 0};
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (m.at(x, y) != id) continue;
      e.x0 = std::min(e.x0, x);
      e.y0 = std::min(e.y0, y);
      e.x1 = std::max(e.x1, x);
      e.y1 = std::max(e.y1, y);
      ++e.count;
    }
  return e;
}

double brute_min_distance(const PlaneSegmentMap& m, int a, int b) {
  double best = std::numeric_limits<double>::infinity();
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (m.at(x, y) != a) continue;
      for (int v = 0; v < m.height(); ++v)
        for (int u = 0; u < m.width(); ++u)
          if (m.at(u, v) == b) best = std::min(best, std::hypot(double(x - u), double(y - v)));
    }
  return best;
}

// Random blobs grown from seeds on a small grid.
PlaneSegmentMap random_blobs(std::mt19937_64& rng, int w, int h, int planes) {
  PlaneSegmentMap m(w, h);
  std::uniform_int_distribution<int> ux(0, w - 1), uy(0, h - 1), step(-1, 1);
  for (int id = 1; id <= planes; ++id) {
    int x = ux(rng), y = uy(rng);
    for (int k = 0; k < 25; ++k) {
      if (m.at(x, y) == 0) m.set(x, y, static_cast<PlaneSegmentMap::Label>(id));
      x = std::clamp(x + step(rng), 0, w - 1);
      y = std::clamp(y + step(rng), 0, h - 1);
    }
  }
  return m.compacted();
}

struct Graph {
  Eigen::MatrixXd nodes;
  PlaneGraph ref, cur;
};

PlaneGraph random_graph(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 200.0);
  PlaneGraph g;
  g.plane_count = n;
  g.distance = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) g.distance(a, b) = g.distance(b, a) = u(rng);
  return g;
}

Graph random_problem(std::mt19937_64& rng, int h, int m) {
  std::uniform_int_distribution<int> count(0, 40);
  Graph g;
  g.nodes = Eigen::MatrixXd(h, m);
  for (int a = 0; a < h; ++a)
    for (int c = 0; c < m; ++c) g.nodes(a, c) = count(rng);
  g.ref = random_graph(rng, h);
  g.cur = random_graph(rng, m);
  return g;
}

// All injections of h rows into m columns in lexicographic order.
std::vector<std::vector<int>> injections(int h, int m) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  const auto rec = [&](auto&& self) -> void {
    if (static_cast<int>(cur.size()) == h) {
      out.push_back(cur);
      return;
    }
    for (int c = 0; c < m; ++c) {
      if (used[c]) continue;
      used[c] = true;
      cur.push_back(c);
      self(self);
      cur.pop_back();
      used[c] = false;
    }
  };
  rec(rec);
  return out;
}

// Node sum plus edge sum over ordered pairs, written out directly.
double two_sum(const Graph& g, const std::vector<int>& col, double sigma) {
  double s = 0.0;
  const int h = static_cast<int>(col.size());
  for (int a = 0; a < h; ++a) s += g.nodes(a, col[a]);
  for (int a = 0; a < h; ++a)
    for (int b = 0; b < h; ++b) {
      if (a == b) continue;
      s += std::exp(-std::abs(g.ref.distance(a, b) - g.cur.distance(col[a], col[b])) / sigma);
    }
  return s;
}

// Four well separated rectangles, each with its own point set.
World four_plane_world(const Camera& cam) {
  SceneSpec s;
  s.seed = 17;
  const std::vector<Vec3> centers{{-0.25, -0.15, 1.2}, {0.22, -0.16, 1.3},
                                  {-0.22, 0.17, 1.1}, {0.26, 0.15, 1.4}};
  const std::vector<std::size_t> counts{60, 90, 120, 150};
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const Vec3 n = Vec3(0.05 * double(i), -0.04, 1.0).normalized();
    s.planes.push_back(PlaneSpec::rectangle(n, centers[i], Vec2(0.09, 0.06), counts[i]));
  }
  return generate_scene(s, cam);
}

}  // namespace

TEST(PlaneSegmentMap, LabelsCountAndCompact) {
  PlaneSegmentMap m(8, 4);
  fill(m, 0, 0, 2, 2, 3);
  fill(m, 4, 0, 2, 2, 1);
  EXPECT_EQ(m.plane_count(), 3);
  EXPECT_TRUE(throws_kind([&] { m.validate(); }, ErrorKind::kInvalidInput));
  const PlaneSegmentMap c = m.compacted();
  EXPECT_EQ(c.plane_count(), 2);
  EXPECT_EQ(c.at(0, 0), 2);
  EXPECT_EQ(c.at(4, 0), 1);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.label_at({0.4, 0.4}), 2);
  EXPECT_EQ(c.label_at({-3.0, 0.0}), 0);
}

TEST(PlaneSegmentMap, PgmRoundTrip) {
  std::mt19937_64 rng(4);
  const PlaneSegmentMap m = random_blobs(rng, 23, 17, 5);
  const auto path = std::filesystem::temp_directory_path() / "acrkit_roundtrip.pgm";
  write_pgm(m, path);
  const PlaneSegmentMap back = read_pgm(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.width(), 23);
  EXPECT_EQ(back.height(), 17);
  EXPECT_EQ(back.labels(), m.labels());
}

TEST(PlaneSegmentMap, MissingPgmIsMissingInput) {
  EXPECT_TRUE(throws_kind([] { read_pgm("/nonexistent/mask.pgm"); }, ErrorKind::kMissingInput));
}

TEST(ErodeMask, RadiusZeroIsIdentity) {
  std::mt19937_64 rng(8);
  const PlaneSegmentMap m = random_blobs(rng, 30, 30, 4);
  EXPECT_EQ(erode_mask(m, 0).labels(), m.labels());
}

TEST(ErodeMask, SquareShrinksByRadiusOnEachSide) {
  PlaneSegmentMap m(20, 20);
  fill(m, 5, 5, 10, 10, 1);
  const PlaneSegmentMap e = erode_mask(m, 2);
  const Extent x = extent(e, 1);
  EXPECT_EQ(x.x1 - x.x0 + 1, 6);
  EXPECT_EQ(x.y1 - x.y0 + 1, 6);
  EXPECT_EQ(x.count, 36u);
}

TEST(ErodeMask, SmallRegionIsDroppedAndIdsCompacted) {
  PlaneSegmentMap m(30, 20);
  fill(m, 2, 2, 3, 3, 1);
  fill(m, 10, 2, 12, 12, 2);
  const PlaneSegmentMap e = erode_mask(m, 2);
  EXPECT_EQ(e.plane_count(), 1);
  EXPECT_EQ(e.at(15, 8), 1);
  EXPECT_EQ(e.at(3, 3), 0);
}

TEST(ErodeMask, MatchesDiskDefinition) {
  std::mt19937_64 rng(12);
  PlaneSegmentMap m(24, 24);
  fill(m, 2, 2, 12, 9, 1);
  fill(m, 14, 2, 8, 20, 2);
  fill(m, 2, 12, 11, 10, 3);
  const int r = 3;
  const PlaneSegmentMap e = erode_mask(m, r);
  // A pixel survives when no other label lies within distance r.
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) {
      const int id = m.at(x, y);
      bool keep = id != 0;
      for (int v = 0; keep && v < 24; ++v)
        for (int u = 0; keep && u < 24; ++u)
          if (m.at(u, v) != id && (x - u) * (x - u) + (y - v) * (y - v) <= r * r) keep = false;
      EXPECT_EQ(e.at(x, y) != 0, keep) << x << "," << y;
    }
}

TEST(MinRegionDistance, PythagoreanTriple) {
  PlaneSegmentMap m(5, 5);
  m.set(0, 0, 1);
  m.set(3, 4, 2);
  EXPECT_DOUBLE_EQ(min_region_distance(m, 1, 2), 5.0);
  EXPECT_DOUBLE_EQ(min_region_distance(m, 2, 1), 5.0);
}

TEST(MinRegionDistance, TouchingRegionsAreZero) {
  PlaneSegmentMap m(6, 6);
  fill(m, 0, 0, 3, 6, 1);
  fill(m, 3, 0, 3, 6, 2);
  EXPECT_EQ(min_region_distance(m, 1, 2), 0.0);
  PlaneSegmentMap d(4, 4);
  d.set(0, 0, 1);
  d.set(1, 1, 2);
  EXPECT_EQ(min_region_distance(d, 1, 2), 0.0);
}

TEST(MinRegionDistance, UnknownIdThrows) {
  PlaneSegmentMap m(4, 4);
  m.set(0, 0, 1);
  EXPECT_TRUE(throws_kind([&] { min_region_distance(m, 1, 2); }, ErrorKind::kMissingPlane));
}

TEST(MinRegionDistance, MatchesBruteForceOnRandomBlobs) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const PlaneSegmentMap m = random_blobs(rng, 32, 24, 4);
    for (int a = 1; a <= m.plane_count(); ++a)
      for (int b = a + 1; b <= m.plane_count(); ++b) {
        double want = brute_min_distance(m, a, b);
        if (want <= std::sqrt(2.0)) want = 0.0;
        EXPECT_NEAR(min_region_distance(m, a, b), want, 1e-12);
      }
  }
}

TEST(PlaneGraph, SymmetricNonnegativeZeroDiagonal) {
  std::mt19937_64 rng(5);
  const PlaneSegmentMap m = random_blobs(rng, 40, 30, 5);
  const PlaneGraph g = build_plane_graph(m);
  ASSERT_EQ(g.plane_count, m.plane_count());
  EXPECT_EQ(g.distance, g.distance.transpose());
  EXPECT_GE(g.distance.minCoeff(), 0.0);
  EXPECT_EQ(g.distance.diagonal().norm(), 0.0);
}

TEST(NodeAffinity, CountsPairsInBothPlanes) {
  PlaneSegmentMap ref(20, 10), cur(20, 10);
  fill(ref, 0, 0, 10, 10, 1);
  fill(ref, 10, 0, 10, 10, 2);
  fill(cur, 0, 0, 10, 10, 2);
  fill(cur, 10, 0, 10, 10, 1);
  CorrespondenceSet none;
  EXPECT_EQ(node_affinity(none, ref, cur, 1, 2), 0u);
  CorrespondenceSet c;
  for (int i = 0; i < 12; ++i) c.add({1.0 + 0.5 * i, 3.0}, {11.0 + 0.5 * i, 4.0});
  c.add({15.0, 5.0}, {2.0, 2.0});
  EXPECT_EQ(node_affinity(c, ref, cur, 1, 1), 12u);
  EXPECT_EQ(node_affinity(c, ref, cur, 2, 2), 1u);
  EXPECT_EQ(node_affinity(c, ref, cur, 1, 2), 0u);
  const Eigen::MatrixXd n = node_affinities(c, ref, cur);
  EXPECT_EQ(n(0, 0), 12.0);
  EXPECT_EQ(n(1, 1), 1.0);
}

TEST(NodeAffinity, EqualsSimulatorPlaneCounts) {
  const Camera cam = Camera::canon_5d3_quarter();
  const World w = four_plane_world(cam);
  const Pose motion{Rotation::ry_deg(2.0), Vec3(0.03, 0.0, 0.01)};
  const View ref = render_view(w, Pose::identity(), cam);
  const SimObservation so = observe(w, ref, motion, cam, {}, {}, 3);
  const auto id_of = [](const std::vector<int>& planes, int plane) {
    return static_cast<int>(std::find(planes.begin(), planes.end(), plane) - planes.begin()) + 1;
  };
  const Eigen::MatrixXd n = node_affinities(so.obs.matches, ref.mask, so.obs.mask);
  Eigen::MatrixXd want = Eigen::MatrixXd::Zero(n.rows(), n.cols());
  for (const auto& label : so.obs.matches.plane_label) {
    if (label) want(id_of(ref.mask_planes, *label) - 1, id_of(so.mask_planes, *label) - 1) += 1.0;
  }
  EXPECT_EQ(n, want);
}

TEST(EdgeAffinity, KernelValues) {
  EXPECT_DOUBLE_EQ(edge_affinity(40.0, 40.0, 10.0), 1.0);
  EXPECT_NEAR(edge_affinity(30.0, 40.0, 10.0), 0.36787944117144233, 1e-15);
  EXPECT_NEAR(edge_affinity(50.0, 40.0, 10.0), 0.36787944117144233, 1e-15);
  EXPECT_LT(edge_affinity(0.0, 1e6, 10.0), 1e-300);
  EXPECT_TRUE(throws_kind([] { edge_affinity(1.0, 2.0, 0.0); }, ErrorKind::kInvalidInput));
}

TEST(AssembleAffinity, SinglePlaneIsTheNodeTerm) {
  Eigen::MatrixXd nodes(1, 1);
  nodes << 7.0;
  PlaneGraph g{1, Eigen::MatrixXd::Zero(1, 1)};
  const Eigen::MatrixXd w = assemble_affinity(nodes, g, g, 10.0, false);
  ASSERT_EQ(w.rows(), 1);
  EXPECT_EQ(w(0, 0), 7.0);
}

TEST(AssembleAffinity, TwoByTwoLayout) {
  Eigen::MatrixXd nodes(2, 2);
  nodes << 5.0, 1.0, 2.0, 8.0;
  PlaneGraph gr{2, Eigen::MatrixXd::Zero(2, 2)}, gc = gr;
  gr.distance(0, 1) = gr.distance(1, 0) = 30.0;
  gc.distance(0, 1) = gc.distance(1, 0) = 50.0;
  const double e = std::exp(-2.0);
  // Column expansion: index a + c * H.
  Eigen::Matrix4d want;
  want << 5.0, 0.0, 0.0, e,
          0.0, 2.0, e, 0.0,
          0.0, e, 1.0, 0.0,
          e, 0.0, 0.0, 8.0;
  const Eigen::MatrixXd w = assemble_affinity(nodes, gr, gc, 10.0, false);
  EXPECT_LT((w - want).norm(), 1e-15);
  EXPECT_EQ(w, w.transpose());
}

TEST(AssembleAffinity, MoreReferencePlanesIsAnOrientationError) {
  Eigen::MatrixXd nodes = Eigen::MatrixXd::Ones(3, 2);
  PlaneGraph g3{3, Eigen::MatrixXd::Zero(3, 3)}, g2{2, Eigen::MatrixXd::Zero(2, 2)};
  EXPECT_TRUE(throws_kind([&] { assemble_affinity(nodes, g3, g2, 1.0); }, ErrorKind::kOrientation));
  EXPECT_TRUE(throws_kind([&] { solve_matching(Eigen::MatrixXd::Zero(6, 6), 3, 2, MatchMode::kExact); },
                          ErrorKind::kOrientation));
}

TEST(MatchingObjective, EqualsTwoSumForEveryFeasibleAssignment) {
  std::mt19937_64 rng(31);
  for (int h = 1; h <= 4; ++h)
    for (int m = h; m <= 4; ++m) {
      const Graph g = random_problem(rng, h, m);
      const Eigen::MatrixXd w = assemble_affinity(g.nodes, g.ref, g.cur, 25.0, false);
      EXPECT_EQ(w, w.transpose());
      EXPECT_GE(w.minCoeff(), 0.0);
      for (const auto& col : injections(h, m)) {
        const Assignment u{h, m, col};
        EXPECT_NO_THROW(u.validate());
        const Eigen::MatrixXi um = u.matrix();
        EXPECT_TRUE((um.rowwise().sum().array() == 1).all());
        EXPECT_TRUE((um.colwise().sum().array() <= 1).all());
        EXPECT_NEAR(matching_objective(w, u), two_sum(g, col, 25.0), 1e-9);
      }
    }
}

TEST(SolveMatching, ExactIsTheBruteForceOptimum) {
  std::mt19937_64 rng(2024);
  for (int h = 1; h <= 5; ++h)
    for (int m = h; m <= 5; ++m)
      for (int trial = 0; trial < 5; ++trial) {
        const Graph g = random_problem(rng, h, m);
        const Eigen::MatrixXd w = assemble_affinity(g.nodes, g.ref, g.cur, 30.0);
        double best = -1.0;
        std::vector<int> arg;
        for (const auto& col : injections(h, m)) {
          const double v = matching_objective(w, {h, m, col});
          if (v > best) {
            best = v;
            arg = col;
          }
        }
        const Assignment got = solve_matching(w, h, m, MatchMode::kExact);
        EXPECT_NO_THROW(got.validate());
        const double v = matching_objective(w, got);
        EXPECT_TRUE(got.column == arg || std::abs(v - best) <= 1e-12 * best)
            << "h=" << h << " m=" << m;
      }
}

TEST(SolveMatching, SingleFeasibleAssignment) {
  const Eigen::MatrixXd w = Eigen::MatrixXd::Constant(1, 1, 3.0);
  EXPECT_EQ(solve_matching(w, 1, 1, MatchMode::kExact).column, std::vector<int>{0});
  EXPECT_EQ(solve_matching(w, 1, 1, MatchMode::kSpectral).column, std::vector<int>{0});
}

TEST(SolveMatching, SpectralIsFeasibleAndBoundedByExact) {
  std::mt19937_64 rng(8);
  std::size_t within = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = random_problem(rng, 3, 5);
    const Eigen::MatrixXd w = assemble_affinity(g.nodes, g.ref, g.cur, 30.0);
    const Assignment s = solve_matching(w, 3, 5, MatchMode::kSpectral);
    EXPECT_NO_THROW(s.validate());
    const double vs = matching_objective(w, s);
    const double ve = matching_objective(w, solve_matching(w, 3, 5, MatchMode::kExact));
    EXPECT_GE(vs, 0.0);
    EXPECT_LE(vs, ve + 1e-12);
    if (vs >= 0.9 * ve) ++within;
  }
  RecordProperty("spectral_within_10pct_of_100", static_cast<int>(within));
  std::printf("spectral within 10%% of exact: %zu / 100\n", within);
}

TEST(SolveMatching, BudgetExceeded) {
  const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(12, 12);
  EXPECT_TRUE(throws_kind([&] { solve_matching(w, 3, 4, MatchMode::kExact, 23); },
                          ErrorKind::kBudgetExceeded));
  EXPECT_NO_THROW(solve_matching(w, 3, 4, MatchMode::kExact, 24));
}

TEST(MatchPlanes, FourPlaneSceneRecoversTruePairs) {
  const Camera cam = Camera::canon_5d3_quarter();
  const World w = four_plane_world(cam);
  const Pose motion{Rotation::rz_deg(3.0) * Rotation::ry_deg(-2.0), Vec3(0.04, -0.02, 0.02)};
  const View ref = render_view(w, Pose::identity(), cam);
  const SimObservation so = observe(w, ref, motion, cam, {}, {}, 5);
  const PlaneSegmentMap er = erode_mask(ref.mask, 5);
  const PlaneSegmentMap ec = erode_mask(so.obs.mask, 5);
  ASSERT_EQ(er.plane_count(), 4);
  ASSERT_EQ(ec.plane_count(), 4);
  for (bool exact : {true, false}) {
    MatchOptions opts;
    opts.prefer_exact = exact;
    const PlaneMatchResult r = match_planes(so.obs.matches, er, ec, opts);
    EXPECT_EQ(r.exact, exact);
    ASSERT_EQ(r.pairs.size(), 4u);
    for (const PlaneMatch& p : r.pairs) {
      EXPECT_EQ(ref.mask_planes[p.ref_id - 1], so.mask_planes[p.cur_id - 1]);
      EXPECT_GT(p.shared, 0u);
    }
  }
}

TEST(MatchPlanes, PermutingLabelsPermutesTheAssignment) {
  PlaneSegmentMap ref(60, 20), cur(60, 20);
  fill(ref, 0, 0, 10, 20, 1);
  fill(ref, 20, 0, 10, 20, 2);
  fill(ref, 45, 0, 10, 20, 3);
  fill(cur, 2, 0, 10, 20, 1);
  fill(cur, 21, 0, 10, 20, 2);
  fill(cur, 47, 0, 10, 20, 3);
  CorrespondenceSet c;
  const std::vector<int> n{5, 9, 7};
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < n[k]; ++i) {
      const double x = (k == 0 ? 1.0 : k == 1 ? 21.0 : 46.0) + 0.8 * i;
      c.add({x, 5.0 + i}, {x + 1.5, 5.0 + i});
    }
  const PlaneMatchResult base = match_planes(c, ref, cur);
  ASSERT_EQ(base.pairs.size(), 3u);
  for (const PlaneMatch& p : base.pairs) EXPECT_EQ(p.ref_id, p.cur_id);

  // Relabel the current map with 1->3, 2->1, 3->2.
  const std::vector<int> perm{0, 3, 1, 2};
  PlaneSegmentMap cur_p(60, 20);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 60; ++x) cur_p.set(x, y, static_cast<PlaneSegmentMap::Label>(perm[cur.at(x, y)]));
  const PlaneMatchResult moved = match_planes(c, ref, cur_p);
  EXPECT_NEAR(moved.objective, base.objective, 1e-12);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(moved.pairs[i].ref_id, base.pairs[i].ref_id);
    EXPECT_EQ(moved.pairs[i].cur_id, perm[base.pairs[i].cur_id]);
    EXPECT_EQ(moved.pairs[i].shared, base.pairs[i].shared);
  }
}

TEST(MatchPlanes, MoreReferencePlanesAreTransposed) {
  PlaneSegmentMap ref(40, 10), cur(40, 10);
  fill(ref, 0, 0, 10, 10, 1);
  fill(ref, 15, 0, 10, 10, 2);
  fill(ref, 30, 0, 10, 10, 3);
  fill(cur, 14, 0, 12, 10, 1);
  fill(cur, 29, 0, 11, 10, 2);
  CorrespondenceSet c;
  for (int i = 0; i < 6; ++i) c.add({16.0 + i, 3.0}, {16.0 + i, 3.0});
  for (int i = 0; i < 4; ++i) c.add({31.0 + i, 3.0}, {31.0 + i, 3.0});
  const PlaneMatchResult r = match_planes(c, ref, cur);
  EXPECT_TRUE(r.transposed);
  ASSERT_EQ(r.pairs.size(), 2u);
  for (const PlaneMatch& p : r.pairs) {
    EXPECT_EQ(p.cur_id + 1, p.ref_id);
  }
}

TEST(MatchPlanes, EmptyMapGivesNoPairs) {
  PlaneSegmentMap ref(10, 10), cur(10, 10);
  fill(ref, 0, 0, 5, 5, 1);
  EXPECT_TRUE(match_planes({}, ref, cur).pairs.empty());
}
