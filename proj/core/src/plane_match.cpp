#include "acrkit/plane_match.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <string>

#include "acrkit/error.hpp"

namespace acrkit {

PlaneGraph build_plane_graph(const PlaneSegmentMap& map) {
  PlaneGraph g;
  g.plane_count = map.plane_count();
  g.distance = region_distance_matrix(map);
  if (g.distance.hasNaN()) throw Error(ErrorKind::kMissingPlane, "plane ids are not compact");
  return g;
}

std::size_t node_affinity(const CorrespondenceSet& c, const PlaneSegmentMap& m_ref,
                          const PlaneSegmentMap& m_cur, int a, int c_id) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (m_ref.label_at(c.a[i]) == a && m_cur.label_at(c.b[i]) == c_id) ++n;
  }
  return n;
}

Eigen::MatrixXd node_affinities(const CorrespondenceSet& c, const PlaneSegmentMap& m_ref,
                                const PlaneSegmentMap& m_cur) {
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(m_ref.plane_count(), m_cur.plane_count());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int a = m_ref.label_at(c.a[i]);
    const int b = m_cur.label_at(c.b[i]);
    if (a > 0 && b > 0) n(a - 1, b - 1) += 1.0;
  }
  return n;
}

double edge_affinity(double d_ref, double d_cur, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::kInvalidInput, "sigma must be positive");
  return std::exp(-std::abs(d_ref - d_cur) / sigma);
}

Eigen::MatrixXd assemble_affinity(const Eigen::MatrixXd& nodes, const PlaneGraph& g_ref,
                                  const PlaneGraph& g_cur, double sigma, bool normalize) {
  const int h = static_cast<int>(nodes.rows());
  const int m = static_cast<int>(nodes.cols());
  if (h > m) {
    throw Error(ErrorKind::kOrientation,
                "reference has more planes than current; swap the inputs");
  }
  if (g_ref.plane_count != h || g_cur.plane_count != m) {
    throw Error(ErrorKind::kInvalidInput, "graph sizes do not match node affinities");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(h) * m;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  const double node_scale = normalize && nodes.maxCoeff() > 0.0 ? nodes.maxCoeff() : 1.0;
  for (int a = 0; a < h; ++a) {
    for (int c = 0; c < m; ++c) w(pair_index(a, c, h), pair_index(a, c, h)) = nodes(a, c) / node_scale;
  }
  double edge_max = 0.0;
  for (int a = 0; a < h; ++a)
    for (int b = 0; b < h; ++b) {
      if (a == b) continue;
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) {
          if (c == d) continue;
          const double e = edge_affinity(g_ref.distance(a, b), g_cur.distance(c, d), sigma);
          w(pair_index(a, c, h), pair_index(b, d, h)) = e;
          edge_max = std::max(edge_max, e);
        }
    }
  if (normalize && edge_max > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) w(i, j) /= edge_max;
  }
  return w;
}

Eigen::MatrixXi Assignment::matrix() const {
  Eigen::MatrixXi u = Eigen::MatrixXi::Zero(h, m);
  for (int a = 0; a < h; ++a) u(a, column[static_cast<std::size_t>(a)]) = 1;
  return u;
}

Eigen::VectorXd Assignment::expanded() const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h) * m);
  for (int a = 0; a < h; ++a) v(pair_index(a, column[static_cast<std::size_t>(a)], h)) = 1.0;
  return v;
}

void Assignment::validate() const {
  if (static_cast<int>(column.size()) != h || h > m) {
    throw Error(ErrorKind::kInvalidInput, "assignment shape is infeasible");
  }
  std::vector<int> used(static_cast<std::size_t>(m), 0);
  for (int c : column) {
    if (c < 0 || c >= m || used[static_cast<std::size_t>(c)]++ > 0) {
      throw Error(ErrorKind::kInvalidInput, "assignment is not one-to-one");
    }
  }
}

double matching_objective(const Eigen::MatrixXd& w, const Assignment& u) {
  const Eigen::VectorXd x = u.expanded();
  return x.dot(w * x);
}

double injection_count(int h, int m) {
  double n = 1.0;
  for (int i = 0; i < h; ++i) n *= static_cast<double>(m - i);
  return n;
}

namespace {

Assignment solve_exact(const Eigen::MatrixXd& w, int h, int m) {
  Assignment best{h, m, std::vector<int>(static_cast<std::size_t>(h), 0)};
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<int> cur(static_cast<std::size_t>(h), -1);
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  std::function<void(int, double)> rec = [&](int a, double score) {
    if (a == h) {
      if (score > best_score) {
        best_score = score;
        best.column = cur;
      }
      return;
    }
    for (int c = 0; c < m; ++c) {
      if (used[static_cast<std::size_t>(c)]) continue;
      const Eigen::Index i = pair_index(a, c, h);
      double add = w(i, i);
      for (int b = 0; b < a; ++b) {
        const Eigen::Index j = pair_index(b, cur[static_cast<std::size_t>(b)], h);
        add += w(i, j) + w(j, i);
      }
      used[static_cast<std::size_t>(c)] = true;
      cur[static_cast<std::size_t>(a)] = c;
      rec(a + 1, score + add);
      used[static_cast<std::size_t>(c)] = false;
    }
  };
  rec(0, 0.0);
  return best;
}

Assignment solve_spectral(const Eigen::MatrixXd& w, int h, int m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (w + w.transpose()));
  const Eigen::VectorXd x = es.eigenvectors().col(w.rows() - 1).cwiseAbs();
  Assignment out{h, m, std::vector<int>(static_cast<std::size_t>(h), -1)};
  std::vector<bool> row_done(static_cast<std::size_t>(h), false);
  std::vector<bool> col_done(static_cast<std::size_t>(m), false);
  for (int step = 0; step < h; ++step) {
    int ba = -1, bc = -1;
    double bv = -1.0;
    for (int c = 0; c < m; ++c) {
      if (col_done[static_cast<std::size_t>(c)]) continue;
      for (int a = 0; a < h; ++a) {
        if (row_done[static_cast<std::size_t>(a)]) continue;
        const double v = x(pair_index(a, c, h));
        if (v > bv) {
          bv = v;
          ba = a;
          bc = c;
        }
      }
    }
    out.column[static_cast<std::size_t>(ba)] = bc;
    row_done[static_cast<std::size_t>(ba)] = true;
    col_done[static_cast<std::size_t>(bc)] = true;
  }
  return out;
}

}  // namespace

Assignment solve_matching(const Eigen::MatrixXd& w, int h, int m, MatchMode mode,
                          std::size_t exact_budget) {
  if (h > m) {
    throw Error(ErrorKind::kOrientation, "more rows than columns; swap the inputs");
  }
  if (h < 1) throw Error(ErrorKind::kInsufficientData, "no planes to match");
  const Eigen::Index n = static_cast<Eigen::Index>(h) * m;
  if (w.rows() != n || w.cols() != n) {
    throw Error(ErrorKind::kInvalidInput, "affinity matrix must be MH x MH");
  }
  if (mode == MatchMode::kExact) {
    if (injection_count(h, m) > static_cast<double>(exact_budget)) {
      throw Error(ErrorKind::kBudgetExceeded,
                  "exact matching would enumerate " + std::to_string(injection_count(h, m)) +
                      " assignments");
    }
    return solve_exact(w, h, m);
  }
  return solve_spectral(w, h, m);
}

PlaneMatchResult match_planes(const CorrespondenceSet& c, const PlaneSegmentMap& m_ref,
                              const PlaneSegmentMap& m_cur, const MatchOptions& opts) {
  PlaneMatchResult out;
  const int h0 = m_ref.plane_count();
  const int m0 = m_cur.plane_count();
  if (h0 == 0 || m0 == 0) return out;
  out.transposed = h0 > m0;
  const CorrespondenceSet cs = out.transposed ? c.swapped() : c;
  const PlaneSegmentMap& ra = out.transposed ? m_cur : m_ref;
  const PlaneSegmentMap& rb = out.transposed ? m_ref : m_cur;
  const int h = ra.plane_count();
  const int m = rb.plane_count();

  double sigma = opts.sigma_px;
  if (!(sigma > 0.0)) sigma = 0.1 * std::hypot(double(m_ref.width()), double(m_ref.height()));
  const Eigen::MatrixXd nodes = node_affinities(cs, ra, rb);
  const Eigen::MatrixXd w = assemble_affinity(nodes, build_plane_graph(ra),
                                              build_plane_graph(rb), sigma, opts.normalize_terms);
  out.exact = opts.prefer_exact && injection_count(h, m) <= static_cast<double>(opts.exact_budget);
  const Assignment u = solve_matching(w, h, m, out.exact ? MatchMode::kExact : MatchMode::kSpectral,
                                      opts.exact_budget);
  out.objective = matching_objective(w, u);
  for (int a = 0; a < h; ++a) {
    const int col = u.column[static_cast<std::size_t>(a)];
    PlaneMatch pm{a + 1, col + 1, static_cast<std::size_t>(nodes(a, col))};
    if (out.transposed) std::swap(pm.ref_id, pm.cur_id);
    out.pairs.push_back(pm);
  }
  return out;
}

}  // namespace acrkit
