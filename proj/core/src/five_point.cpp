// Minimal and linear essential-matrix solvers.
#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>

#include "acrkit/error.hpp"
#include "acrkit/pose_estimation.hpp"

namespace acrkit {
namespace {

// Polynomial in (x, y, z) of total degree <= 3, stored densely by exponent.
struct Poly {
  std::array<double, 64> c{};
  static int at(int i, int j, int k) { return i * 16 + j * 4 + k; }
  double& operator()(int i, int j, int k) { return c[at(i, j, k)]; }
  double operator()(int i, int j, int k) const { return c[at(i, j, k)]; }
};

Poly operator+(const Poly& p, const Poly& q) {
  Poly r;
  for (int i = 0; i < 64; ++i) r.c[i] = p.c[i] + q.c[i];
  return r;
}

Poly operator-(const Poly& p, const Poly& q) {
  Poly r;
  for (int i = 0; i < 64; ++i) r.c[i] = p.c[i] - q.c[i];
  return r;
}

Poly operator*(double s, const Poly& p) {
  Poly r;
  for (int i = 0; i < 64; ++i) r.c[i] = s * p.c[i];
  return r;
}

Poly operator*(const Poly& p, const Poly& q) {
  Poly r;
  for (int i1 = 0; i1 < 4; ++i1)
    for (int j1 = 0; i1 + j1 < 4; ++j1)
      for (int k1 = 0; i1 + j1 + k1 < 4; ++k1) {
        const double a = p(i1, j1, k1);
        if (a == 0.0) continue;
        for (int i2 = 0; i1 + i2 < 4; ++i2)
          for (int j2 = 0; i1 + i2 + j1 + j2 < 4; ++j2)
            for (int k2 = 0; i1 + i2 + j1 + j2 + k1 + k2 < 4; ++k2) {
              r(i1 + i2, j1 + j2, k1 + k2) += a * q(i2, j2, k2);
            }
      }
  return r;
}

using PolyMat = std::array<std::array<Poly, 3>, 3>;

PolyMat mul(const PolyMat& a, const PolyMat& b) {
  PolyMat r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] = r[i][j] + a[i][k] * b[k][j];
  return r;
}

PolyMat transpose(const PolyMat& a) {
  PolyMat r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = a[j][i];
  return r;
}

// Monomial order: x^3 x^2y x^2z xy^2 xyz xz^2 y^3 y^2z yz^2 z^3 | x^2 xy xz y^2 yz z^2 x y z 1
constexpr std::array<std::array<int, 3>, 20> kMonomials{{
    {3, 0, 0}, {2, 1, 0}, {2, 0, 1}, {1, 2, 0}, {1, 1, 1}, {1, 0, 2}, {0, 3, 0},
    {0, 2, 1}, {0, 1, 2}, {0, 0, 3}, {2, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 2, 0},
    {0, 1, 1}, {0, 0, 2}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0},
}};

Mat3 project_essential(const Mat3& e) {
  Eigen::JacobiSVD<Mat3> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  const double m = 0.5 * (s(0) + s(1));
  return svd.matrixU() * Vec3(m, m, 0.0).asDiagonal() * svd.matrixV().transpose();
}

}  // namespace

std::vector<Mat3> essential_five_point(std::span<const Vec3> ma, std::span<const Vec3> mb) {
  if (ma.size() != 5 || mb.size() != 5) {
    throw Error(ErrorKind::kInsufficientData, "five-point solver needs exactly 5 pairs");
  }
  Eigen::Matrix<double, 5, 9> q;
  for (int i = 0; i < 5; ++i) {
    const Vec3& a = ma[i];
    const Vec3& b = mb[i];
    q.row(i) << b.x() * a.x(), b.x() * a.y(), b.x() * a.z(), b.y() * a.x(), b.y() * a.y(),
        b.y() * a.z(), b.z() * a.x(), b.z() * a.y(), b.z() * a.z();
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 5, 9>> svd(q, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 9>& v = svd.matrixV();
  // E = x X + y Y + z Z + W from the four-dimensional nullspace.
  PolyMat e;
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) {
      const int k = 3 * r + col;
      e[r][col](1, 0, 0) = v(k, 5);
      e[r][col](0, 1, 0) = v(k, 6);
      e[r][col](0, 0, 1) = v(k, 7);
      e[r][col](0, 0, 0) = v(k, 8);
    }
  }

  std::array<Poly, 10> eqs;
  eqs[0] = e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1]) -
           e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0]) +
           e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]);
  const PolyMat eet = mul(e, transpose(e));
  const Poly trace = eet[0][0] + eet[1][1] + eet[2][2];
  const PolyMat eete = mul(eet, e);
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) {
      eqs[1 + 3 * r + col] = 2.0 * eete[r][col] - trace * e[r][col];
    }
  }

  Eigen::Matrix<double, 10, 20> m;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 20; ++j) {
      m(i, j) = eqs[i](kMonomials[j][0], kMonomials[j][1], kMonomials[j][2]);
    }
  }
  const Eigen::Matrix<double, 10, 10> lead = m.leftCols<10>();
  Eigen::PartialPivLU<Eigen::Matrix<double, 10, 10>> lu(lead);
  if (!(std::abs(lu.determinant()) > 1e-300)) return {};
  const Eigen::Matrix<double, 10, 10> b = lu.solve(m.rightCols<10>());
  if (!b.allFinite()) return {};

  // Multiplication by x on the basis [x^2 xy xz y^2 yz z^2 x y z 1].
  Eigen::Matrix<double, 10, 10> act = Eigen::Matrix<double, 10, 10>::Zero();
  for (int i = 0; i < 6; ++i) act.row(i) = -b.row(i);
  act(6, 0) = 1.0;
  act(7, 1) = 1.0;
  act(8, 2) = 1.0;
  act(9, 6) = 1.0;

  Eigen::EigenSolver<Eigen::Matrix<double, 10, 10>> es(act);
  std::vector<Mat3> out;
  for (int i = 0; i < 10; ++i) {
    if (std::abs(es.eigenvalues()(i).imag()) > 1e-10 * (1.0 + std::abs(es.eigenvalues()(i))))
      continue;
    const auto vec = es.eigenvectors().col(i).real();
    if (!(std::abs(vec(9)) > 1e-14)) continue;
    const double x = vec(6) / vec(9);
    const double y = vec(7) / vec(9);
    const double z = vec(8) / vec(9);
    Eigen::Matrix<double, 9, 1> ev = x * v.col(5) + y * v.col(6) + z * v.col(7) + v.col(8);
    Mat3 em;
    em << ev(0), ev(1), ev(2), ev(3), ev(4), ev(5), ev(6), ev(7), ev(8);
    if (!em.allFinite()) continue;
    out.push_back(em / em.norm());
  }
  return out;
}

Mat3 essential_eight_point(std::span<const Vec3> ma, std::span<const Vec3> mb) {
  if (ma.size() != mb.size()) throw Error(ErrorKind::kInvalidInput, "unequal point counts");
  if (ma.size() < 8) throw Error(ErrorKind::kInsufficientData, "eight-point needs 8 pairs");
  // Hartley normalization on the inhomogeneous normalized coordinates.
  const auto normalizer = [](std::span<const Vec3> pts) {
    Vec2 c = Vec2::Zero();
    for (const auto& p : pts) c += p.hnormalized();
    c /= static_cast<double>(pts.size());
    double d = 0.0;
    for (const auto& p : pts) d += (p.hnormalized() - c).norm();
    d /= static_cast<double>(pts.size());
    const double s = d > 0.0 ? std::sqrt(2.0) / d : 1.0;
    Mat3 t;
    t << s, 0.0, -s * c.x(), 0.0, s, -s * c.y(), 0.0, 0.0, 1.0;
    return t;
  };
  const Mat3 ta = normalizer(ma);
  const Mat3 tb = normalizer(mb);
  const std::size_t n = ma.size();
  Eigen::Matrix<double, Eigen::Dynamic, 9> a(n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = ta * (ma[i] / ma[i].z());
    const Vec3 q = tb * (mb[i] / mb[i].z());
    a.row(static_cast<Eigen::Index>(i)) << q.x() * p.x(), q.x() * p.y(), q.x(), q.y() * p.x(),
        q.y() * p.y(), q.y(), p.x(), p.y(), 1.0;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 9>> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> f = svd.matrixV().col(8);
  Mat3 en;
  en << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  const Mat3 e = project_essential(tb.transpose() * en * ta);
  return e / e.norm();
}

std::vector<Pose> decompose_essential(const Mat3& e) {
  Eigen::JacobiSVD<Mat3> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  if (u.determinant() < 0.0) u = -u;
  if (v.determinant() < 0.0) v = -v;
  Mat3 w;
  w << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  const Rotation r1 = Rotation::nearest(u * w * v.transpose());
  const Rotation r2 = Rotation::nearest(u * w.transpose() * v.transpose());
  const Vec3 t = u.col(2);
  return {{r1, t}, {r1, -t}, {r2, t}, {r2, -t}};
}

double sampson_error(const Mat3& f, const PixelPoint& qa, const PixelPoint& qb) {
  const Vec3 a = qa.homogeneous();
  const Vec3 b = qb.homogeneous();
  const Vec3 fa = f * a;
  const Vec3 ftb = f.transpose() * b;
  const double num = b.dot(fa);
  const double den = fa.x() * fa.x() + fa.y() * fa.y() + ftb.x() * ftb.x() + ftb.y() * ftb.y();
  if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
  return num * num / den;
}

}  // namespace acrkit
