#include "gldepth/geometry.hpp"

#include <cmath>

namespace gldepth {

ProjectionMatrix ProjectionMatrix::from(const CameraIntrinsics& k, const PoseSE3& pose) {
  // K * [R | t]
  const double kmat[3][3] = {{k.fx, 0, k.cx}, {0, k.fy, k.cy}, {0, 0, 1}};
  ProjectionMatrix p;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0;
      for (int l = 0; l < 3; ++l) acc += kmat[i][l] * pose.R.m[l][j];
      p.p[i][j] = acc;
    }
    p.p[i][3] = kmat[i][0] * pose.t.x + kmat[i][1] * pose.t.y + kmat[i][2] * pose.t.z;
  }
  return p;
}

ProjectionMatrix ProjectionMatrix::from_identity_pose(const CameraIntrinsics& k) {
  return from(k, PoseSE3{});
}

Projected project(const ProjectionMatrix& p, const Vec3& m) {
  const double h[4] = {m.x, m.y, m.z, 1.0};
  double r[3];
  for (int i = 0; i < 3; ++i)
    r[i] = p.p[i][0] * h[0] + p.p[i][1] * h[1] + p.p[i][2] * h[2] + p.p[i][3];
  if (std::abs(r[2]) < 1e-12) throw DegenerateError("project: point at infinity");
  return {r[0] / r[2], r[1] / r[2], r[2]};
}

Mat3 cross_matrix(const Vec3& u) {
  Mat3 c;
  c.m[0][0] = 0;
  c.m[0][1] = -u.z;
  c.m[0][2] = u.y;
  c.m[1][0] = u.z;
  c.m[1][1] = 0;
  c.m[1][2] = -u.x;
  c.m[2][0] = -u.y;
  c.m[2][1] = u.x;
  c.m[2][2] = 0;
  return c;
}

TriangulationMatrix triangulation_matrix(const ProjectionMatrix& p1, const ProjectionMatrix& p2,
                                         const Correspondence& c) {
  // Normalize homogeneous pixels so the last component is exactly 1.
  auto normalize = [](Vec3 m) {
    if (std::abs(m.z) < 1e-300) throw DegenerateError("triangulation_matrix: m with zero scale");
    return Vec3{m.x / m.z, m.y / m.z, 1.0};
  };
  const Vec3 m1 = normalize(c.m1);
  const Vec3 m2 = normalize(c.m2);
  const Mat3 c1 = cross_matrix(m1);
  const Mat3 c2 = cross_matrix(m2);
  TriangulationMatrix a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) {
      double acc1 = 0, acc2 = 0;
      for (int l = 0; l < 3; ++l) {
        acc1 += c1.m[i][l] * p1.p[l][j];
        acc2 += c2.m[i][l] * p2.p[l][j];
      }
      a.a[i][j] = acc1;
      a.a[i + 3][j] = acc2;
    }
  return a;
}

Eig4 jacobi_eig4(const std::array<std::array<double, 4>, 4>& sym) {
  std::array<std::array<double, 4>, 4> a = sym;
  std::array<std::array<double, 4>, 4> v{};
  for (int i = 0; i < 4; ++i) v[i][i] = 1.0;

  double scale = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) scale = std::max(scale, std::abs(a[i][j]));
  if (scale == 0.0) scale = 1.0;

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) off += a[i][j] * a[i][j];
    if (std::sqrt(off) < 1e-15 * scale) break;

    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cth = 1.0 / std::sqrt(t * t + 1.0);
        const double sth = t * cth;
        for (int i = 0; i < 4; ++i) {
          const double aip = a[i][p], aiq = a[i][q];
          a[i][p] = cth * aip - sth * aiq;
          a[i][q] = sth * aip + cth * aiq;
        }
        for (int j = 0; j < 4; ++j) {
          const double apj = a[p][j], aqj = a[q][j];
          a[p][j] = cth * apj - sth * aqj;
          a[q][j] = sth * apj + cth * aqj;
        }
        for (int i = 0; i < 4; ++i) {
          const double vip = v[i][p], viq = v[i][q];
          v[i][p] = cth * vip - sth * viq;
          v[i][q] = sth * vip + cth * viq;
        }
      }
  }

  Eig4 out;
  std::array<int, 4> order = {0, 1, 2, 3};
  std::array<double, 4> diag = {a[0][0], a[1][1], a[2][2], a[3][3]};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (diag[order[j]] < diag[order[i]]) std::swap(order[i], order[j]);
  for (int i = 0; i < 4; ++i) {
    out.values[i] = diag[order[i]];
    for (int r = 0; r < 4; ++r) out.vectors[i][r] = v[r][order[i]];
  }
  return out;
}

TriangulatedPoint triangulate_point(const TriangulationMatrix& a_in) {
  // Row normalization makes the result invariant to rescaling of m1, m2 and
  // of individual rows; zero rows (from the cross-matrix structure) drop out.
  std::array<std::array<double, 4>, 6> a = a_in.a;
  for (auto& row : a) {
    double n = 0;
    for (double x : row) n += x * x;
    n = std::sqrt(n);
    if (n > 1e-300)
      for (double& x : row) x /= n;
  }

  std::array<std::array<double, 4>, 4> ata{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double acc = 0;
      for (int r = 0; r < 6; ++r) acc += a[r][i] * a[r][j];
      ata[i][j] = acc;
    }

  const Eig4 eig = jacobi_eig4(ata);

  TriangulatedPoint out;
  out.homogeneous = eig.vectors[0];

  const double lmax = std::max(eig.values[3], 1e-300);
  if (eig.values[1] - eig.values[0] <= 1e-10 * lmax) {
    out.status = TriStatus::degenerate;
    return out;
  }
  const double w = out.homogeneous[3];
  if (std::abs(w) <= 1e-12) {
    out.status = TriStatus::at_infinity;
    return out;
  }
  out.point = {out.homogeneous[0] / w, out.homogeneous[1] / w, out.homogeneous[2] / w};
  out.status = out.point.z > 0 ? TriStatus::ok : TriStatus::behind_camera;
  return out;
}

Vec3 linear_triangulate(const TriangulationMatrix& a) {
  const TriangulatedPoint r = triangulate_point(a);
  switch (r.status) {
    case TriStatus::degenerate:
      throw DegenerateError("linear_triangulate: smallest eigenvalue is not simple");
    case TriStatus::at_infinity:
      throw DegenerateError("linear_triangulate: point at infinity");
    default:
      return r.point;
  }
}

DepthFromFlow triangulate_depth_map(const Tensor& flow, const CameraIntrinsics& k1,
                                    const CameraIntrinsics& k2, const PoseSE3& pose) {
  if (flow.ndim() != 3 || flow.dim(0) != 2)
    throw ConfigError("triangulate_depth_map: flow must be {2,H,W}");
  const int h = flow.dim(1), w = flow.dim(2);

  const ProjectionMatrix p1 = ProjectionMatrix::from_identity_pose(k1);
  const ProjectionMatrix p2 = ProjectionMatrix::from(k2, pose);

  DepthFromFlow out;
  out.depth = Tensor::zeros({h, w});
  out.status.assign(static_cast<size_t>(h) * w, TriStatus::ok);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Correspondence c = Correspondence::from_pixels(
          x, y, x + flow(0, y, x), y + flow(1, y, x));
      const TriangulatedPoint r = triangulate_point(triangulation_matrix(p1, p2, c));
      out.status[static_cast<size_t>(y) * w + x] = r.status;
      if (r.status == TriStatus::ok) out.depth(y, x) = r.point.z;
    }
  return out;
}

double rotation_angle_error_deg(const Mat3& r_est, const Mat3& r_gt) {
  const Mat3 rel = r_est.transpose() * r_gt;
  double c = (rel.trace() - 1.0) / 2.0;
  c = std::max(-1.0, std::min(1.0, c));
  return std::acos(c) * 180.0 / M_PI;
}

double translation_angle_error_deg(const Vec3& t_est, const Vec3& t_gt) {
  const double ne = t_est.norm(), ng = t_gt.norm();
  if (ne < 1e-12 || ng < 1e-12)
    throw DegenerateError("translation_angle_error: zero-length translation");
  double c = t_est.dot(t_gt) / (ne * ng);
  c = std::max(-1.0, std::min(1.0, c));
  return std::acos(c) * 180.0 / M_PI;
}

}  // namespace gldepth
