#pragma once

#include <array>
#include <cmath>

#include "gldepth/errors.hpp"

namespace gldepth {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    const double n = norm();
    if (n < 1e-300) throw DegenerateError("Vec3: cannot normalize near-zero vector");
    return {x / n, y / n, z / n};
  }
};

struct Mat3 {
  // Row-major.
  std::array<std::array<double, 3>, 3> m{};

  static Mat3 identity() {
    Mat3 r;
    r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
    return r;
  }

  static Mat3 diag(double a, double b, double c) {
    Mat3 r;
    r.m[0][0] = a;
    r.m[1][1] = b;
    r.m[2][2] = c;
    return r;
  }

  // Right-handed rotations about coordinate axes, angles in radians.
  static Mat3 rot_x(double a) {
    Mat3 r = identity();
    r.m[1][1] = std::cos(a);
    r.m[1][2] = -std::sin(a);
    r.m[2][1] = std::sin(a);
    r.m[2][2] = std::cos(a);
    return r;
  }
  static Mat3 rot_y(double a) {
    Mat3 r = identity();
    r.m[0][0] = std::cos(a);
    r.m[0][2] = std::sin(a);
    r.m[2][0] = -std::sin(a);
    r.m[2][2] = std::cos(a);
    return r;
  }
  static Mat3 rot_z(double a) {
    Mat3 r = identity();
    r.m[0][0] = std::cos(a);
    r.m[0][1] = -std::sin(a);
    r.m[1][0] = std::sin(a);
    r.m[1][1] = std::cos(a);
    return r;
  }

  Mat3 transpose() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double acc = 0;
        for (int k = 0; k < 3; ++k) acc += m[i][k] * o.m[k][j];
        r.m[i][j] = acc;
      }
    return r;
  }

  Vec3 operator*(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }

  double det() const {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }

  double trace() const { return m[0][0] + m[1][1] + m[2][2]; }
};

// Unit quaternion (w, x, y, z).
struct Quat {
  double w = 1, x = 0, y = 0, z = 0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quat normalized() const {
    const double n = norm();
    if (n < 1e-8) throw DegenerateError("Quat: near-zero norm");
    return {w / n, x / n, y / n, z / n};
  }

  Mat3 to_matrix() const {
    Mat3 r;
    const double ww = w * w, xx = x * x, yy = y * y, zz = z * z;
    r.m[0][0] = ww + xx - yy - zz;
    r.m[0][1] = 2 * (x * y - w * z);
    r.m[0][2] = 2 * (x * z + w * y);
    r.m[1][0] = 2 * (x * y + w * z);
    r.m[1][1] = ww - xx + yy - zz;
    r.m[1][2] = 2 * (y * z - w * x);
    r.m[2][0] = 2 * (x * z - w * y);
    r.m[2][1] = 2 * (y * z + w * x);
    r.m[2][2] = ww - xx - yy + zz;
    return r;
  }

  static Quat from_matrix(const Mat3& r) {
    Quat q;
    const double tr = r.trace();
    if (tr > 0) {
      double s = std::sqrt(tr + 1.0) * 2;
      q.w = 0.25 * s;
      q.x = (r.m[2][1] - r.m[1][2]) / s;
      q.y = (r.m[0][2] - r.m[2][0]) / s;
      q.z = (r.m[1][0] - r.m[0][1]) / s;
    } else if (r.m[0][0] > r.m[1][1] && r.m[0][0] > r.m[2][2]) {
      double s = std::sqrt(1.0 + r.m[0][0] - r.m[1][1] - r.m[2][2]) * 2;
      q.w = (r.m[2][1] - r.m[1][2]) / s;
      q.x = 0.25 * s;
      q.y = (r.m[0][1] + r.m[1][0]) / s;
      q.z = (r.m[0][2] + r.m[2][0]) / s;
    } else if (r.m[1][1] > r.m[2][2]) {
      double s = std::sqrt(1.0 + r.m[1][1] - r.m[0][0] - r.m[2][2]) * 2;
      q.w = (r.m[0][2] - r.m[2][0]) / s;
      q.x = (r.m[0][1] + r.m[1][0]) / s;
      q.y = 0.25 * s;
      q.z = (r.m[1][2] + r.m[2][1]) / s;
    } else {
      double s = std::sqrt(1.0 + r.m[2][2] - r.m[0][0] - r.m[1][1]) * 2;
      q.w = (r.m[1][0] - r.m[0][1]) / s;
      q.x = (r.m[0][2] + r.m[2][0]) / s;
      q.y = (r.m[1][2] + r.m[2][1]) / s;
      q.z = 0.25 * s;
    }
    return q.normalized();
  }
};

// Pinhole camera intrinsics; pixel coordinates are integer-centered, the
// principal point may be fractional.
struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const {
    if (fx <= 0 || fy <= 0) throw ConfigError("CameraIntrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw ConfigError("CameraIntrinsics: non-positive image extents");
    if (cx < 0 || cx >= width || cy < 0 || cy >= height)
      throw ConfigError("CameraIntrinsics: principal point outside the image");
  }

  // Camera-frame ray with unit z through pixel (u, v).
  Vec3 backproject_dir(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }

  // Projection of a camera-frame point with positive depth.
  void project(const Vec3& p, double& u, double& v) const {
    u = fx * p.x / p.z + cx;
    v = fy * p.y / p.z + cy;
  }
};

// Rigid motion mapping camera-1 coordinates to camera-2 coordinates:
// X2 = R * X1 + t.
struct PoseSE3 {
  Mat3 R = Mat3::identity();
  Vec3 t;

  void validate() const {
    const Mat3 rtr = R.transpose() * R;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double expect = i == j ? 1.0 : 0.0;
        if (std::abs(rtr.m[i][j] - expect) > 1e-9)
          throw ConfigError("PoseSE3: R is not orthonormal");
      }
    if (std::abs(R.det() - 1.0) > 1e-9) throw ConfigError("PoseSE3: det(R) != +1");
  }

  Vec3 apply(const Vec3& x) const { return R * x + t; }

  PoseSE3 inverse() const {
    PoseSE3 inv;
    inv.R = R.transpose();
    inv.t = (inv.R * t) * -1.0;
    return inv;
  }
};

}  // namespace gldepth
