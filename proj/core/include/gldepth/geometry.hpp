#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gldepth/camera.hpp"
#include "gldepth/tensor.hpp"

namespace gldepth {

// 3x4 projection matrix P = K [R | t].
struct ProjectionMatrix {
  std::array<std::array<double, 4>, 3> p{};

  static ProjectionMatrix from(const CameraIntrinsics& k, const PoseSE3& pose);
  static ProjectionMatrix from_identity_pose(const CameraIntrinsics& k);
};

struct Projected {
  double u = 0, v = 0;
  double lambda = 0;  // projective scale, returned for diagnostics
};

// Dehomogenized pixel of a 3D point. Throws DegenerateError when the
// projective scale is below 1e-12 (point at infinity).
Projected project(const ProjectionMatrix& p, const Vec3& m);

// Skew-symmetric matrix with cross_matrix(u) * v == u x v.
Mat3 cross_matrix(const Vec3& u);

// Homogeneous pixel correspondence; last components are renormalized to 1.
struct Correspondence {
  Vec3 m1{0, 0, 1};
  Vec3 m2{0, 0, 1};

  static Correspondence from_pixels(double u1, double v1, double u2, double v2) {
    return {{u1, v1, 1.0}, {u2, v2, 1.0}};
  }
};

// 6x4 triangulation system stacking cross(m1)*P1 over cross(m2)*P2; the
// homogeneous point is its (approximate) nullspace.
struct TriangulationMatrix {
  std::array<std::array<double, 4>, 6> a{};
};

TriangulationMatrix triangulation_matrix(const ProjectionMatrix& p1, const ProjectionMatrix& p2,
                                         const Correspondence& c);

// Eigen-decomposition of a symmetric 4x4 matrix by cyclic Jacobi rotations.
// Eigenvalues ascending; vectors[i] is the unit eigenvector of values[i].
struct Eig4 {
  std::array<double, 4> values{};
  std::array<std::array<double, 4>, 4> vectors{};
};

Eig4 jacobi_eig4(const std::array<std::array<double, 4>, 4>& sym);

enum class TriStatus : uint8_t { ok = 0, degenerate = 1, at_infinity = 2, behind_camera = 3 };

struct TriangulatedPoint {
  TriStatus status = TriStatus::ok;
  Vec3 point;                          // valid when status == ok or behind_camera
  std::array<double, 4> homogeneous{}; // unit-norm minimizer of |A M| / |M|
};

// Rayleigh-quotient minimizer: unit eigenvector of A^T A with smallest
// eigenvalue. Rows of A are normalized first, so the result is invariant to
// row and correspondence rescaling. Never throws; see linear_triangulate.
TriangulatedPoint triangulate_point(const TriangulationMatrix& a);

// Throwing wrapper: DegenerateError when the smallest eigenvalue is not
// simple (within 1e-10 of the next one, relative to the largest);
// DegenerateError("point at infinity") when |M4| <= 1e-12.
Vec3 linear_triangulate(const TriangulationMatrix& a);

struct DepthFromFlow {
  Tensor depth;                   // {H,W}, camera-1 z; 0 where invalid
  std::vector<TriStatus> status;  // H*W entries, row-major
};

// Per-pixel independent triangulation of the correspondence (p, p + flow).
// Per-pixel failures are recorded in the status mask, never thrown.
DepthFromFlow triangulate_depth_map(const Tensor& flow, const CameraIntrinsics& k1,
                                    const CameraIntrinsics& k2, const PoseSE3& pose);

// Angular pose errors in degrees.
double rotation_angle_error_deg(const Mat3& r_est, const Mat3& r_gt);
double translation_angle_error_deg(const Vec3& t_est, const Vec3& t_gt);

}  // namespace gldepth
