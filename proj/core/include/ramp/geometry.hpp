#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace ramp {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat26 = Eigen::Matrix<double, 2, 6>;

Mat3 skew(const Vec3& v);

// Camera-to-world rigid transform. Increments compose on the right:
// retract(xi) = T * exp(xi) with xi = [translation; rotation].
struct Se3Pose {
  Eigen::Quaterniond q{1.0, 0.0, 0.0, 0.0};
  Vec3 t{0.0, 0.0, 0.0};

  static Se3Pose identity() { return {}; }
  static Se3Pose exp(const Vec6& xi);
  Vec6 log() const;

  Se3Pose inverse() const;
  Se3Pose operator*(const Se3Pose& o) const;
  Se3Pose retract(const Vec6& xi) const;
  Vec3 apply(const Vec3& p) const { return q * p + t; }
  Mat3 rotation() const { return q.toRotationMatrix(); }
  Mat4 matrix() const;
  bool bitwise_equal(const Se3Pose& o) const;
};

struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  // Homogeneous 4x4 camera matrix acting on (x, y, z, w) rays; the fourth
  // row/column pass the depth coordinate through untouched.
  Mat4 matrix4() const;
  Mat4 inverse4() const;
};

// A square block of pixels in a source frame sharing one inverse depth.
// coords is 3 x p^2 (rows x, y, 1), column-major over the block row by row;
// the center pixel is column (p^2 - 1) / 2.
struct Patch {
  int frame_index = 0;
  int patch_index = 0;
  int p = 3;
  double inv_depth = 1.0;
  Eigen::Matrix<double, 3, Eigen::Dynamic> coords;

  static Patch centered(int frame_index, int patch_index, double center_x,
                        double center_y, int p, double inv_depth);
  Vec2 center() const;
  int center_column() const { return (p * p - 1) / 2; }
};

// Pixels of a patch reprojected into another frame; valid flags mark pixels
// in front of the camera and inside the image (with margin).
struct ProjectedPatch {
  Eigen::Matrix<double, 2, Eigen::Dynamic> pixels;
  std::vector<unsigned char> valid;
  bool center_valid = false;
  Vec2 center() const;
};

inline constexpr double kMinProjectiveDepth = 1e-8;
inline constexpr double kProjectionMargin = 1.0;  // pixels outside the image still valid

// Reprojects patch P (source frame j, pose T_j) into frame i (pose T_i)
// through P' ~ K * T_i^-1 * T_j * K^-1 * P in homogeneous pixel coordinates.
// Identical poses shortcut to an exact identity warp.
ProjectedPatch project_patch(const Se3Pose& T_i, const Se3Pose& T_j,
                             const Intrinsics& K, const Patch& patch);

// Center-pixel reprojection only.
struct CenterProjection {
  Vec2 pixel{0, 0};
  bool valid = false;
};
CenterProjection project_center(const Se3Pose& T_i, const Se3Pose& T_j,
                                const Intrinsics& K, const Patch& patch);

// r = (stored_center + delta) - projected_center; empty when the projection
// is invalid.
std::optional<Vec2> residual(const Vec2& stored_center, const Vec2& delta,
                             const Se3Pose& T_i, const Se3Pose& T_j,
                             const Intrinsics& K, const Patch& patch);

// Analytic derivatives of the projected center with respect to right-
// multiplicative increments of T_i and T_j and to the patch inverse depth.
struct PatchJacobians {
  Mat26 d_pose_i = Mat26::Zero();
  Mat26 d_pose_j = Mat26::Zero();
  Vec2 d_depth = Vec2::Zero();
  bool valid = false;
};
PatchJacobians center_jacobians(const Se3Pose& T_i, const Se3Pose& T_j,
                                const Intrinsics& K, const Patch& patch);

}  // namespace ramp
