#include "ramp/geometry.hpp"

#include <cmath>

#include "ramp/error.hpp"

namespace ramp {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return m;
}

Se3Pose Se3Pose::exp(const Vec6& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  const double theta2 = phi.squaredNorm();
  const double theta = std::sqrt(theta2);

  Se3Pose out;
  double half_sinc;  // sin(theta/2) / theta
  if (theta < 1e-8) {
    half_sinc = 0.5 - theta2 / 48.0;
  } else {
    half_sinc = std::sin(0.5 * theta) / theta;
  }
  out.q = Eigen::Quaterniond(std::cos(0.5 * theta), half_sinc * phi.x(),
                             half_sinc * phi.y(), half_sinc * phi.z());
  out.q.normalize();

  double a, b;  // V = I + a*Phi + b*Phi^2
  if (theta < 1e-6) {
    a = 0.5 - theta2 / 24.0;
    b = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    a = (1.0 - std::cos(theta)) / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  const Mat3 Phi = skew(phi);
  const Mat3 V = Mat3::Identity() + a * Phi + b * Phi * Phi;
  out.t = V * rho;
  return out;
}

Vec6 Se3Pose::log() const {
  Eigen::Quaterniond qn = q.normalized();
  if (qn.w() < 0) qn.coeffs() = -qn.coeffs();
  const Vec3 qv(qn.x(), qn.y(), qn.z());
  const double s = qv.norm();
  const double theta = 2.0 * std::atan2(s, qn.w());

  Vec3 phi;
  if (s < 1e-12) {
    phi = 2.0 * qv;
  } else {
    phi = (theta / s) * qv;
  }

  const double theta2 = theta * theta;
  double c;  // Vinv = I - Phi/2 + c*Phi^2
  if (theta < 1e-4) {
    c = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    c = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / theta2;
  }
  const Mat3 Phi = skew(phi);
  const Mat3 Vinv = Mat3::Identity() - 0.5 * Phi + c * Phi * Phi;

  Vec6 xi;
  xi.head<3>() = Vinv * t;
  xi.tail<3>() = phi;
  return xi;
}

Se3Pose Se3Pose::inverse() const {
  Se3Pose out;
  out.q = q.conjugate();
  out.t = -(out.q * t);
  return out;
}

Se3Pose Se3Pose::operator*(const Se3Pose& o) const {
  Se3Pose out;
  out.q = (q * o.q).normalized();
  out.t = q * o.t + t;
  return out;
}

Se3Pose Se3Pose::retract(const Vec6& xi) const { return *this * exp(xi); }

Mat4 Se3Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation();
  m.topRightCorner<3, 1>() = t;
  return m;
}

bool Se3Pose::bitwise_equal(const Se3Pose& o) const {
  return q.coeffs() == o.q.coeffs() && t == o.t;
}

Mat4 Intrinsics::matrix4() const {
  Mat4 m = Mat4::Identity();
  m(0, 0) = fx;
  m(1, 1) = fy;
  m(0, 2) = cx;
  m(1, 2) = cy;
  return m;
}

Mat4 Intrinsics::inverse4() const {
  Mat4 m = Mat4::Identity();
  m(0, 0) = 1.0 / fx;
  m(1, 1) = 1.0 / fy;
  m(0, 2) = -cx / fx;
  m(1, 2) = -cy / fy;
  return m;
}

Patch Patch::centered(int frame_index, int patch_index, double center_x,
                      double center_y, int p, double inv_depth) {
  if (p < 1 || p % 2 == 0) throw Error("patch size must be odd and positive");
  Patch patch;
  patch.frame_index = frame_index;
  patch.patch_index = patch_index;
  patch.p = p;
  patch.inv_depth = inv_depth;
  patch.coords.resize(3, p * p);
  const int r = (p - 1) / 2;
  int col = 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx, ++col) {
      patch.coords(0, col) = center_x + dx;
      patch.coords(1, col) = center_y + dy;
      patch.coords(2, col) = 1.0;
    }
  }
  return patch;
}

Vec2 Patch::center() const { return coords.col(center_column()).head<2>(); }

Vec2 ProjectedPatch::center() const {
  return pixels.col((pixels.cols() - 1) / 2);
}

namespace {

bool inside_with_margin(double u, double v, const Intrinsics& K) {
  return u >= -kProjectionMargin && u <= K.width - 1 + kProjectionMargin &&
         v >= -kProjectionMargin && v <= K.height - 1 + kProjectionMargin;
}

}  // namespace

ProjectedPatch project_patch(const Se3Pose& T_i, const Se3Pose& T_j,
                             const Intrinsics& K, const Patch& patch) {
  const int n = static_cast<int>(patch.coords.cols());
  ProjectedPatch out;
  out.pixels.resize(2, n);
  out.valid.assign(n, 0);

  if (T_i.bitwise_equal(T_j)) {
    out.pixels = patch.coords.topRows<2>();
    for (int k = 0; k < n; ++k) {
      out.valid[k] =
          inside_with_margin(patch.coords(0, k), patch.coords(1, k), K) ? 1 : 0;
    }
    out.center_valid = out.valid[patch.center_column()] != 0;
    return out;
  }

  const Mat4 G = K.matrix4() * (T_i.inverse() * T_j).matrix() * K.inverse4();
  for (int k = 0; k < n; ++k) {
    const Eigen::Vector4d h =
        G * Eigen::Vector4d(patch.coords(0, k), patch.coords(1, k), 1.0,
                            patch.inv_depth);
    const double z = h(2);
    if (z > kMinProjectiveDepth) {
      const double u = h(0) / z, v = h(1) / z;
      out.pixels(0, k) = u;
      out.pixels(1, k) = v;
      out.valid[k] = inside_with_margin(u, v, K) ? 1 : 0;
    } else {
      out.pixels(0, k) = 0;
      out.pixels(1, k) = 0;
      out.valid[k] = 0;
    }
  }
  out.center_valid = out.valid[patch.center_column()] != 0;
  return out;
}

CenterProjection project_center(const Se3Pose& T_i, const Se3Pose& T_j,
                                const Intrinsics& K, const Patch& patch) {
  CenterProjection out;
  const Vec2 c = patch.center();
  if (T_i.bitwise_equal(T_j)) {
    out.pixel = c;
    out.valid = inside_with_margin(c.x(), c.y(), K);
    return out;
  }
  const Mat4 G = K.matrix4() * (T_i.inverse() * T_j).matrix() * K.inverse4();
  const Eigen::Vector4d h = G * Eigen::Vector4d(c.x(), c.y(), 1.0, patch.inv_depth);
  const double z = h(2);
  if (z > kMinProjectiveDepth) {
    out.pixel = Vec2(h(0) / z, h(1) / z);
    out.valid = inside_with_margin(out.pixel.x(), out.pixel.y(), K);
  }
  return out;
}

std::optional<Vec2> residual(const Vec2& stored_center, const Vec2& delta,
                             const Se3Pose& T_i, const Se3Pose& T_j,
                             const Intrinsics& K, const Patch& patch) {
  const CenterProjection proj = project_center(T_i, T_j, K, patch);
  if (!proj.valid) return std::nullopt;
  return Vec2(stored_center + delta - proj.pixel);
}

PatchJacobians center_jacobians(const Se3Pose& T_i, const Se3Pose& T_j,
                                const Intrinsics& K, const Patch& patch) {
  PatchJacobians out;
  const double d = patch.inv_depth;
  if (!(d > 1e-12)) return out;

  const Vec2 c = patch.center();
  const Vec3 m((c.x() - K.cx) / K.fx, (c.y() - K.cy) / K.fy, 1.0);
  const Vec3 P_j = m / d;

  const Se3Pose T_ij = T_i.inverse() * T_j;
  const Mat3 R_ij = T_ij.rotation();
  const Vec3 P_i = R_ij * P_j + T_ij.t;
  const double Z = P_i.z();
  if (!(Z > kMinProjectiveDepth)) return out;

  Eigen::Matrix<double, 2, 3> J_proj;
  J_proj << K.fx / Z, 0, -K.fx * P_i.x() / (Z * Z),
            0, K.fy / Z, -K.fy * P_i.y() / (Z * Z);

  out.d_pose_j.leftCols<3>() = J_proj * R_ij;
  out.d_pose_j.rightCols<3>() = -J_proj * R_ij * skew(P_j);
  out.d_pose_i.leftCols<3>() = -J_proj;
  out.d_pose_i.rightCols<3>() = J_proj * skew(P_i);
  out.d_depth = J_proj * (R_ij * m) * (-1.0 / (d * d));
  out.valid = true;
  return out;
}

}  // namespace ramp
