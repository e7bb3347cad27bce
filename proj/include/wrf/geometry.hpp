#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

namespace wrf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegPerRad = 180.0 / kPi;

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double sigmoid_grad(double x) {
    const double s = sigmoid(x);
    return s * (1.0 - s);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Quaternion stored (w, x, y, z). Rotation matrix for a unit quaternion.
inline Mat3 quat_to_rotation(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

// dR/dq_k for a quaternion treated as four free parameters.
inline void quat_rotation_jacobian(const Vec4& q, Mat3 dr[4]) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    dr[0] << 0, -2 * z, 2 * y,
        2 * z, 0, -2 * x,
        -2 * y, 2 * x, 0;
    dr[1] << 0, 2 * y, 2 * z,
        2 * y, -4 * x, -2 * w,
        2 * z, 2 * w, -4 * x;
    dr[2] << -4 * y, 2 * x, 2 * w,
        2 * x, 0, 2 * z,
        -2 * w, 2 * z, -4 * y;
    dr[3] << -4 * z, -2 * w, 2 * x,
        2 * w, -4 * z, 2 * y,
        2 * x, 2 * y, 0;
}

// Backprop of loss gradient on R(q) to the four quaternion components.
inline Vec4 quat_rotation_backward(const Vec4& q, const Mat3& grad_r) {
    Mat3 dr[4];
    quat_rotation_jacobian(q, dr);
    Vec4 g;
    for (int k = 0; k < 4; ++k) {
        g[k] = (grad_r.array() * dr[k].array()).sum();
    }
    return g;
}

inline Vec4 quat_normalize(const Vec4& q) {
    const double n = q.norm();
    return q / n;
}

// grad wrt the unnormalized input, given grad on the normalized output.
inline Vec4 quat_normalize_backward(const Vec4& q_raw, const Vec4& grad_unit) {
    const double n = q_raw.norm();
    const Vec4 u = q_raw / n;
    return (grad_unit - u * u.dot(grad_unit)) / n;
}

}  // namespace wrf
