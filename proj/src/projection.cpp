#include "wrf/projection.hpp"

#include <algorithm>
#include <cmath>

namespace wrf {

namespace {
constexpr double kMinRange = 1e-6;   // below this the primitive is skipped
constexpr double kMinPlanar = 1e-9;  // pole guard for the azimuth derivative
}  // namespace

Projection project_mercator(const Vec3& mu, const Vec3& receiver_origin,
                            const Mat3& receiver_orientation) {
    Projection out;
    const Vec3 v = receiver_orientation.transpose() * (mu - receiver_origin);
    const double x = v.x(), y = v.y(), z = v.z();
    const double rho2 = x * x + y * y;
    const double rho = std::sqrt(rho2);
    const double r2 = rho2 + z * z;
    const double r = std::sqrt(r2);
    if (r < kMinRange) {
        return out;  // degenerate: on top of the receiver
    }
    out.valid = true;
    out.depth = r;

    double alpha = std::atan2(y, x);
    if (alpha < 0.0) alpha += 2.0 * kPi;
    double beta = std::asin(std::clamp(z / r, -1.0, 1.0));
    out.center2d[0] = alpha * kDegPerRad;
    if (beta < 0.0) {
        beta = 0.0;
        out.beta_clamped = true;
    }
    out.center2d[1] = beta * kDegPerRad;

    Mat23 j = Mat23::Zero();  // in the receiver frame
    if (rho > kMinPlanar) {
        j(0, 0) = -kDegPerRad * y / rho2;
        j(0, 1) = kDegPerRad * x / rho2;
        if (!out.beta_clamped) {
            j(1, 0) = -kDegPerRad * z * x / (rho * r2);
            j(1, 1) = -kDegPerRad * z * y / (rho * r2);
            j(1, 2) = kDegPerRad * rho / r2;
        }
    }
    // Chain mu_frame = R^T (mu - origin).
    out.jacobian = j * receiver_orientation.transpose();
    return out;
}

void projection_hessian(const Vec3& mu, const Vec3& receiver_origin,
                        const Mat3& receiver_orientation, Mat23 hess[3]) {
    const Vec3 v = receiver_orientation.transpose() * (mu - receiver_origin);
    const double x = v.x(), y = v.y(), z = v.z();
    const double rho2 = x * x + y * y;
    const double rho = std::sqrt(rho2);
    const double r2 = rho2 + z * z;
    const double r4 = r2 * r2;
    const double c = kDegPerRad;

    Mat23 hf[3];  // d J_frame / d v_k
    for (int k = 0; k < 3; ++k) hf[k].setZero();
    if (rho > kMinPlanar && r2 > kMinRange * kMinRange &&
        z / std::sqrt(r2) > -1.0 + 1e-12) {
        const double rho4 = rho2 * rho2;
        // Azimuth row: a_x = -c y / rho^2, a_y = c x / rho^2.
        hf[0](0, 0) = c * 2.0 * x * y / rho4;
        hf[1](0, 0) = c * (-1.0 / rho2 + 2.0 * y * y / rho4);
        hf[0](0, 1) = c * (1.0 / rho2 - 2.0 * x * x / rho4);
        hf[1](0, 1) = -c * 2.0 * x * y / rho4;

        const bool clamped = z < 0.0;
        if (!clamped) {
            // Elevation row: b_x = -c z x / (rho r^2), b_y symmetric,
            // b_z = c rho / r^2.
            const double q = r2 / rho + 2.0 * rho;  // d(rho r^2)/dx = x q
            const double den = rho2 * r4;
            hf[0](1, 0) = -c * z * (rho * r2 - x * x * q) / den;
            hf[1](1, 0) = c * z * x * y * q / den;
            hf[2](1, 0) = -c * x * (r2 - 2.0 * z * z) / (rho * r4);
            hf[0](1, 1) = c * z * x * y * q / den;
            hf[1](1, 1) = -c * z * (rho * r2 - y * y * q) / den;
            hf[2](1, 1) = -c * y * (r2 - 2.0 * z * z) / (rho * r4);
            hf[0](1, 2) = c * x * (z * z - rho2) / (rho * r4);
            hf[1](1, 2) = c * y * (z * z - rho2) / (rho * r4);
            hf[2](1, 2) = -c * 2.0 * rho * z / r4;
        }
    }

    // J_world = J_frame R^T and v = R^T (mu - o):
    // d J_world / d mu_k = sum_m (d J_frame / d v_m) R^T[m, k] ... R^T applied
    // on both the column index and the derivative direction.
    const Mat3 rt = receiver_orientation.transpose();
    for (int k = 0; k < 3; ++k) {
        Mat23 acc = Mat23::Zero();
        for (int m = 0; m < 3; ++m) {
            acc += hf[m] * rt(m, k);
        }
        hess[k] = acc * rt;
    }
}

Mat2 project_covariance(const Mat3& cov3d, const Mat23& jacobian, double eps_reg) {
    Mat2 c = jacobian * cov3d * jacobian.transpose();
    c(0, 0) += eps_reg;
    c(1, 1) += eps_reg;
    return c;
}

}  // namespace wrf
