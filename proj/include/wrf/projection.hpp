#pragma once

#include "wrf/geometry.hpp"

namespace wrf {

// Equirectangular (azimuth, elevation) screen mapping of a world point, in
// degrees. Azimuth wraps to [0, 360); elevation is asin(z/r) clamped to
// [0, 90]. The Jacobian is expressed in world coordinates (degrees / meter).
struct Projection {
    Vec2 center2d = Vec2::Zero();  // (alpha_deg, beta_deg)
    double depth = 0.0;            // range to the receiver, meters
    Mat23 jacobian = Mat23::Zero();
    bool valid = false;            // false: degenerate (r ~ 0), skip
    bool beta_clamped = false;     // elevation clamp active (zero gradient)
};

Projection project_mercator(const Vec3& mu, const Vec3& receiver_origin,
                            const Mat3& receiver_orientation);

// Second derivatives d(jacobian)/d(mu) needed to backpropagate the projected
// covariance to the center. hess[k](r, c) = d J(r, c) / d mu_world[k].
void projection_hessian(const Vec3& mu, const Vec3& receiver_origin,
                        const Mat3& receiver_orientation, Mat23 hess[3]);

// cov2d = J Sigma J^T + eps_reg * I, SPD by construction.
Mat2 project_covariance(const Mat3& cov3d, const Mat23& jacobian, double eps_reg);

inline constexpr double kCovRegularizerDeg2 = 0.01;

}  // namespace wrf
