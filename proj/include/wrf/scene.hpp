#pragma once

#include <complex>
#include <string>
#include <vector>

#include "wrf/geometry.hpp"

namespace wrf {

// One virtual transmitter. Scale lives in log domain, rotation as a unit
// quaternion, opacity as a logit; all three keep their constraints intact
// under unconstrained gradient steps.
struct GaussianPrimitive {
    Vec3 mu = Vec3::Zero();                  // center, meters
    Vec3 log_scale = Vec3::Zero();           // exp() gives diag of S
    Vec4 rotation = Vec4(1, 0, 0, 0);        // unit quaternion (w,x,y,z)
    double opacity_logit = 0.0;              // sigmoid -> o in (0,1)
    Complex signal = Complex(0.0, 0.0);      // complex spectrum amplitude
    double mask_score = 0.0;                 // sigmoid -> importance
};

struct PointCloud {
    std::vector<Vec3> points;

    std::size_t size() const { return points.size(); }
};

struct Scene {
    std::vector<GaussianPrimitive> primitives;
    Vec3 receiver_origin = Vec3::Zero();
    Mat3 receiver_orientation = Mat3::Identity();  // array frame -> world

    std::size_t count() const { return primitives.size(); }
};

// Sigma = R S S^T R^T with S = diag(exp(log_scale)). Always SPD.
Mat3 covariance_from(const Vec3& log_scale, const Vec4& rotation);

// Backprop a symmetric gradient on Sigma to log_scale and the (possibly
// unnormalized) quaternion parameters.
void covariance_from_backward(const Vec3& log_scale, const Vec4& rotation,
                              const Mat3& grad_sigma, Vec3* grad_log_scale,
                              Vec4* grad_rotation);

// Unnormalized density exp(-1/2 (x-mu)^T Sigma^-1 (x-mu)), in (0, 1].
double gaussian_eval(const GaussianPrimitive& p, const Vec3& x);

// Nearest-neighbor distance for every point, with degenerate duplicates
// clamped to floor_dist. Grid-accelerated; matches brute force exactly.
std::vector<double> nearest_neighbor_distances(const std::vector<Vec3>& pts,
                                               double floor_dist = 1e-4);

// One primitive per point: mu_i = x_i, isotropic scale from the
// nearest-neighbor distance; opacity/signal/mask at their defaults.
Scene init_from_point_cloud(const PointCloud& pc);

// Centers uniform in an axis-aligned box, scales from the same
// nearest-neighbor rule. Reproducible for a fixed seed.
Scene init_random(std::size_t n, const Vec3& box_min, const Vec3& box_max,
                  std::uint64_t seed);

// Text point cloud, one "x y z" per line, '#' comments ignored.
PointCloud load_point_cloud(const std::string& path);
void save_point_cloud(const PointCloud& pc, const std::string& path);

namespace defaults {
inline constexpr double kInitOpacity = 0.1;
inline constexpr double kInitSignalMagnitude = 0.01;
inline constexpr double kInitMaskScore = 0.0;
inline constexpr double kDuplicateDistanceFloor = 1e-4;
}  // namespace defaults

}  // namespace wrf
