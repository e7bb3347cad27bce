#pragma once

#include <complex>
#include <string>
#include <vector>

#include "wrf/geometry.hpp"
#include "wrf/scene.hpp"
#include "wrf/spectrum.hpp"

namespace wrf {

// 2D uniform planar antenna array, sqrt(K) x sqrt(K) elements on the local
// x-y grid with boresight along +z.
struct ArraySpec {
    int k = 16;                // total antennas, perfect square
    double spacing = 0.0625;   // element pitch, meters
    double wavelength = 0.125; // carrier wavelength, meters

    int side() const;
    void validate() const;
};

// One propagation path as seen by the receiver. `azimuth` in [0, 2pi),
// `elevation` in [0, pi/2] measured up from the array plane (boresight is
// elevation pi/2).
struct PropagationPath {
    double delta_a = 0.0;    // attenuation factor, >= 0
    double delta_phi = 0.0;  // phase shift, radians
    double azimuth = 0.0;
    double elevation = 0.0;
};

// Planar rectangular facet used by the single-bounce path model.
struct Reflector {
    Vec3 center = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    double half_width = 1.0;
    double half_height = 1.0;
    double coefficient = 0.7;  // reflection amplitude coefficient

    // Deterministic in-plane axes derived from the normal.
    void axes(Vec3* u, Vec3* v) const;
};

struct SyntheticSceneSpec {
    std::vector<Reflector> reflectors;
    Vec3 receiver_origin = Vec3::Zero();
    Mat3 receiver_orientation = Mat3::Identity();
    int max_paths = 8;            // L
    double tx_amplitude = 1.0;    // A
    double tx_phase = 0.0;        // phi
    ArraySpec array;
    Vec3 bounds_min = Vec3(-5, -5, 0.2);
    Vec3 bounds_max = Vec3(5, 5, 3);
    int cloud_points = 800;       // points sampled on reflector surfaces
    std::uint64_t seed = 1;

    void validate() const;
};

// Plane-wave path difference of element (m, n) relative to element (0, 0).
// `polar` is the angle from boresight (+z): 0 means broadside and every
// element receives in phase.
double theoretical_phase_delta(const ArraySpec& array, int m, int n,
                               double azimuth, double polar);

// y = A e^{j phi} sum_l dA_l e^{j dphi_l}
Complex received_superposition(double amplitude, double phi,
                               const std::vector<PropagationPath>& paths);

// Angular power distribution over the (azimuth, elevation) grid from the
// measured per-element phases (side x side, row-major in m).
SpectrumImage spatial_spectrum(const std::vector<double>& measured_phases,
                               const ArraySpec& array,
                               int width = SpectrumImage::kFullWidth,
                               int height = SpectrumImage::kFullHeight);

// Line-of-sight plus single specular bounce off each facet. Paths arriving
// from below the array plane are dropped; strongest max_paths kept.
std::vector<PropagationPath> trace_paths(const SyntheticSceneSpec& spec, const Vec3& p_tx);

struct OracleResult {
    SpectrumImage spectrum;
    int path_count = 0;  // 0 means no path reached the receiver
};

// Brute-force ground truth: enumerate paths, accumulate the per-element
// complex sums, extract phases, evaluate the spatial spectrum.
OracleResult synth_spectrum(const SyntheticSceneSpec& spec, const Vec3& p_tx,
                            int width = SpectrumImage::kFullWidth,
                            int height = SpectrumImage::kFullHeight);

// Points sampled uniformly on the reflector surfaces, seeded by spec.seed.
PointCloud sample_scene_cloud(const SyntheticSceneSpec& spec);

// Flat text scene description, "key value..." lines, '#' comments.
SyntheticSceneSpec load_scene_spec(const std::string& path);

}  // namespace wrf
