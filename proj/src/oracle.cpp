#include "wrf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wrf/rng.hpp"
#include "wrf/scene.hpp"

namespace wrf {

int ArraySpec::side() const {
    const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(k))));
    return s;
}

void ArraySpec::validate() const {
    const int s = side();
    if (k < 1 || s * s != k) {
        throw std::invalid_argument("ArraySpec: K must be a perfect square");
    }
    if (spacing <= 0.0 || wavelength <= 0.0) {
        throw std::invalid_argument("ArraySpec: spacing and wavelength must be positive");
    }
}

void Reflector::axes(Vec3* u, Vec3* v) const {
    const Vec3 n = normal.normalized();
    Vec3 ref = std::abs(n.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    *u = n.cross(ref).normalized();
    *v = n.cross(*u);
}

void SyntheticSceneSpec::validate() const {
    array.validate();
    if (max_paths < 1) {
        throw std::invalid_argument("SyntheticSceneSpec: max_paths must be >= 1");
    }
    if (((bounds_max - bounds_min).array() <= 0.0).any()) {
        throw std::invalid_argument("SyntheticSceneSpec: bounds must have positive volume");
    }
    for (const auto& r : reflectors) {
        if (r.half_width <= 0.0 || r.half_height <= 0.0 || r.normal.norm() < 1e-12) {
            throw std::invalid_argument("SyntheticSceneSpec: degenerate reflector");
        }
    }
}

double theoretical_phase_delta(const ArraySpec& array, int m, int n,
                               double azimuth, double polar) {
    const double sp = std::sin(polar);
    return 2.0 * kPi / array.wavelength * array.spacing *
           (m * sp * std::cos(azimuth) + n * sp * std::sin(azimuth));
}

Complex received_superposition(double amplitude, double phi,
                               const std::vector<PropagationPath>& paths) {
    if (paths.empty()) {
        throw std::invalid_argument("received_superposition: path list is empty");
    }
    Complex sum(0.0, 0.0);
    for (const auto& p : paths) {
        sum += p.delta_a * std::exp(Complex(0.0, p.delta_phi));
    }
    return amplitude * std::exp(Complex(0.0, phi)) * sum;
}

SpectrumImage spatial_spectrum(const std::vector<double>& measured_phases,
                               const ArraySpec& array, int width, int height) {
    array.validate();
    const int side = array.side();
    if (static_cast<int>(measured_phases.size()) != side * side) {
        throw std::invalid_argument("spatial_spectrum: phase grid does not match sqrt(K)");
    }

    // Phase differences relative to element (0,0); only differences enter.
    std::vector<double> dhat(measured_phases.size());
    for (std::size_t i = 0; i < measured_phases.size(); ++i) {
        dhat[i] = measured_phases[i] - measured_phases[0];
    }

    SpectrumImage img(width, height);
    const double c = 2.0 * kPi / array.wavelength * array.spacing;
    for (int az = 0; az < width; ++az) {
        const double alpha = img.azimuth_deg(az) / kDegPerRad;
        const double ca = std::cos(alpha), sa = std::sin(alpha);
        for (int el = 0; el < height; ++el) {
            // Grid rows are elevation above the array plane; the plane-wave
            // path difference uses the polar angle from boresight.
            const double polar = kPi / 2.0 - img.elevation_deg(el) / kDegPerRad;
            const double sp = std::sin(polar);
            double re = 0.0, im = 0.0;
            for (int m = 0; m < side; ++m) {
                for (int n = 0; n < side; ++n) {
                    const double dtheta = c * (m * sp * ca + n * sp * sa);
                    const double phase = dhat[static_cast<std::size_t>(m) * side + n] - dtheta;
                    re += std::cos(phase);
                    im += std::sin(phase);
                }
            }
            img.at(az, el) = (re * re + im * im) / array.k;
        }
    }
    return img;
}

namespace {

// Arrival direction (azimuth, elevation) of a ray reaching the receiver from
// world point `from`, expressed in the array frame. Returns false when the
// point is below the array plane or degenerate.
bool arrival_direction(const SyntheticSceneSpec& spec, const Vec3& from,
                       double* azimuth, double* elevation) {
    const Vec3 v = spec.receiver_orientation.transpose() * (from - spec.receiver_origin);
    const double r = v.norm();
    if (r < 1e-9 || v.z() < 0.0) return false;
    double az = std::atan2(v.y(), v.x());
    if (az < 0.0) az += 2.0 * kPi;
    *azimuth = az;
    *elevation = std::asin(std::clamp(v.z() / r, -1.0, 1.0));
    return true;
}

}  // namespace

std::vector<PropagationPath> trace_paths(const SyntheticSceneSpec& spec, const Vec3& p_tx) {
    std::vector<PropagationPath> paths;
    const double two_pi_over_lambda = 2.0 * kPi / spec.array.wavelength;

    // Line of sight.
    {
        double az, el;
        const double d = (p_tx - spec.receiver_origin).norm();
        if (d > 1e-9 && arrival_direction(spec, p_tx, &az, &el)) {
            PropagationPath p;
            p.delta_a = 1.0 / d;
            p.delta_phi = std::fmod(-two_pi_over_lambda * d, 2.0 * kPi);
            p.azimuth = az;
            p.elevation = el;
            paths.push_back(p);
        }
    }

    // Single specular bounce per facet via the mirror-image method.
    for (const auto& refl : spec.reflectors) {
        const Vec3 n = refl.normal.normalized();
        const double h_tx = (p_tx - refl.center).dot(n);
        const double h_rx = (spec.receiver_origin - refl.center).dot(n);
        // Specular reflection requires both endpoints on the same side.
        if (h_tx * h_rx <= 1e-12) continue;
        const Vec3 image = p_tx - 2.0 * h_tx * n;  // mirror of the transmitter
        const Vec3 seg = spec.receiver_origin - image;
        const double denom = seg.dot(n);
        if (std::abs(denom) < 1e-12) continue;
        const double t = (refl.center - image).dot(n) / denom;
        if (t <= 0.0 || t >= 1.0) continue;
        const Vec3 hit = image + t * seg;
        Vec3 u, v;
        refl.axes(&u, &v);
        const Vec3 local = hit - refl.center;
        if (std::abs(local.dot(u)) > refl.half_width ||
            std::abs(local.dot(v)) > refl.half_height) {
            continue;
        }
        const double length = (p_tx - hit).norm() + (hit - spec.receiver_origin).norm();
        if (length < 1e-9) continue;
        double az, el;
        if (!arrival_direction(spec, hit, &az, &el)) continue;
        PropagationPath p;
        p.delta_a = refl.coefficient / length;
        p.delta_phi = std::fmod(-two_pi_over_lambda * length, 2.0 * kPi);
        p.azimuth = az;
        p.elevation = el;
        paths.push_back(p);
    }

    if (static_cast<int>(paths.size()) > spec.max_paths) {
        std::stable_sort(paths.begin(), paths.end(),
                         [](const PropagationPath& a, const PropagationPath& b) {
                             return a.delta_a > b.delta_a;
                         });
        paths.resize(static_cast<std::size_t>(spec.max_paths));
    }
    return paths;
}

OracleResult synth_spectrum(const SyntheticSceneSpec& spec, const Vec3& p_tx,
                            int width, int height) {
    spec.validate();
    const std::vector<PropagationPath> paths = trace_paths(spec, p_tx);
    OracleResult res;
    res.spectrum = SpectrumImage(width, height);
    res.path_count = static_cast<int>(paths.size());
    if (paths.empty()) {
        return res;  // all-zero spectrum, flagged by path_count == 0
    }

    const int side = spec.array.side();
    std::vector<double> phases(static_cast<std::size_t>(side) * side, 0.0);
    for (int m = 0; m < side; ++m) {
        for (int n = 0; n < side; ++n) {
            Complex y(0.0, 0.0);
            for (const auto& p : paths) {
                // Far-field per path: common direction across the array.
                const double dtheta = theoretical_phase_delta(
                    spec.array, m, n, p.azimuth, kPi / 2.0 - p.elevation);
                y += p.delta_a * std::exp(Complex(0.0, p.delta_phi + dtheta));
            }
            y *= spec.tx_amplitude * std::exp(Complex(0.0, spec.tx_phase));
            phases[static_cast<std::size_t>(m) * side + n] = std::arg(y);
        }
    }
    res.spectrum = spatial_spectrum(phases, spec.array, width, height);
    return res;
}

PointCloud sample_scene_cloud(const SyntheticSceneSpec& spec) {
    PointCloud pc;
    if (spec.reflectors.empty() || spec.cloud_points <= 0) return pc;
    double total_area = 0.0;
    for (const auto& r : spec.reflectors) {
        total_area += 4.0 * r.half_width * r.half_height;
    }
    Rng rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
    pc.points.reserve(static_cast<std::size_t>(spec.cloud_points));
    // Allocate counts proportional to area, remainder to the largest facet.
    std::vector<int> counts(spec.reflectors.size(), 0);
    int assigned = 0;
    std::size_t largest = 0;
    for (std::size_t i = 0; i < spec.reflectors.size(); ++i) {
        const auto& r = spec.reflectors[i];
        const double area = 4.0 * r.half_width * r.half_height;
        counts[i] = static_cast<int>(spec.cloud_points * area / total_area);
        assigned += counts[i];
        if (area > 4.0 * spec.reflectors[largest].half_width * spec.reflectors[largest].half_height) {
            largest = i;
        }
    }
    counts[largest] += spec.cloud_points - assigned;
    for (std::size_t i = 0; i < spec.reflectors.size(); ++i) {
        const auto& r = spec.reflectors[i];
        Vec3 u, v;
        r.axes(&u, &v);
        for (int j = 0; j < counts[i]; ++j) {
            const double a = rng.uniform(-r.half_width, r.half_width);
            const double b = rng.uniform(-r.half_height, r.half_height);
            pc.points.push_back(r.center + a * u + b * v);
        }
    }
    return pc;
}

SyntheticSceneSpec load_scene_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open scene spec: " + path);
    }
    SyntheticSceneSpec spec;
    spec.reflectors.clear();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        auto fail = [&]() {
            throw std::invalid_argument("bad scene spec line " + std::to_string(lineno) +
                                        " in " + path + ": " + line);
        };
        if (key == "wavelength") {
            if (!(ss >> spec.array.wavelength)) fail();
        } else if (key == "array_k") {
            if (!(ss >> spec.array.k)) fail();
        } else if (key == "array_spacing") {
            if (!(ss >> spec.array.spacing)) fail();
        } else if (key == "tx_amplitude") {
            if (!(ss >> spec.tx_amplitude)) fail();
        } else if (key == "tx_phase") {
            if (!(ss >> spec.tx_phase)) fail();
        } else if (key == "max_paths") {
            if (!(ss >> spec.max_paths)) fail();
        } else if (key == "receiver") {
            if (!(ss >> spec.receiver_origin.x() >> spec.receiver_origin.y() >>
                  spec.receiver_origin.z())) {
                fail();
            }
        } else if (key == "receiver_rot") {
            Mat3 r;
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    if (!(ss >> r(i, j))) fail();
                }
            }
            spec.receiver_orientation = r;
        } else if (key == "bounds") {
            if (!(ss >> spec.bounds_min.x() >> spec.bounds_min.y() >> spec.bounds_min.z() >>
                  spec.bounds_max.x() >> spec.bounds_max.y() >> spec.bounds_max.z())) {
                fail();
            }
        } else if (key == "cloud_points") {
            if (!(ss >> spec.cloud_points)) fail();
        } else if (key == "seed") {
            if (!(ss >> spec.seed)) fail();
        } else if (key == "reflector") {
            Reflector r;
            if (!(ss >> r.center.x() >> r.center.y() >> r.center.z() >> r.normal.x() >>
                  r.normal.y() >> r.normal.z() >> r.half_width >> r.half_height >>
                  r.coefficient)) {
                fail();
            }
            spec.reflectors.push_back(r);
        } else {
            throw std::invalid_argument("unknown scene spec key '" + key + "' at line " +
                                        std::to_string(lineno) + " in " + path);
        }
    }
    spec.validate();
    return spec;
}

}  // namespace wrf
