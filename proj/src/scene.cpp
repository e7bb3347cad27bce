#include "wrf/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "wrf/rng.hpp"

namespace wrf {

Mat3 covariance_from(const Vec3& log_scale, const Vec4& rotation) {
    const Mat3 r = quat_to_rotation(rotation);
    const Vec3 s = log_scale.array().exp();
    const Mat3 a = r * s.asDiagonal();
    return a * a.transpose();
}

void covariance_from_backward(const Vec3& log_scale, const Vec4& rotation,
                              const Mat3& grad_sigma, Vec3* grad_log_scale,
                              Vec4* grad_rotation) {
    const Mat3 r = quat_to_rotation(rotation);
    const Vec3 s = log_scale.array().exp();
    const Mat3 a = r * s.asDiagonal();
    // Sigma = A A^T, dL/dA = (G + G^T) A.
    const Mat3 ga = (grad_sigma + grad_sigma.transpose()) * a;
    if (grad_log_scale) {
        for (int k = 0; k < 3; ++k) {
            // A(:,k) = s_k R(:,k); chain through s_k = exp(ls_k).
            (*grad_log_scale)[k] = r.col(k).dot(ga.col(k)) * s[k];
        }
    }
    if (grad_rotation) {
        const Mat3 gr = ga * s.asDiagonal();
        *grad_rotation = quat_rotation_backward(rotation, gr);
    }
}

double gaussian_eval(const GaussianPrimitive& p, const Vec3& x) {
    const Mat3 sigma = covariance_from(p.log_scale, p.rotation);
    const Vec3 d = x - p.mu;
    const double mahal = d.dot(sigma.llt().solve(d));
    return std::exp(-0.5 * mahal);
}

namespace {

struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct CellHash {
    std::size_t operator()(const CellKey& k) const {
        std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ull;
        h ^= static_cast<std::uint64_t>(k.y) * 19349663ull;
        h ^= static_cast<std::uint64_t>(k.z) * 83492791ull;
        return static_cast<std::size_t>(h);
    }
};

GaussianPrimitive make_initial_primitive(const Vec3& mu, double d) {
    GaussianPrimitive p;
    p.mu = mu;
    p.log_scale = Vec3::Constant(std::log(d));
    p.rotation = Vec4(1, 0, 0, 0);
    p.opacity_logit = logit(defaults::kInitOpacity);
    p.signal = Complex(defaults::kInitSignalMagnitude, 0.0);
    p.mask_score = defaults::kInitMaskScore;
    return p;
}

}  // namespace

std::vector<double> nearest_neighbor_distances(const std::vector<Vec3>& pts,
                                               double floor_dist) {
    const std::size_t n = pts.size();
    if (n < 2) {
        throw std::invalid_argument("nearest_neighbor_distances: need at least 2 points");
    }

    Vec3 lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double extent = (hi - lo).maxCoeff();
    // Cell size targeting a handful of points per cell.
    const double cell = std::max(extent / std::cbrt(static_cast<double>(n)) , 1e-9);

    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> grid;
    grid.reserve(n);
    auto key_of = [&](const Vec3& p) {
        return CellKey{static_cast<std::int64_t>(std::floor((p.x() - lo.x()) / cell)),
                       static_cast<std::int64_t>(std::floor((p.y() - lo.y()) / cell)),
                       static_cast<std::int64_t>(std::floor((p.z() - lo.z()) / cell))};
    };
    for (std::uint32_t i = 0; i < n; ++i) {
        grid[key_of(pts[i])].push_back(i);
    }

    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    for (std::uint32_t i = 0; i < n; ++i) {
        const CellKey c = key_of(pts[i]);
        const std::int64_t max_ring =
            static_cast<std::int64_t>(std::ceil(extent / cell)) + 1;
        double best = std::numeric_limits<double>::infinity();
        // Expand rings of cells; any point in ring r is at least (r-1)*cell
        // away, so once best <= (ring-1)*cell the neighbor is exact.
        for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
            if (best <= static_cast<double>(ring - 1) * cell) break;
            for (std::int64_t dx = -ring; dx <= ring; ++dx) {
                for (std::int64_t dy = -ring; dy <= ring; ++dy) {
                    for (std::int64_t dz = -ring; dz <= ring; ++dz) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                        auto it = grid.find(CellKey{c.x + dx, c.y + dy, c.z + dz});
                        if (it == grid.end()) continue;
                        for (std::uint32_t j : it->second) {
                            if (j == i) continue;
                            best = std::min(best, (pts[i] - pts[j]).norm());
                        }
                    }
                }
            }
        }
        dist[i] = std::max(best, floor_dist);
    }
    return dist;
}

Scene init_from_point_cloud(const PointCloud& pc) {
    if (pc.size() < 2) {
        throw std::invalid_argument("init_from_point_cloud: point cloud needs >= 2 points");
    }
    const std::vector<double> d =
        nearest_neighbor_distances(pc.points, defaults::kDuplicateDistanceFloor);
    Scene scene;
    scene.primitives.reserve(pc.size());
    for (std::size_t i = 0; i < pc.size(); ++i) {
        scene.primitives.push_back(make_initial_primitive(pc.points[i], d[i]));
    }
    return scene;
}

Scene init_random(std::size_t n, const Vec3& box_min, const Vec3& box_max,
                  std::uint64_t seed) {
    if (n < 2) {
        throw std::invalid_argument("init_random: need n >= 2");
    }
    if (((box_max - box_min).array() <= 0.0).any()) {
        throw std::invalid_argument("init_random: box must have positive volume");
    }
    Rng rng(seed);
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        pts.emplace_back(rng.uniform(box_min.x(), box_max.x()),
                         rng.uniform(box_min.y(), box_max.y()),
                         rng.uniform(box_min.z(), box_max.z()));
    }
    const std::vector<double> d =
        nearest_neighbor_distances(pts, defaults::kDuplicateDistanceFloor);
    Scene scene;
    scene.primitives.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        scene.primitives.push_back(make_initial_primitive(pts[i], d[i]));
    }
    return scene;
}

PointCloud load_point_cloud(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open point cloud file: " + path);
    }
    PointCloud pc;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ss(line);
        Vec3 p;
        if (!(ss >> p.x() >> p.y() >> p.z())) {
            throw std::runtime_error("malformed point cloud line in " + path + ": " + line);
        }
        pc.points.push_back(p);
    }
    return pc;
}

void save_point_cloud(const PointCloud& pc, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write point cloud file: " + path);
    }
    out.precision(9);
    for (const auto& p : pc.points) {
        out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    }
}

}  // namespace wrf
