#include "wrf/losses.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "wrf/mask.hpp"

namespace wrf {

namespace {

void check_dims(const SpectrumImage& a, const SpectrumImage& b, const char* op) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw std::invalid_argument(std::string(op) + ": image dimensions do not match");
    }
}

constexpr int kWindowRadius = 5;  // 11x11
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, 2 * kWindowRadius + 1>& window_taps() {
    static const auto taps = [] {
        std::array<double, 2 * kWindowRadius + 1> t{};
        double sum = 0.0;
        for (int i = -kWindowRadius; i <= kWindowRadius; ++i) {
            t[i + kWindowRadius] = std::exp(-0.5 * i * i / (kWindowSigma * kWindowSigma));
            sum += t[i + kWindowRadius];
        }
        for (double& v : t) v /= sum;
        return t;
    }();
    return taps;
}

// Symmetric (edge-repeating) reflection, folded until in range.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

using Image = std::vector<double>;  // azimuth-major, az * H + el

// Separable Gaussian blur with symmetric padding.
Image blur(const Image& in, int w, int h) {
    const auto& taps = window_taps();
    Image tmp(in.size()), out(in.size());
    // Along elevation (contiguous).
    for (int az = 0; az < w; ++az) {
        const double* row = in.data() + static_cast<std::size_t>(az) * h;
        double* orow = tmp.data() + static_cast<std::size_t>(az) * h;
        for (int el = 0; el < h; ++el) {
            double s = 0.0;
            for (int t = -kWindowRadius; t <= kWindowRadius; ++t) {
                s += taps[t + kWindowRadius] * row[reflect_index(el + t, h)];
            }
            orow[el] = s;
        }
    }
    // Along azimuth.
    for (int el = 0; el < h; ++el) {
        for (int az = 0; az < w; ++az) {
            double s = 0.0;
            for (int t = -kWindowRadius; t <= kWindowRadius; ++t) {
                s += taps[t + kWindowRadius] *
                     tmp[static_cast<std::size_t>(reflect_index(az + t, w)) * h + el];
            }
            out[static_cast<std::size_t>(az) * h + el] = s;
        }
    }
    return out;
}

// Exact adjoint of blur: scatter with the same reflected indexing.
Image blur_adjoint(const Image& in, int w, int h) {
    const auto& taps = window_taps();
    Image tmp(in.size(), 0.0), out(in.size(), 0.0);
    for (int el = 0; el < h; ++el) {
        for (int az = 0; az < w; ++az) {
            const double g = in[static_cast<std::size_t>(az) * h + el];
            if (g == 0.0) continue;
            for (int t = -kWindowRadius; t <= kWindowRadius; ++t) {
                tmp[static_cast<std::size_t>(reflect_index(az + t, w)) * h + el] +=
                    taps[t + kWindowRadius] * g;
            }
        }
    }
    for (int az = 0; az < w; ++az) {
        const double* row = tmp.data() + static_cast<std::size_t>(az) * h;
        double* orow = out.data() + static_cast<std::size_t>(az) * h;
        for (int el = 0; el < h; ++el) {
            const double g = row[el];
            if (g == 0.0) continue;
            for (int t = -kWindowRadius; t <= kWindowRadius; ++t) {
                orow[reflect_index(el + t, h)] += taps[t + kWindowRadius] * g;
            }
        }
    }
    return out;
}

}  // namespace

double l1_loss(const SpectrumImage& a, const SpectrumImage& b, SpectrumImage* grad_a,
               double weight) {
    check_dims(a, b, "l1_loss");
    const std::size_t n = a.pixel_count();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += std::abs(a.data()[i] - b.data()[i]);
    }
    if (grad_a) {
        const double scale = weight / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = a.data()[i] - b.data()[i];
            grad_a->data()[i] += d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
        }
    }
    return sum / static_cast<double>(n);
}

double ssim(const SpectrumImage& a, const SpectrumImage& b, SpectrumImage* grad_a,
            double weight) {
    check_dims(a, b, "ssim");
    const int w = a.width(), h = a.height();
    const std::size_t n = a.pixel_count();
    const Image& ia = a.data();
    const Image& ib = b.data();

    Image a2(n), b2(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        a2[i] = ia[i] * ia[i];
        b2[i] = ib[i] * ib[i];
        ab[i] = ia[i] * ib[i];
    }
    const Image ua = blur(ia, w, h), ub = blur(ib, w, h);
    const Image saa = blur(a2, w, h), sbb = blur(b2, w, h), sab = blur(ab, w, h);

    double mean = 0.0;
    Image f_ua, f_saa, f_sab;
    if (grad_a) {
        f_ua.assign(n, 0.0);
        f_saa.assign(n, 0.0);
        f_sab.assign(n, 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double ma = ua[i], mb = ub[i];
        const double va = saa[i] - ma * ma;
        const double vb = sbb[i] - mb * mb;
        const double cov = sab[i] - ma * mb;
        const double t1 = 2.0 * ma * mb + kC1;
        const double t2 = 2.0 * cov + kC2;
        const double d1 = ma * ma + mb * mb + kC1;
        const double d2 = va + vb + kC2;
        const double s = (t1 * t2) / (d1 * d2);
        mean += s;
        if (grad_a) {
            const double ds_dvar = -t1 * t2 / (d1 * d2 * d2);
            const double ds_dcov = 2.0 * t1 / (d1 * d2);
            const double ds_dma = (2.0 * mb * t2) / (d1 * d2) -
                                  (t1 * t2 * 2.0 * ma) / (d1 * d1 * d2) -
                                  2.0 * ma * ds_dvar - mb * ds_dcov;
            f_ua[i] = ds_dma;
            f_saa[i] = ds_dvar;
            f_sab[i] = ds_dcov;
        }
    }
    mean /= static_cast<double>(n);

    if (grad_a) {
        const double scale = weight / static_cast<double>(n);
        const Image g_ua = blur_adjoint(f_ua, w, h);
        const Image g_saa = blur_adjoint(f_saa, w, h);
        const Image g_sab = blur_adjoint(f_sab, w, h);
        for (std::size_t i = 0; i < n; ++i) {
            grad_a->data()[i] +=
                scale * (g_ua[i] + 2.0 * ia[i] * g_saa[i] + ib[i] * g_sab[i]);
        }
    }
    return mean;
}

LossBreakdown render_loss(const SpectrumImage& a, const SpectrumImage& b, double w,
                          SpectrumImage* grad_a) {
    if (w < 0.0 || w > 1.0) {
        throw std::invalid_argument("render_loss: weight must be in [0,1]");
    }
    LossBreakdown out;
    out.l1 = l1_loss(a, b, grad_a, 1.0 - w);
    // D-SSIM = 1 - SSIM, so its gradient is the negated SSIM gradient.
    out.d_ssim = 1.0 - ssim(a, b, grad_a, -w);
    out.render_loss = (1.0 - w) * out.l1 + w * out.d_ssim;
    out.total = out.render_loss;
    return out;
}

LossBreakdown total_loss(const LossBreakdown& render, const std::vector<double>& mask_scores,
                         double lambda) {
    if (lambda < 0.0) {
        throw std::invalid_argument("total_loss: lambda must be >= 0");
    }
    LossBreakdown out = render;
    out.mask_reg = mask_regularizer(mask_scores);
    out.total = out.render_loss + lambda * out.mask_reg;
    return out;
}

namespace {

struct GridKey {
    std::int64_t x, y, z;
    bool operator==(const GridKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct GridKeyHash {
    std::size_t operator()(const GridKey& k) const {
        std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ull;
        h ^= static_cast<std::uint64_t>(k.y) * 19349663ull;
        h ^= static_cast<std::uint64_t>(k.z) * 83492791ull;
        return static_cast<std::size_t>(h);
    }
};

class NearestGrid {
public:
    explicit NearestGrid(const std::vector<Vec3>& pts) : pts_(pts) {
        lo_ = pts[0];
        Vec3 hi = pts[0];
        for (const auto& p : pts) {
            lo_ = lo_.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        extent_ = std::max((hi - lo_).maxCoeff(), 1e-9);
        cell_ = std::max(extent_ / std::cbrt(static_cast<double>(pts.size())), 1e-9);
        for (std::uint32_t i = 0; i < pts.size(); ++i) {
            cells_[key_of(pts[i])].push_back(i);
        }
        key_lo_ = key_of(lo_);
        key_hi_ = key_of(hi);
    }

    double nearest_sq(const Vec3& q) const {
        const GridKey c = key_of(q);
        // Occupied cells all lie in [key_lo_, key_hi_]; shells outside that
        // box are empty, so start where the shell first touches it and stop
        // once the whole box has been covered.
        auto axis_gap = [](std::int64_t x, std::int64_t lo, std::int64_t hi) {
            return std::max({lo - x, x - hi, std::int64_t{0}});
        };
        const std::int64_t first_ring =
            std::max({axis_gap(c.x, key_lo_.x, key_hi_.x),
                      axis_gap(c.y, key_lo_.y, key_hi_.y),
                      axis_gap(c.z, key_lo_.z, key_hi_.z)});
        const std::int64_t last_ring =
            std::max({std::abs(key_lo_.x - c.x), std::abs(key_hi_.x - c.x),
                      std::abs(key_lo_.y - c.y), std::abs(key_hi_.y - c.y),
                      std::abs(key_lo_.z - c.z), std::abs(key_hi_.z - c.z)});
        double best = (q - pts_[0]).squaredNorm();
        for (std::int64_t ring = first_ring; ring <= last_ring; ++ring) {
            const double safe = (static_cast<double>(ring) - 1.0) * cell_;
            if (safe > 0.0 && best <= safe * safe) break;
            const std::int64_t x0 = std::max(c.x - ring, key_lo_.x);
            const std::int64_t x1 = std::min(c.x + ring, key_hi_.x);
            const std::int64_t y0 = std::max(c.y - ring, key_lo_.y);
            const std::int64_t y1 = std::min(c.y + ring, key_hi_.y);
            const std::int64_t z0 = std::max(c.z - ring, key_lo_.z);
            const std::int64_t z1 = std::min(c.z + ring, key_hi_.z);
            for (std::int64_t x = x0; x <= x1; ++x) {
                for (std::int64_t y = y0; y <= y1; ++y) {
                    for (std::int64_t z = z0; z <= z1; ++z) {
                        if (std::max({std::abs(x - c.x), std::abs(y - c.y),
                                      std::abs(z - c.z)}) != ring) {
                            continue;
                        }
                        auto it = cells_.find(GridKey{x, y, z});
                        if (it == cells_.end()) continue;
                        for (std::uint32_t j : it->second) {
                            best = std::min(best, (q - pts_[j]).squaredNorm());
                        }
                    }
                }
            }
        }
        return best;
    }

private:
    GridKey key_of(const Vec3& p) const {
        return GridKey{static_cast<std::int64_t>(std::floor((p.x() - lo_.x()) / cell_)),
                       static_cast<std::int64_t>(std::floor((p.y() - lo_.y()) / cell_)),
                       static_cast<std::int64_t>(std::floor((p.z() - lo_.z()) / cell_))};
    }

    const std::vector<Vec3>& pts_;
    Vec3 lo_;
    double extent_ = 0.0;
    double cell_ = 0.0;
    GridKey key_lo_{0, 0, 0};
    GridKey key_hi_{0, 0, 0};
    std::unordered_map<GridKey, std::vector<std::uint32_t>, GridKeyHash> cells_;
};

}  // namespace

double chamfer_distance(const std::vector<Vec3>& centers, const PointCloud& cloud) {
    if (centers.empty() || cloud.points.empty()) {
        throw std::invalid_argument("chamfer_distance: empty point set");
    }
    const NearestGrid centers_grid(centers);
    const NearestGrid cloud_grid(cloud.points);
    double sum_cloud = 0.0;
    for (const auto& x : cloud.points) {
        sum_cloud += centers_grid.nearest_sq(x);
    }
    double sum_centers = 0.0;
    for (const auto& m : centers) {
        sum_centers += cloud_grid.nearest_sq(m);
    }
    return sum_cloud / static_cast<double>(cloud.points.size()) +
           sum_centers / static_cast<double>(centers.size());
}

double chamfer_distance_bruteforce(const std::vector<Vec3>& centers, const PointCloud& cloud) {
    if (centers.empty() || cloud.points.empty()) {
        throw std::invalid_argument("chamfer_distance: empty point set");
    }
    auto one_way = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
        double sum = 0.0;
        for (const auto& q : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& p : to) {
                best = std::min(best, (q - p).squaredNorm());
            }
            sum += best;
        }
        return sum / static_cast<double>(from.size());
    };
    return one_way(cloud.points, centers) + one_way(centers, cloud.points);
}

}  // namespace wrf
