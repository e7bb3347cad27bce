#include "wrf/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "wrf/mask.hpp"

namespace wrf {

namespace {

constexpr int kTileSize = 16;

struct TileGrid {
    int tiles_x = 0;
    int tiles_y = 0;
    // Depth-sorted instance ids per tile.
    std::vector<std::vector<std::uint32_t>> lists;
};

// One pixel's contribution record, rebuilt during the backward walk.
struct Contribution {
    std::uint32_t inst;
    double gamma;
    double g;
    double d0, d1;
    double transmittance;  // T before this contribution
    bool clamped;
};

double pixel_az_step(const RenderConfig& c) { return 360.0 / c.width; }
double pixel_el_step(const RenderConfig& c) { return 90.0 / c.height; }

void build_instances(const Scene& scene, const RenderConfig& cfg, RenderGraph& g) {
    const double daz = pixel_az_step(cfg);
    const double del = pixel_el_step(cfg);
    const double az_span = (cfg.width - 1) * daz;
    g.instances.clear();
    for (std::uint32_t p = 0; p < scene.count(); ++p) {
        if (!g.active[p]) continue;
        const Vec2 c = g.projection[p].center2d;
        double r_az = cfg.sigma_cutoff * std::sqrt(g.cov2d[p](0, 0));
        const double r_el = cfg.sigma_cutoff * std::sqrt(g.cov2d[p](1, 1));
        // Keep seam duplicates disjoint.
        r_az = std::min(r_az, 179.9);
        const int el0 = std::max(0, static_cast<int>(std::ceil((c[1] - r_el) / del)));
        const int el1 = std::min(cfg.height - 1,
                                 static_cast<int>(std::floor((c[1] + r_el) / del)));
        if (el0 > el1) continue;
        for (const double shift : {-360.0, 0.0, 360.0}) {
            const double ctr = c[0] + shift;
            if (ctr + r_az < 0.0 || ctr - r_az > az_span) continue;
            SplatInstance inst;
            inst.prim = p;
            inst.az_shift = static_cast<float>(shift);
            inst.az0 = std::max(0, static_cast<int>(std::ceil((ctr - r_az) / daz)));
            inst.az1 = std::min(cfg.width - 1,
                                static_cast<int>(std::floor((ctr + r_az) / daz)));
            inst.el0 = el0;
            inst.el1 = el1;
            if (inst.az0 > inst.az1) continue;
            g.instances.push_back(inst);
        }
    }
    std::sort(g.instances.begin(), g.instances.end(),
              [&](const SplatInstance& a, const SplatInstance& b) {
                  const double da = g.projection[a.prim].depth;
                  const double db = g.projection[b.prim].depth;
                  if (da != db) return da < db;
                  if (a.prim != b.prim) return a.prim < b.prim;
                  return a.az_shift < b.az_shift;
              });
}

TileGrid build_tiles(const RenderConfig& cfg, const std::vector<SplatInstance>& instances) {
    TileGrid t;
    t.tiles_x = (cfg.width + kTileSize - 1) / kTileSize;
    t.tiles_y = (cfg.height + kTileSize - 1) / kTileSize;
    t.lists.resize(static_cast<std::size_t>(t.tiles_x) * t.tiles_y);
    for (std::uint32_t id = 0; id < instances.size(); ++id) {
        const auto& inst = instances[id];
        const int tx0 = inst.az0 / kTileSize, tx1 = inst.az1 / kTileSize;
        const int ty0 = inst.el0 / kTileSize, ty1 = inst.el1 / kTileSize;
        for (int tx = tx0; tx <= tx1; ++tx) {
            for (int ty = ty0; ty <= ty1; ++ty) {
                t.lists[static_cast<std::size_t>(tx) * t.tiles_y + ty].push_back(id);
            }
        }
    }
    return t;
}

// Shared per-primitive values used by the pixel loops.
struct Flat {
    std::vector<double> caz, cel;             // projected centers, degrees
    std::vector<double> lam00, lam01, lam11;  // inverse 2D covariance
    std::vector<double> o_eff;
    std::vector<Complex> sig;
};

Flat flatten(const Scene& scene, const RenderGraph& g) {
    const std::size_t n = scene.count();
    Flat f;
    f.caz.resize(n);
    f.cel.resize(n);
    f.lam00.resize(n);
    f.lam01.resize(n);
    f.lam11.resize(n);
    f.o_eff.resize(n);
    f.sig.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        if (!g.active[p]) continue;
        f.caz[p] = g.projection[p].center2d[0];
        f.cel[p] = g.projection[p].center2d[1];
        f.lam00[p] = g.cov2d_inv[p](0, 0);
        f.lam01[p] = g.cov2d_inv[p](0, 1);
        f.lam11[p] = g.cov2d_inv[p](1, 1);
        f.o_eff[p] = g.opacity[p];
        f.sig[p] = g.deformed[p].signal;
    }
    return f;
}

void forward_tile_range(const RenderConfig& cfg, const RenderGraph& g, const Flat& f,
                        const TileGrid& tiles, std::size_t t0, std::size_t t1,
                        std::vector<Complex>& blended) {
    const double daz = pixel_az_step(cfg);
    const double del = pixel_el_step(cfg);
    for (std::size_t ti = t0; ti < t1; ++ti) {
        const auto& list = tiles.lists[ti];
        if (list.empty()) continue;
        const int tx = static_cast<int>(ti) / tiles.tiles_y;
        const int ty = static_cast<int>(ti) % tiles.tiles_y;
        const int az_lo = tx * kTileSize, az_hi = std::min(cfg.width, az_lo + kTileSize);
        const int el_lo = ty * kTileSize, el_hi = std::min(cfg.height, el_lo + kTileSize);
        for (int az = az_lo; az < az_hi; ++az) {
            const double pa = az * daz;
            for (int el = el_lo; el < el_hi; ++el) {
                const double pe = el * del;
                double T = 1.0;
                Complex z(0.0, 0.0);
                for (const std::uint32_t id : list) {
                    const auto& inst = g.instances[id];
                    if (az < inst.az0 || az > inst.az1 || el < inst.el0 || el > inst.el1) {
                        continue;
                    }
                    const std::uint32_t p = inst.prim;
                    const double d0 = f.caz[p] + inst.az_shift - pa;
                    const double d1 = f.cel[p] - pe;
                    const double power =
                        -0.5 * (f.lam00[p] * d0 * d0 + 2.0 * f.lam01[p] * d0 * d1 +
                                f.lam11[p] * d1 * d1);
                    const double gauss = std::exp(power);
                    double gamma = f.o_eff[p] * gauss;
                    if (gamma < cfg.gamma_cull) continue;
                    if (gamma > cfg.gamma_clamp) gamma = cfg.gamma_clamp;
                    z += f.sig[p] * (gamma * T);
                    T *= 1.0 - gamma;
                    if (T < cfg.transmittance_floor) break;
                }
                blended[static_cast<std::size_t>(az) * cfg.height + el] = z;
            }
        }
    }
}

struct Accumulators {
    std::vector<Vec2> gcenter;
    std::vector<Mat2> glambda;
    std::vector<double> g_o_eff;
    std::vector<Complex> gsignal;

    explicit Accumulators(std::size_t n)
        : gcenter(n, Vec2::Zero()),
          glambda(n, Mat2::Zero()),
          g_o_eff(n, 0.0),
          gsignal(n, Complex(0, 0)) {}

    void add(const Accumulators& o) {
        for (std::size_t i = 0; i < gcenter.size(); ++i) {
            gcenter[i] += o.gcenter[i];
            glambda[i] += o.glambda[i];
            g_o_eff[i] += o.g_o_eff[i];
            gsignal[i] += o.gsignal[i];
        }
    }
};

void backward_tile_range(const RenderConfig& cfg, const RenderGraph& g, const Flat& f,
                         const TileGrid& tiles, const SpectrumImage& pixel_grads,
                         std::size_t t0, std::size_t t1, Accumulators& acc) {
    const double daz = pixel_az_step(cfg);
    const double del = pixel_el_step(cfg);
    std::vector<Contribution> contribs;
    contribs.reserve(256);
    for (std::size_t ti = t0; ti < t1; ++ti) {
        const auto& list = tiles.lists[ti];
        if (list.empty()) continue;
        const int tx = static_cast<int>(ti) / tiles.tiles_y;
        const int ty = static_cast<int>(ti) % tiles.tiles_y;
        const int az_lo = tx * kTileSize, az_hi = std::min(cfg.width, az_lo + kTileSize);
        const int el_lo = ty * kTileSize, el_hi = std::min(cfg.height, el_lo + kTileSize);
        for (int az = az_lo; az < az_hi; ++az) {
            const double pa = az * daz;
            for (int el = el_lo; el < el_hi; ++el) {
                const double gp = pixel_grads.at(az, el);
                if (gp == 0.0) continue;
                const Complex z = g.blended[static_cast<std::size_t>(az) * cfg.height + el];

                // dL/dz as a complex carrying (dL/dRe, dL/dIm).
                Complex gz;
                if (cfg.squared_magnitude) {
                    gz = 2.0 * gp * z;
                } else {
                    const double mag = std::abs(z);
                    if (mag < 1e-300) continue;
                    gz = gp * z / mag;
                }

                // Rebuild this pixel's blending sequence.
                const double pe = el * del;
                contribs.clear();
                double T = 1.0;
                for (const std::uint32_t id : list) {
                    const auto& inst = g.instances[id];
                    if (az < inst.az0 || az > inst.az1 || el < inst.el0 || el > inst.el1) {
                        continue;
                    }
                    const std::uint32_t p = inst.prim;
                    const double d0 = f.caz[p] + inst.az_shift - pa;
                    const double d1 = f.cel[p] - pe;
                    const double power =
                        -0.5 * (f.lam00[p] * d0 * d0 + 2.0 * f.lam01[p] * d0 * d1 +
                                f.lam11[p] * d1 * d1);
                    const double gauss = std::exp(power);
                    double gamma = f.o_eff[p] * gauss;
                    if (gamma < cfg.gamma_cull) continue;
                    const bool clamped = gamma > cfg.gamma_clamp;
                    if (clamped) gamma = cfg.gamma_clamp;
                    contribs.push_back({id, gamma, gauss, d0, d1, T, clamped});
                    T *= 1.0 - gamma;
                    if (T < cfg.transmittance_floor) break;
                }

                // Reverse walk with the suffix sum of later contributions.
                Complex suffix(0.0, 0.0);
                for (std::size_t k = contribs.size(); k-- > 0;) {
                    const Contribution& c = contribs[k];
                    const std::uint32_t p = g.instances[c.inst].prim;
                    const Complex s = f.sig[p];

                    const Complex dz_dgamma = s * c.transmittance - suffix / (1.0 - c.gamma);
                    const double dL_dgamma = gz.real() * dz_dgamma.real() +
                                             gz.imag() * dz_dgamma.imag();

                    acc.gsignal[p] += gz * (c.gamma * c.transmittance);
                    if (!c.clamped) {
                        acc.g_o_eff[p] += dL_dgamma * c.g;
                        const double dL_dg = dL_dgamma * f.o_eff[p];
                        // g = exp(-1/2 d^T Lambda d), d = center - pixel.
                        const double lx = f.lam00[p] * c.d0 + f.lam01[p] * c.d1;
                        const double ly = f.lam01[p] * c.d0 + f.lam11[p] * c.d1;
                        acc.gcenter[p][0] += dL_dg * (-c.g) * lx;
                        acc.gcenter[p][1] += dL_dg * (-c.g) * ly;
                        const double hgd = -0.5 * dL_dg * c.g;
                        acc.glambda[p](0, 0) += hgd * c.d0 * c.d0;
                        acc.glambda[p](0, 1) += hgd * c.d0 * c.d1;
                        acc.glambda[p](1, 0) += hgd * c.d1 * c.d0;
                        acc.glambda[p](1, 1) += hgd * c.d1 * c.d1;
                    }
                    suffix += s * (c.gamma * c.transmittance);
                }
            }
        }
    }
}

}  // namespace

SceneGradients SceneGradients::zeros(std::size_t n, const DeformationNet& net) {
    SceneGradients g;
    g.mu.assign(n, Vec3::Zero());
    g.log_scale.assign(n, Vec3::Zero());
    g.rotation.assign(n, Vec4::Zero());
    g.opacity_logit.assign(n, 0.0);
    g.signal.assign(n, Complex(0, 0));
    g.mask_score.assign(n, 0.0);
    g.center2d.assign(n, Vec2::Zero());
    g.net = net.zero_gradients();
    return g;
}

SpectrumImage render(const Scene& scene, const Vec3& p_tx, const DeformationNet& net,
                     MaskMode mode, const RenderConfig& cfg, RenderGraph* graph) {
    if (scene.count() == 0) {
        throw std::invalid_argument("render: empty scene");
    }
    RenderGraph local;
    RenderGraph& g = graph ? *graph : local;
    g.p_tx = p_tx;
    g.config = cfg;
    g.mode = mode;
    const std::size_t n = scene.count();
    const bool want_cache = graph != nullptr;

    g.active.assign(n, 0);
    g.mask_value.assign(n, 1.0);
    g.calibration.resize(n);
    g.deformed.resize(n);
    g.projection.resize(n);
    g.sigma3.resize(n);
    g.cov2d.resize(n);
    g.cov2d_inv.resize(n);
    g.opacity.resize(n);
    g.net_col.assign(n, -1);

    // Survivors of the mask and projection tests; the net evaluates them all
    // in one batch, which is several times cheaper than per-primitive calls.
    std::vector<std::uint32_t> cand;
    std::vector<Vec3> cand_mu;
    cand.reserve(n);
    cand_mu.reserve(n);
    for (std::size_t p = 0; p < n; ++p) {
        const auto& prim = scene.primitives[p];
        if (mode != MaskMode::kNone) {
            const MaskForward m = mask_forward(prim.mask_score, cfg.mask_epsilon);
            g.mask_value[p] = m.value;
            if (m.value == 0.0) continue;  // masked out, skipped entirely
        }
        g.projection[p] = project_mercator(prim.mu, scene.receiver_origin,
                                           scene.receiver_orientation);
        if (!g.projection[p].valid) continue;
        g.net_col[p] = static_cast<std::int32_t>(cand.size());
        cand.push_back(static_cast<std::uint32_t>(p));
        cand_mu.push_back(prim.mu);
    }

    std::vector<Calibration> cals;
    net.forward_batch(cand_mu, p_tx, &cals, want_cache ? &g.net_cache : nullptr);

    for (std::size_t c = 0; c < cand.size(); ++c) {
        const std::uint32_t p = cand[c];
        const auto& prim = scene.primitives[p];
        g.calibration[p] = cals[c];
        g.deformed[p] = apply_calibration(prim, g.calibration[p]);
        g.sigma3[p] = covariance_from(g.deformed[p].log_scale, g.deformed[p].quaternion);
        g.cov2d[p] = project_covariance(g.sigma3[p], g.projection[p].jacobian,
                                        cfg.cov_regularizer);
        g.cov2d_inv[p] = g.cov2d[p].inverse();
        g.opacity[p] = sigmoid(prim.opacity_logit);
        g.active[p] = 1;
    }

    build_instances(scene, cfg, g);
    const TileGrid tiles = build_tiles(cfg, g.instances);
    const Flat flat = flatten(scene, g);

    g.blended.assign(static_cast<std::size_t>(cfg.width) * cfg.height, Complex(0, 0));
    const std::size_t n_tiles = tiles.lists.size();
    const int workers = std::max(1, cfg.threads);
    if (workers == 1 || n_tiles < 2) {
        forward_tile_range(cfg, g, flat, tiles, 0, n_tiles, g.blended);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_tiles + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::size_t t0 = std::min(n_tiles, w * chunk);
            const std::size_t t1 = std::min(n_tiles, t0 + chunk);
            if (t0 >= t1) break;
            pool.emplace_back([&, t0, t1] {
                forward_tile_range(cfg, g, flat, tiles, t0, t1, g.blended);
            });
        }
        for (auto& t : pool) t.join();
    }

    SpectrumImage img(cfg.width, cfg.height);
    for (std::size_t i = 0; i < g.blended.size(); ++i) {
        const double mag = std::abs(g.blended[i]);
        img.data()[i] = cfg.squared_magnitude ? mag * mag : mag;
    }
    return img;
}

void render_backward(const Scene& scene, const DeformationNet& net,
                     const RenderGraph& graph, const SpectrumImage& pixel_grads,
                     SceneGradients* grads) {
    if (graph.mode == MaskMode::kHard) {
        throw std::logic_error("render_backward: hard-mask graphs have no gradient path");
    }
    if (graph.net_col.size() != scene.count()) {
        throw std::logic_error("render_backward: graph does not match a cached forward pass");
    }
    if (pixel_grads.width() != graph.config.width ||
        pixel_grads.height() != graph.config.height) {
        throw std::invalid_argument("render_backward: pixel gradient dimensions mismatch");
    }

    const RenderConfig& cfg = graph.config;
    const std::size_t n = scene.count();
    const TileGrid tiles = build_tiles(cfg, graph.instances);
    const Flat flat = flatten(scene, graph);

    // Pixel-space accumulation, parallel over tile chunks with per-worker
    // buffers merged in worker order for reproducibility.
    Accumulators acc(n);
    const std::size_t n_tiles = tiles.lists.size();
    const int workers = std::max(1, cfg.threads);
    if (workers == 1 || n_tiles < 2) {
        backward_tile_range(cfg, graph, flat, tiles, pixel_grads, 0, n_tiles, acc);
    } else {
        std::vector<Accumulators> per_worker;
        per_worker.reserve(workers);
        for (int w = 0; w < workers; ++w) per_worker.emplace_back(n);
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_tiles + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::size_t t0 = std::min(n_tiles, w * chunk);
            const std::size_t t1 = std::min(n_tiles, t0 + chunk);
            if (t0 >= t1) break;
            pool.emplace_back([&, t0, t1, w] {
                backward_tile_range(cfg, graph, flat, tiles, pixel_grads, t0, t1,
                                    per_worker[w]);
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& pw : per_worker) acc.add(pw);
    }

    // Per-primitive chain back to scene parameters and the deformation net.
    // Net gradients are deferred into one batched backward call; upstream
    // column c belongs to the primitive with net_col == c.
    const Eigen::Index n_cols = graph.net_cache.input.cols();
    Eigen::MatrixXd net_upstream =
        Eigen::MatrixXd::Zero(DeformationNet::kOutputDim, n_cols);
    for (std::size_t p = 0; p < n; ++p) {
        if (!graph.active[p]) continue;
        const auto& prim = scene.primitives[p];
        const auto& proj = graph.projection[p];
        const Mat2& lam = graph.cov2d_inv[p];
        const double mask = graph.mask_value[p];

        grads->center2d[p] += acc.gcenter[p];

        const Mat2 gcov = -lam * acc.glambda[p] * lam;
        const Mat3 gsigma_eff =
            proj.jacobian.transpose() * gcov * proj.jacobian;

        double grad_mask = acc.g_o_eff[p] * graph.opacity[p];
        grad_mask += 2.0 * mask * (gsigma_eff.cwiseProduct(graph.sigma3[p])).sum();

        grads->opacity_logit[p] +=
            acc.g_o_eff[p] * mask * sigmoid_grad(prim.opacity_logit);

        // Scale path of the mask: Sigma_eff = M^2 Sigma.
        const Mat3 gsigma = mask * mask * gsigma_eff;

        Vec3 gls = Vec3::Zero();
        Vec4 gq_unit = Vec4::Zero();
        covariance_from_backward(graph.deformed[p].log_scale, graph.deformed[p].quaternion,
                                 gsigma, &gls, &gq_unit);

        // Center gradient: through the projected center and through the
        // Jacobian inside the projected covariance.
        Vec3 gmu = proj.jacobian.transpose() * acc.gcenter[p];
        const Mat23 gj = 2.0 * gcov * proj.jacobian * (mask * mask * graph.sigma3[p]);
        Mat23 hess[3];
        projection_hessian(prim.mu, scene.receiver_origin, scene.receiver_orientation, hess);
        for (int k = 0; k < 3; ++k) {
            gmu[k] += (gj.cwiseProduct(hess[k])).sum();
        }

        Calibration gcal;
        apply_calibration_backward(prim, graph.deformed[p], gls, gq_unit, acc.gsignal[p],
                                   &grads->log_scale[p], &grads->rotation[p],
                                   &grads->signal[p], &gcal);

        net_upstream.col(graph.net_col[p]) << gcal.delta_log_scale, gcal.delta_quat,
            gcal.delta_signal.real(), gcal.delta_signal.imag();
        grads->mu[p] += gmu;

        if (graph.mode == MaskMode::kSte) {
            grads->mask_score[p] += grad_mask * sigmoid_grad(prim.mask_score);
        }
    }

    if (n_cols > 0) {
        std::vector<Vec3> gmu_net;
        net.backward_batch(graph.net_cache, net_upstream, &grads->net, &gmu_net);
        for (std::size_t p = 0; p < n; ++p) {
            if (graph.net_col[p] >= 0) {
                grads->mu[p] += gmu_net[static_cast<std::size_t>(graph.net_col[p])];
            }
        }
    }
}

SpectrumImage render_pruned(const Scene& scene, const Vec3& p_tx,
                            const DeformationNet& net, const RenderConfig& cfg) {
    return render(scene, p_tx, net, MaskMode::kNone, cfg, nullptr);
}

}  // namespace wrf
