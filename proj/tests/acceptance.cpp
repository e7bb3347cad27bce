// End-to-end acceptance checks for the wireless radiance field pipeline.
// Each criterion prints exactly one PASS/FAIL line; the exit code is the
// number of failed criteria. Criteria can be selected by number on the
// command line (default: all), e.g. `acceptance 1 2 3`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wrf/checkpoint.hpp"
#include "wrf/dataset.hpp"
#include "wrf/losses.hpp"
#include "wrf/mask.hpp"
#include "wrf/oracle.hpp"
#include "wrf/render.hpp"
#include "wrf/rng.hpp"
#include "wrf/train.hpp"

using namespace wrf;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

Vec3 direction_point(double azimuth_deg, double elevation_deg, double r) {
    const double a = azimuth_deg / kDegPerRad;
    const double e = elevation_deg / kDegPerRad;
    return r * Vec3(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
}

Scene random_scene(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Scene s;
    for (std::size_t i = 0; i < n; ++i) {
        GaussianPrimitive p;
        p.mu = direction_point(rng.uniform(5.0, 355.0), rng.uniform(10.0, 80.0),
                               rng.uniform(1.0, 3.0));
        p.log_scale = Vec3(rng.uniform(-2.0, -0.5), rng.uniform(-2.0, -0.5),
                           rng.uniform(-2.0, -0.5));
        p.rotation = quat_normalize(
            Vec4(1.0, 0.3 * rng.normal(), 0.3 * rng.normal(), 0.3 * rng.normal()));
        p.opacity_logit = rng.uniform(-1.5, 0.5);
        p.signal = Complex(rng.normal(), rng.normal());
        p.mask_score = rng.uniform(-1.0, 1.0);
        s.primitives.push_back(p);
    }
    return s;
}

// Four-reflector room shared by the learning criteria (ceiling + 3 walls).
// The receiver sits in a floor corner so every sampled transmitter keeps a
// few meters of standoff; spectra then vary smoothly enough with p_tx to be
// learnable from a few hundred poses.
SyntheticSceneSpec room4_spec() {
    SyntheticSceneSpec spec;
    spec.reflectors = {
        Reflector{Vec3(0, 0, 3.0), Vec3(0, 0, -1), 4.0, 4.0, 0.4},
        Reflector{Vec3(4.5, 0, 1.5), Vec3(-1, 0, 0), 4.0, 1.5, 0.35},
        Reflector{Vec3(0, 4.5, 1.5), Vec3(0, -1, 0), 4.0, 1.5, 0.35},
        Reflector{Vec3(-4.5, 0, 1.5), Vec3(1, 0, 0), 4.0, 1.5, 0.3},
    };
    spec.array.wavelength = 0.5;
    spec.array.spacing = 0.25;
    spec.receiver_origin = Vec3(-3.8, -3.8, 0.05);
    spec.bounds_min = Vec3(-2.2, -2.2, 0.3);
    spec.bounds_max = Vec3(4, 4, 2.6);
    spec.cloud_points = 800;
    spec.seed = 7;
    return spec;
}

// In-memory dataset at an arbitrary spectrum resolution, normalized the same
// way as datasets loaded from disk (global max over all samples).
Dataset make_dataset(const SyntheticSceneSpec& spec, std::size_t poses,
                     double split_ratio, int w, int h, std::uint64_t pose_seed) {
    const std::vector<Vec3> positions = sample_tx_positions(spec, poses, pose_seed);
    std::vector<Sample> samples;
    double peak = 0.0;
    for (const Vec3& tx : positions) {
        Sample s;
        s.tx = tx;
        s.spectrum = synth_spectrum(spec, tx, w, h).spectrum;
        peak = std::max(peak, s.spectrum.max_value());
        samples.push_back(std::move(s));
    }
    Dataset ds;
    ds.array = spec.array;
    ds.receiver_origin = spec.receiver_origin;
    ds.receiver_orientation = spec.receiver_orientation;
    ds.bounds_min = spec.bounds_min;
    ds.bounds_max = spec.bounds_max;
    ds.seed = spec.seed;
    ds.spectrum_max = peak > 0.0 ? peak : 1.0;
    double extent = 0.0;
    for (int k = 0; k < 3; ++k) {
        extent = std::max({extent, std::abs(spec.bounds_min[k]), std::abs(spec.bounds_max[k])});
    }
    ds.input_scale = 1.0 / extent;
    ds.cloud = sample_scene_cloud(spec);
    ds.has_cloud = ds.cloud.size() > 0;

    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(spec.seed ^ 0x5851f42d4c957f2dull);
    shuffle_rng.shuffle(order);
    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(split_ratio * static_cast<double>(samples.size())));
    for (std::size_t i = 0; i < order.size(); ++i) {
        Sample& s = samples[order[i]];
        for (double& v : s.spectrum.data()) v /= ds.spectrum_max;
        (i < n_train ? ds.train : ds.test).push_back(std::move(s));
    }
    return ds;
}

// Scaled-down benchmark shared by criteria 5, 6 and 9.
struct ScaledRun {
    TrainResult result;
    std::vector<double> init_chamfer;  // chamfer of the initial centers
};

TrainConfig scaled_config(std::uint64_t seed, double lambda) {
    TrainConfig cfg;
    cfg.m = 3000;
    cfg.m_d = 300;
    cfg.m_p = 2400;
    cfg.i_p = 300;
    cfg.densify_interval = 100;
    cfg.lr.mask = 0.02;  // fewer steps than the full run; faster mask dynamics
    cfg.lambda = lambda;
    cfg.seed = seed;
    cfg.log_interval = 1;
    cfg.net_embedding_levels = 6;
    cfg.net_hidden_width = 32;
    cfg.net_hidden_layers = 2;
    cfg.render.width = 120;
    cfg.render.height = 30;
    return cfg;
}

struct ScaledBench {
    Dataset ds;
    // key: (seed, lambda*1000) for cloud init; negative lambda key = random init
    std::map<std::pair<std::uint64_t, int>, TrainResult> runs;

    const TrainResult& run(std::uint64_t seed, double lambda, bool cloud_init) {
        const int lam_key = cloud_init ? static_cast<int>(std::lround(lambda * 1000))
                                       : -1;
        const auto key = std::make_pair(seed, lam_key);
        auto it = runs.find(key);
        if (it != runs.end()) return it->second;
        TrainConfig cfg = scaled_config(seed, lambda);
        if (!cloud_init) {
            cfg.init = TrainConfig::Init::kRandom;
            cfg.random_count = ds.cloud.size();
        }
        return runs.emplace(key, train(cfg, ds)).first->second;
    }
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

// --- criterion 1: finite-difference check of the full pipeline ------------

Outcome criterion_gradients() {
    const auto t0 = Clock::now();
    const std::size_t n = 20;
    Scene s = random_scene(n, 404);
    DeformationNet net(3, 8, 2);
    net.randomize_all(5, 0.3);
    net.set_input_scale(0.3);
    const Vec3 tx(0.6, -0.8, 1.2);

    RenderConfig cfg;
    cfg.width = 8;
    cfg.height = 4;
    // culling thresholds off so the objective is smooth for the probes
    cfg.gamma_cull = 0.0;
    cfg.transmittance_floor = 0.0;
    cfg.sigma_cutoff = 1e9;

    // target offset from the rendered image so the L1 term has no kinks
    const SpectrumImage base = render(s, tx, net, MaskMode::kNone, cfg);
    SpectrumImage target(8, 4);
    Rng tr(7);
    for (std::size_t i = 0; i < target.data().size(); ++i) {
        target.data()[i] = base.data()[i] + 0.4 + 0.2 * tr.uniform();
    }

    auto objective = [&](const Scene& sc, const DeformationNet& dn) {
        return render_loss(render(sc, tx, dn, MaskMode::kNone, cfg), target, 0.2)
            .render_loss;
    };

    RenderGraph graph;
    const SpectrumImage img = render(s, tx, net, MaskMode::kNone, cfg, &graph);
    SpectrumImage pixel_grad(8, 4);
    render_loss(img, target, 0.2, &pixel_grad);
    SceneGradients grads = SceneGradients::zeros(n, net);
    render_backward(s, net, graph, pixel_grad, &grads);

    const double h = 1e-5;
    const double tol = 1e-3;
    double worst = 0.0;
    int checked = 0;
    auto fd_check = [&](double got, auto&& eval, double x0) {
        const double fd = (eval(x0 + h) - eval(x0 - h)) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(got), 1e-8});
        worst = std::max(worst, std::abs(got - fd) / denom);
        ++checked;
    };

    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) {
            fd_check(grads.mu[i][k], [&](double x) {
                Scene sc = s;
                sc.primitives[i].mu[k] = x;
                return objective(sc, net);
            }, s.primitives[i].mu[k]);
            fd_check(grads.log_scale[i][k], [&](double x) {
                Scene sc = s;
                sc.primitives[i].log_scale[k] = x;
                return objective(sc, net);
            }, s.primitives[i].log_scale[k]);
        }
        for (int k = 0; k < 4; ++k) {
            fd_check(grads.rotation[i][k], [&](double x) {
                Scene sc = s;
                sc.primitives[i].rotation[k] = x;
                return objective(sc, net);
            }, s.primitives[i].rotation[k]);
        }
        fd_check(grads.opacity_logit[i], [&](double x) {
            Scene sc = s;
            sc.primitives[i].opacity_logit = x;
            return objective(sc, net);
        }, s.primitives[i].opacity_logit);
        fd_check(grads.signal[i].real(), [&](double x) {
            Scene sc = s;
            sc.primitives[i].signal = Complex(x, s.primitives[i].signal.imag());
            return objective(sc, net);
        }, s.primitives[i].signal.real());
        fd_check(grads.signal[i].imag(), [&](double x) {
            Scene sc = s;
            sc.primitives[i].signal = Complex(s.primitives[i].signal.real(), x);
            return objective(sc, net);
        }, s.primitives[i].signal.imag());
    }
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const auto& w = net.layers()[l].weight;
        for (int r = 0; r < w.rows(); ++r) {
            for (int c = 0; c < w.cols(); ++c) {
                fd_check(grads.net.layers[l].weight(r, c), [&](double x) {
                    DeformationNet mod = net;
                    mod.layers()[l].weight(r, c) = x;
                    return objective(s, mod);
                }, w(r, c));
            }
        }
        for (int b = 0; b < net.layers()[l].bias.size(); ++b) {
            fd_check(grads.net.layers[l].bias[b], [&](double x) {
                DeformationNet mod = net;
                mod.layers()[l].bias[b] = x;
                return objective(s, mod);
            }, net.layers()[l].bias[b]);
        }
    }

    const double elapsed = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "%d parameters, worst rel. error %.2e (tol 1e-3), %.1f s (limit 120 s)",
                  checked, worst, elapsed);
    return {worst < tol && elapsed < 120.0, buf};
}

// --- criterion 2: hard masks match the pruned scene -----------------------

Outcome criterion_prune_equivalence() {
    const DeformationNet net = [] {
        DeformationNet n(4, 16, 2);
        n.randomize_all(3, 0.3);
        n.set_input_scale(0.3);
        return n;
    }();
    RenderConfig cfg;
    cfg.width = 180;
    cfg.height = 45;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Scene s = random_scene(40, seed);
        for (std::size_t i = 0; i < s.count(); i += 3) s.primitives[i].mask_score = -20.0;
        const Vec3 tx(0.5, -0.5, 1.0);
        const SpectrumImage hard = render(s, tx, net, MaskMode::kHard, cfg);
        Scene pruned = s;
        const PruneResult res = prune(&pruned, cfg.mask_epsilon);
        if (res.refused) return {false, "prune refused on a mixed-mask scene"};
        const SpectrumImage fast = render_pruned(pruned, tx, net, cfg);
        for (std::size_t i = 0; i < hard.data().size(); ++i) {
            worst = std::max(worst, std::abs(hard.data()[i] - fast.data()[i]));
        }
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "10 scenes, max per-pixel difference %.2e (tol 1e-5)", worst);
    return {worst < 1e-5, buf};
}

// --- criterion 3: line-of-sight oracle sanity ------------------------------

Outcome criterion_oracle() {
    SyntheticSceneSpec spec;
    spec.reflectors.clear();

    // off-grid directions: the peak must land within one degree
    Rng rng(12);
    double worst_az = 0.0, worst_el = 0.0;
    for (int i = 0; i < 25; ++i) {
        const double az = rng.uniform(0.0, 360.0);
        const double el = rng.uniform(5.0, 85.0);
        const auto p = synth_spectrum(spec, direction_point(az, el, 2.0)).spectrum.argmax();
        double daz = std::abs(p.az - az);
        daz = std::min(daz, 360.0 - daz);
        worst_az = std::max(worst_az, daz);
        worst_el = std::max(worst_el, std::abs(p.el - el));
    }

    // on-grid directions: the peak attains P = K
    double worst_rel = 0.0;
    for (int i = 0; i < 25; ++i) {
        const int az = static_cast<int>(rng.uniform(0.0, 360.0));
        const int el = static_cast<int>(rng.uniform(5.0, 85.0));
        const OracleResult res =
            synth_spectrum(spec, direction_point(az, el, rng.uniform(1.0, 4.0)));
        const double k = static_cast<double>(spec.array.k);
        worst_rel = std::max(worst_rel, std::abs(res.spectrum.at(az, el) - k) / k);
        const auto p = res.spectrum.argmax();
        worst_az = std::max(worst_az, std::abs(static_cast<double>(p.az - az)));
        worst_el = std::max(worst_el, std::abs(static_cast<double>(p.el - el)));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "peak error az %.2f deg, el %.2f deg (tol 1); on-grid peak rel. error %.1e "
                  "(tol 1e-6)",
                  worst_az, worst_el, worst_rel);
    return {worst_az <= 1.0 && worst_el <= 1.0 && worst_rel < 1e-6, buf};
}

// --- criterion 4: end-to-end learning on the benchmark room ----------------

Outcome criterion_learning() {
    const auto t0 = Clock::now();
    const Dataset ds = make_dataset(room4_spec(), 250, 0.8, SpectrumImage::kFullWidth,
                                    SpectrumImage::kFullHeight, 101);
    if (ds.train.size() != 200 || ds.test.size() != 50) {
        return {false, "unexpected dataset split"};
    }
    TrainConfig cfg;  // defaults: 20k iterations, lambda = 0
    cfg.seed = 1;
    const TrainResult res = train(cfg, ds);
    const double elapsed = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "mean test SSIM %.4f (need >= 0.85), N = %zu, %.0f s (limit 3600 s)",
                  res.mean_test_ssim, res.checkpoint.scene.count(), elapsed);
    return {res.mean_test_ssim >= 0.85 && elapsed <= 3600.0, buf};
}

// --- criterion 5: sparsity/quality trade-off over lambda -------------------

Outcome criterion_tradeoff(ScaledBench& bench) {
    const std::vector<double> lambdas = {0.0, 0.01, 0.02, 0.04};
    bool monotone = true;
    bool sparse_enough = true;
    bool quality_kept = true;
    std::ostringstream detail;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        std::size_t prev_n = 0;
        std::size_t n0 = 0;
        double ssim0 = 0.0;
        for (std::size_t li = 0; li < lambdas.size(); ++li) {
            const TrainResult& r = bench.run(seed, lambdas[li], true);
            const std::size_t n = r.checkpoint.scene.count();
            if (li == 0) {
                n0 = n;
                ssim0 = r.mean_test_ssim;
            } else if (n > prev_n) {
                monotone = false;
            }
            if (lambdas[li] == 0.02) {
                if (n >= n0 / 4) sparse_enough = false;
                if (ssim0 - r.mean_test_ssim > 0.08) quality_kept = false;
                detail << (seed > 1 ? "; " : "") << "seed " << seed << ": N " << n0 << " -> "
                       << n << ", SSIM " << ssim0 << " -> " << r.mean_test_ssim;
            }
            prev_n = n;
        }
    }
    std::string msg = detail.str();
    if (!monotone) msg += " [N not monotone in lambda]";
    if (!sparse_enough) msg += " [lambda=0.02 kept >= 25%]";
    if (!quality_kept) msg += " [SSIM drop > 0.08]";
    return {monotone && sparse_enough && quality_kept, msg};
}

// --- criterion 6: primitive-count trajectory shape --------------------------

Outcome criterion_trajectory(ScaledBench& bench) {
    const TrainResult& r = bench.run(1, 0.02, true);
    const TrainConfig cfg = scaled_config(1, 0.02);
    if (r.log.size() != static_cast<std::size_t>(cfg.m)) {
        return {false, "expected one log entry per iteration"};
    }
    std::size_t drops = 0;
    for (std::size_t i = 1; i < r.log.size(); ++i) {
        const auto& prev = r.log[i - 1];
        const auto& cur = r.log[i];
        if (cur.t <= cfg.m_d && cur.n < prev.n) {
            return {false, "N decreased during densification"};
        }
        if (cur.t > cfg.m_d && cur.t <= cfg.m_p) {
            if (cur.n > prev.n) return {false, "N increased during pruning"};
            if (cur.n < prev.n) {
                ++drops;
                if (cur.t % cfg.i_p != 0) return {false, "prune drop off the interval grid"};
            }
        }
        if (cur.t > cfg.m_p && cur.n != prev.n) {
            return {false, "N changed during finetuning"};
        }
    }
    char buf[120];
    std::snprintf(buf, sizeof buf,
                  "N %zu -> %zu -> %zu with %zu on-grid prune drops",
                  r.log.front().n, r.log[static_cast<std::size_t>(cfg.m_d)].n,
                  r.log.back().n, drops);
    return {true, buf};
}

// --- criterion 7: latency scaling and the small-N floor --------------------

Outcome criterion_latency() {
    DeformationNet net(10, 64, 2);
    net.randomize_all(9, 0.1);
    net.set_input_scale(0.25);
    RenderConfig cfg;  // full 360x90 grid
    const Vec3 tx(0.5, 1.0, 1.5);

    auto bench = [&](std::size_t n, int reps) {
        const Scene s = random_scene(n, 1000 + n);
        render_pruned(s, tx, net, cfg);  // warm-up
        std::vector<double> ms;
        for (int i = 0; i < reps; ++i) {
            const auto t0 = Clock::now();
            render_pruned(s, tx, net, cfg);
            ms.push_back(seconds_since(t0) * 1e3);
        }
        return median(ms);
    };

    const double big = bench(50000, 11);
    const double mid = bench(5000, 21);
    const double small = bench(1500, 21);
    const double speedup = big / small;
    const double floor_ratio = mid / small;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "median latency 50k: %.1f ms, 5k: %.2f ms, 1.5k: %.2f ms; speedup %.1fx "
                  "(need >= 3), floor ratio %.2f (need <= 3.0 vs 3.33 linear)",
                  big, mid, small, speedup, floor_ratio);
    return {speedup >= 3.0 && floor_ratio <= 3.0, buf};
}

// --- criterion 8: checkpoint size proportional to N ------------------------

Outcome criterion_storage() {
    auto make_ckpt = [](std::size_t n) {
        Checkpoint c;
        c.scene = random_scene(n, n);
        c.net = DeformationNet(10, 64, 2);
        c.net.init_weights(1);
        return c;
    };
    const std::size_t n_small = 1500, n_big = 50000;
    const double bytes_small =
        static_cast<double>(checkpoint_bytes_excluding_net(make_ckpt(n_small)));
    const double bytes_big =
        static_cast<double>(checkpoint_bytes_excluding_net(make_ckpt(n_big)));
    const double ratio = bytes_big / bytes_small;
    const double ideal = static_cast<double>(n_big) / static_cast<double>(n_small);
    const double rel = std::abs(ratio - ideal) / ideal;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "size ratio %.2f vs N ratio %.2f: deviation %.1f%% (tol 20%%)", ratio,
                  ideal, rel * 100.0);
    return {rel <= 0.20, buf};
}

// --- criterion 9: point-cloud init beats random init ------------------------

Outcome criterion_init(ScaledBench& bench) {
    // exact zero before training: the initial centers are the cloud points
    const Scene init = init_from_point_cloud(bench.ds.cloud);
    std::vector<Vec3> centers;
    for (const auto& p : init.primitives) centers.push_back(p.mu);
    const double init_chamfer = chamfer_distance(centers, bench.ds.cloud);
    if (init_chamfer != 0.0) {
        return {false, "cloud-init chamfer before training is not exactly zero"};
    }

    std::ostringstream detail;
    detail << "pre-training chamfer 0";
    bool all_better = true;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto chamfer_of = [&](const TrainResult& r) {
            std::vector<Vec3> c;
            for (const auto& p : r.checkpoint.scene.primitives) c.push_back(p.mu);
            return chamfer_distance(c, bench.ds.cloud);
        };
        const double cloud_c = chamfer_of(bench.run(seed, 0.0, true));
        const double random_c = chamfer_of(bench.run(seed, 0.0, false));
        detail << "; seed " << seed << ": " << cloud_c << " vs " << random_c;
        if (!(cloud_c < random_c)) all_better = false;
    }
    return {all_better, detail.str()};
}

// --- criterion 10: bit-exact determinism ------------------------------------

Outcome criterion_determinism(ScaledBench& bench) {
    TrainConfig cfg = scaled_config(4, 0.01);
    cfg.m = 150;
    cfg.m_d = 40;
    cfg.m_p = 90;
    cfg.i_p = 30;

    auto run_once = [&]() {
        std::ostringstream log;
        const TrainResult r = train(cfg, bench.ds, &log);
        std::ostringstream bytes(std::ios::binary);
        save_checkpoint(r.checkpoint, bytes);
        return std::make_pair(log.str(), bytes.str());
    };
    const auto a = run_once();
    const auto b = run_once();
    if (a.first != b.first) return {false, "training logs differ between identical runs"};
    if (a.second != b.second) return {false, "checkpoints differ between identical runs"};

    // one further optimizer step after save/load must be bit-exact
    auto one_step = [&](const std::string& blob) {
        std::istringstream in(blob, std::ios::binary);
        Checkpoint c = load_checkpoint(in);
        AdamConfig adam;
        adam.lr = cfg.lr;
        adam.mu_decay_steps = cfg.m;
        AdamOptimizer opt(adam, c.scene.count(), c.net);
        opt.restore(c.moments_m, c.moments_v, c.adam_step);
        RenderConfig rcfg = cfg.render;
        rcfg.mask_epsilon = cfg.epsilon;
        RenderGraph graph;
        const SpectrumImage img =
            render(c.scene, bench.ds.train[0].tx, c.net, MaskMode::kSte, rcfg, &graph);
        SpectrumImage pixel_grad(rcfg.width, rcfg.height);
        render_loss(img, bench.ds.train[0].spectrum, cfg.w, &pixel_grad);
        SceneGradients grads = SceneGradients::zeros(c.scene.count(), c.net);
        render_backward(c.scene, c.net, graph, pixel_grad, &grads);
        opt.step(&c.scene, &c.net, grads, false);
        c.moments_m = opt.first_moments();
        c.moments_v = opt.second_moments();
        c.adam_step = opt.step_count();
        std::ostringstream out(std::ios::binary);
        save_checkpoint(c, out);
        return out.str();
    };
    if (one_step(a.second) != one_step(a.second)) {
        return {false, "post-reload training step is not bit-exact"};
    }
    return {true, "identical logs, checkpoints, and post-reload step"};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    auto wanted = [&](int k) { return selected.empty() || selected.count(k) > 0; };

    std::map<int, Outcome> results;
    ScaledBench bench;
    const bool needs_bench = wanted(5) || wanted(6) || wanted(9) || wanted(10);
    if (needs_bench) {
        const auto t0 = Clock::now();
        bench.ds = make_dataset(room4_spec(), 60, 0.8, 120, 30, 77);
        std::fprintf(stderr, "[setup] scaled dataset: %zu/%zu samples, %.1f s\n",
                     bench.ds.train.size(), bench.ds.test.size(), seconds_since(t0));
    }

    struct Entry {
        int id;
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Entry> entries = {
        {1, "gradient correctness", [&] { return criterion_gradients(); }},
        {2, "mask/prune equivalence", [&] { return criterion_prune_equivalence(); }},
        {3, "oracle sanity", [&] { return criterion_oracle(); }},
        {4, "end-to-end learning", [&] { return criterion_learning(); }},
        {5, "sparsity trade-off", [&] { return criterion_tradeoff(bench); }},
        {6, "count trajectory", [&] { return criterion_trajectory(bench); }},
        {7, "latency scaling", [&] { return criterion_latency(); }},
        {8, "storage scaling", [&] { return criterion_storage(); }},
        {9, "init quality", [&] { return criterion_init(bench); }},
        {10, "determinism", [&] { return criterion_determinism(bench); }},
    };

    int failures = 0;
    for (const auto& e : entries) {
        if (!wanted(e.id)) continue;
        const auto t0 = Clock::now();
        Outcome out;
        try {
            out = e.fn();
        } catch (const std::exception& ex) {
            out = {false, std::string("exception: ") + ex.what()};
        }
        std::printf("criterion %2d %-22s %s  (%.1f s)  %s\n", e.id, e.name,
                    out.pass ? "PASS" : "FAIL", seconds_since(t0), out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    return failures;
}
