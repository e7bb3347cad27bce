#include "wrf/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "wrf/losses.hpp"
#include "wrf/mask.hpp"
#include "wrf/rng.hpp"

namespace wrf {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<double> mask_scores(const Scene& scene) {
    std::vector<double> out(scene.count());
    for (std::size_t i = 0; i < scene.count(); ++i) {
        out[i] = scene.primitives[i].mask_score;
    }
    return out;
}

}  // namespace

void TrainConfig::validate() const {
    if (m < 1 || m_d < 0 || m_p < m_d || m_p > m) {
        throw std::invalid_argument("TrainConfig: need 0 <= M_d <= M_p <= M, M >= 1");
    }
    if (i_p < 1) throw std::invalid_argument("TrainConfig: I_p must be >= 1");
    if (epsilon <= 0.0 || epsilon >= 1.0) {
        throw std::invalid_argument("TrainConfig: epsilon must be in (0,1)");
    }
    if (lambda < 0.0) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
    if (w < 0.0 || w > 1.0) throw std::invalid_argument("TrainConfig: w must be in [0,1]");
    if (densify_interval < 1) {
        throw std::invalid_argument("TrainConfig: densify interval must be >= 1");
    }
    if (split_factor <= 1.0) {
        throw std::invalid_argument("TrainConfig: split factor must exceed 1");
    }
    if (init == Init::kRandom && random_count == 0) {
        throw std::invalid_argument("TrainConfig: random init needs a primitive count");
    }
    if (threads < 1) throw std::invalid_argument("TrainConfig: threads must be >= 1");
}

std::uint64_t TrainConfig::hash() const {
    std::ostringstream s;
    s << m << '|' << m_d << '|' << m_p << '|' << i_p << '|' << epsilon << '|' << lambda
      << '|' << w << '|' << lr.mu_init << '|' << lr.mu_final << '|' << lr.log_scale << '|'
      << lr.rotation << '|' << lr.opacity << '|' << lr.signal << '|' << lr.mask << '|'
      << lr.net << '|' << tau_g << '|' << densify_interval << '|' << split_scale_threshold
      << '|' << split_factor << '|' << static_cast<int>(init) << '|' << random_count << '|'
      << net_embedding_levels << '|' << net_hidden_width << '|' << net_hidden_layers << '|'
      << seed << '|' << render.width << 'x' << render.height;
    return fnv1a(s.str());
}

TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  std::ostream* log_stream) {
    config.validate();
    if (dataset.train.empty()) {
        throw std::invalid_argument("train: empty training split");
    }

    Scene scene;
    if (config.init == TrainConfig::Init::kCloud) {
        if (!dataset.has_cloud || dataset.cloud.size() == 0) {
            throw std::invalid_argument("train: cloud init requested but no point cloud");
        }
        scene = init_from_point_cloud(dataset.cloud);
    } else {
        scene = init_random(config.random_count, dataset.bounds_min, dataset.bounds_max,
                            config.seed);
    }
    scene.receiver_origin = dataset.receiver_origin;
    scene.receiver_orientation = dataset.receiver_orientation;

    DeformationNet net(config.net_embedding_levels, config.net_hidden_width,
                       config.net_hidden_layers);
    net.init_weights(config.seed);
    net.set_input_scale(dataset.input_scale);

    AdamConfig adam;
    adam.lr = config.lr;
    adam.beta1 = config.adam_beta1;
    adam.beta2 = config.adam_beta2;
    adam.epsilon = config.adam_epsilon;
    adam.mu_decay_steps = config.m;
    AdamOptimizer opt(adam, scene.count(), net);

    RenderConfig rcfg = config.render;
    rcfg.mask_epsilon = config.epsilon;
    rcfg.threads = config.threads;

    Rng order_rng(config.seed * 0x9e3779b97f4a7c15ull + 1);
    Rng split_rng(config.seed * 0x9e3779b97f4a7c15ull + 2);
    std::vector<std::uint32_t> order(dataset.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    std::size_t cursor = order.size();  // forces a shuffle before the first step

    std::vector<double> grad_sum(scene.count(), 0.0);
    std::vector<int> grad_cnt(scene.count(), 0);

    TrainResult result;

    for (int t = 1; t <= config.m; ++t) {
        if (cursor >= order.size()) {
            order_rng.shuffle(order);
            cursor = 0;
        }
        const std::uint32_t sample_idx = order[cursor++];
        const Sample& sample = dataset.train[sample_idx];

        const bool mask_phase = t <= config.m_p;

        RenderGraph graph;
        const SpectrumImage img =
            render(scene, sample.tx, net, MaskMode::kSte, rcfg, &graph);

        SpectrumImage grad_img(rcfg.width, rcfg.height);
        LossBreakdown lb = render_loss(img, sample.spectrum, config.w, &grad_img);
        const std::vector<double> scores = mask_scores(scene);
        double mask_reg = 0.0;
        double total = lb.render_loss;
        if (mask_phase && config.lambda > 0.0) {
            mask_reg = mask_regularizer(scores);
            total += config.lambda * mask_reg;
        }
        if (!std::isfinite(total)) {
            char buf[256];
            std::snprintf(buf, sizeof(buf),
                          "non-finite loss at t=%d sample=%u: l1=%g d_ssim=%g mask=%g "
                          "total=%g n=%zu",
                          t, sample_idx, lb.l1, lb.d_ssim, mask_reg, total, scene.count());
            throw NonFiniteLossError(buf);
        }

        SceneGradients grads = SceneGradients::zeros(scene.count(), net);
        render_backward(scene, net, graph, grad_img, &grads);
        if (mask_phase && config.lambda > 0.0) {
            std::vector<double> mask_grads(scene.count(), 0.0);
            mask_regularizer_backward(scores, config.lambda, &mask_grads);
            for (std::size_t i = 0; i < scene.count(); ++i) {
                grads.mask_score[i] += mask_grads[i];
            }
        }

        if (t <= config.m_d) {
            for (std::size_t i = 0; i < scene.count(); ++i) {
                if (graph.active[i]) {
                    grad_sum[i] += grads.center2d[i].norm();
                    ++grad_cnt[i];
                }
            }
        }

        opt.step(&scene, &net, grads, mask_phase);

        if (t <= config.m_d && t % config.densify_interval == 0) {
            const std::size_t n_before = scene.count();
            std::vector<GaussianPrimitive> added;
            for (std::size_t i = 0; i < n_before; ++i) {
                if (grad_cnt[i] == 0) continue;
                const double avg = grad_sum[i] / grad_cnt[i];
                if (avg < config.tau_g) continue;
                GaussianPrimitive& p = scene.primitives[i];
                const double max_scale = std::exp(p.log_scale.maxCoeff());
                if (max_scale < config.split_scale_threshold) {
                    added.push_back(p);  // clone
                } else {
                    // Split: two children sampled from the parent footprint,
                    // scales shrunk; first child replaces the parent row.
                    const Vec3 ls = p.log_scale.array() - std::log(config.split_factor);
                    const Mat3 rs = quat_to_rotation(p.rotation) *
                                    p.log_scale.array().exp().matrix().asDiagonal();
                    const Vec3 parent_mu = p.mu;
                    GaussianPrimitive child = p;
                    child.log_scale = ls;
                    const Vec3 z1(split_rng.normal(), split_rng.normal(), split_rng.normal());
                    const Vec3 z2(split_rng.normal(), split_rng.normal(), split_rng.normal());
                    child.mu = parent_mu + rs * z1;
                    p = child;
                    child.mu = parent_mu + rs * z2;
                    added.push_back(child);
                    opt.reset_row(i);
                }
            }
            if (!added.empty()) {
                for (auto& p : added) scene.primitives.push_back(p);
                opt.append(added.size());
            }
            grad_sum.assign(scene.count(), 0.0);
            grad_cnt.assign(scene.count(), 0);
        }

        if (t > config.m_d && t <= config.m_p &&
            (t % config.i_p == 0 || t == config.m_p)) {
            PruneResult res = prune(&scene, config.epsilon);
            if (!res.refused && res.removed > 0) {
                opt.keep(res.retained);
                std::vector<double> gs;
                std::vector<int> gc;
                gs.reserve(res.retained.size());
                gc.reserve(res.retained.size());
                for (std::uint32_t i : res.retained) {
                    gs.push_back(grad_sum[i]);
                    gc.push_back(grad_cnt[i]);
                }
                grad_sum = std::move(gs);
                grad_cnt = std::move(gc);
            }
        }

        if (t % config.log_interval == 0 || t == config.m) {
            TrainLogEntry e{t, scene.count(), lb.l1, lb.d_ssim, mask_reg, total};
            result.log.push_back(e);
            if (log_stream) {
                char line[160];
                std::snprintf(line, sizeof(line), "%d %zu %.8e %.8e %.8e %.8e\n", e.t, e.n,
                              e.l1, e.d_ssim, e.mask_reg, e.total);
                (*log_stream) << line;
            }
        }
    }

    result.checkpoint.scene = std::move(scene);
    result.checkpoint.net = std::move(net);
    result.checkpoint.iteration = config.m;
    result.checkpoint.config_hash = config.hash();
    result.checkpoint.has_moments = true;
    result.checkpoint.moments_m = opt.first_moments();
    result.checkpoint.moments_v = opt.second_moments();
    result.checkpoint.adam_step = opt.step_count();

    if (!dataset.test.empty()) {
        EvalReport rep = evaluate(result.checkpoint, dataset.test, rcfg,
                                  dataset.has_cloud ? &dataset.cloud : nullptr);
        result.mean_test_ssim = rep.mean_ssim;
    }
    return result;
}

EvalReport evaluate(const Checkpoint& ckpt, const std::vector<Sample>& split,
                    const RenderConfig& render_cfg, const PointCloud* cloud) {
    if (split.empty()) {
        throw std::invalid_argument("evaluate: empty split");
    }
    EvalReport rep;
    rep.n = ckpt.scene.count();

    Checkpoint slim = ckpt;
    slim.has_moments = false;
    slim.moments_m = SceneGradients{};
    slim.moments_v = SceneGradients{};
    rep.checkpoint_size = checkpoint_bytes(slim);

    using clock = std::chrono::steady_clock;
    // Warm-up render excluded from the timings.
    (void)render(ckpt.scene, split[0].tx, ckpt.net, MaskMode::kHard, render_cfg);

    std::vector<double> latencies;
    const std::size_t min_timed = 20;
    std::size_t rendered = 0;
    double sum_ssim = 0.0;
    while (rendered < split.size() || latencies.size() < min_timed) {
        const Sample& s = split[rendered % split.size()];
        const auto t0 = clock::now();
        const SpectrumImage img = render(ckpt.scene, s.tx, ckpt.net, MaskMode::kHard,
                                         render_cfg);
        const auto t1 = clock::now();
        latencies.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        if (rendered < split.size()) {
            const double s_val = ssim(img, s.spectrum);
            rep.ssim.push_back(s_val);
            sum_ssim += s_val;
        }
        ++rendered;
    }
    rep.mean_ssim = sum_ssim / static_cast<double>(rep.ssim.size());

    std::sort(latencies.begin(), latencies.end());
    rep.latency_median_ms = latencies[latencies.size() / 2];
    rep.latency_p90_ms = latencies[static_cast<std::size_t>(
        std::min<double>(latencies.size() - 1.0, std::floor(0.9 * latencies.size())))];

    if (cloud && cloud->size() > 0) {
        std::vector<Vec3> centers(ckpt.scene.count());
        for (std::size_t i = 0; i < centers.size(); ++i) {
            centers[i] = ckpt.scene.primitives[i].mu;
        }
        rep.chamfer = chamfer_distance(centers, *cloud);
    }
    return rep;
}

}  // namespace wrf
