#include "wrf/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace wrf {

namespace {

// Single-scalar update; bias correction folded into the step.
inline void adam_scalar(double& x, double g, double& m, double& v, double lr,
                        const AdamConfig& c, double bc1, double bc2) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    x -= lr * (m / bc1) / (std::sqrt(v / bc2) + c.epsilon);
}

template <typename Derived, typename GradDerived>
inline void adam_vector(Eigen::MatrixBase<Derived>& x, const Eigen::MatrixBase<GradDerived>& g,
                        Eigen::MatrixBase<Derived>& m, Eigen::MatrixBase<Derived>& v, double lr,
                        const AdamConfig& c, double bc1, double bc2) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v.array() = c.beta2 * v.array() + (1.0 - c.beta2) * g.array().square();
    x.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
}

}  // namespace

AdamOptimizer::AdamOptimizer(const AdamConfig& cfg, std::size_t n, const DeformationNet& net)
    : cfg_(cfg),
      m_(SceneGradients::zeros(n, net)),
      v_(SceneGradients::zeros(n, net)) {}

double AdamOptimizer::current_mu_lr() const {
    const double frac =
        std::min(1.0, static_cast<double>(t_) / std::max(1, cfg_.mu_decay_steps));
    return cfg_.lr.mu_init * std::pow(cfg_.lr.mu_final / cfg_.lr.mu_init, frac);
}

void AdamOptimizer::step(Scene* scene, DeformationNet* net, const SceneGradients& grads,
                         bool update_masks) {
    const std::size_t n = scene->count();
    if (grads.mu.size() != n || m_.mu.size() != n) {
        throw std::logic_error("AdamOptimizer::step: row count mismatch");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    const double lr_mu = current_mu_lr();

    for (std::size_t i = 0; i < n; ++i) {
        auto& p = scene->primitives[i];
        adam_vector(p.mu, grads.mu[i], m_.mu[i], v_.mu[i], lr_mu, cfg_, bc1, bc2);
        adam_vector(p.log_scale, grads.log_scale[i], m_.log_scale[i], v_.log_scale[i],
                    cfg_.lr.log_scale, cfg_, bc1, bc2);
        adam_vector(p.rotation, grads.rotation[i], m_.rotation[i], v_.rotation[i],
                    cfg_.lr.rotation, cfg_, bc1, bc2);
        adam_scalar(p.opacity_logit, grads.opacity_logit[i], m_.opacity_logit[i],
                    v_.opacity_logit[i], cfg_.lr.opacity, cfg_, bc1, bc2);
        auto& sig = reinterpret_cast<double(&)[2]>(p.signal);
        auto& sig_m = reinterpret_cast<double(&)[2]>(m_.signal[i]);
        auto& sig_v = reinterpret_cast<double(&)[2]>(v_.signal[i]);
        const auto& sig_g = reinterpret_cast<const double(&)[2]>(grads.signal[i]);
        adam_scalar(sig[0], sig_g[0], sig_m[0], sig_v[0], cfg_.lr.signal, cfg_, bc1, bc2);
        adam_scalar(sig[1], sig_g[1], sig_m[1], sig_v[1], cfg_.lr.signal, cfg_, bc1, bc2);
        if (update_masks) {
            adam_scalar(p.mask_score, grads.mask_score[i], m_.mask_score[i],
                        v_.mask_score[i], cfg_.lr.mask, cfg_, bc1, bc2);
        }
        const double norm = p.rotation.norm();
        if (norm < 1e-12) {
            p.rotation = Vec4(1, 0, 0, 0);
        } else {
            p.rotation /= norm;
        }
    }

    auto& layers = net->layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        adam_vector(layers[l].weight, grads.net.layers[l].weight, m_.net.layers[l].weight,
                    v_.net.layers[l].weight, cfg_.lr.net, cfg_, bc1, bc2);
        adam_vector(layers[l].bias, grads.net.layers[l].bias, m_.net.layers[l].bias,
                    v_.net.layers[l].bias, cfg_.lr.net, cfg_, bc1, bc2);
    }
}

namespace {

template <typename T>
void compact(std::vector<T>& vec, const std::vector<std::uint32_t>& retained) {
    std::vector<T> out;
    out.reserve(retained.size());
    for (std::uint32_t i : retained) out.push_back(vec[i]);
    vec = std::move(out);
}

}  // namespace

void AdamOptimizer::keep(const std::vector<std::uint32_t>& retained) {
    for (auto* g : {&m_, &v_}) {
        compact(g->mu, retained);
        compact(g->log_scale, retained);
        compact(g->rotation, retained);
        compact(g->opacity_logit, retained);
        compact(g->signal, retained);
        compact(g->mask_score, retained);
        compact(g->center2d, retained);
    }
}

void AdamOptimizer::append(std::size_t count) {
    for (auto* g : {&m_, &v_}) {
        g->mu.insert(g->mu.end(), count, Vec3::Zero());
        g->log_scale.insert(g->log_scale.end(), count, Vec3::Zero());
        g->rotation.insert(g->rotation.end(), count, Vec4::Zero());
        g->opacity_logit.insert(g->opacity_logit.end(), count, 0.0);
        g->signal.insert(g->signal.end(), count, Complex(0, 0));
        g->mask_score.insert(g->mask_score.end(), count, 0.0);
        g->center2d.insert(g->center2d.end(), count, Vec2::Zero());
    }
}

void AdamOptimizer::reset_row(std::size_t i) {
    for (auto* g : {&m_, &v_}) {
        g->mu[i].setZero();
        g->log_scale[i].setZero();
        g->rotation[i].setZero();
        g->opacity_logit[i] = 0.0;
        g->signal[i] = Complex(0, 0);
        g->mask_score[i] = 0.0;
        g->center2d[i].setZero();
    }
}

void AdamOptimizer::restore(SceneGradients m, SceneGradients v, int step) {
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = step;
}

}  // namespace wrf
