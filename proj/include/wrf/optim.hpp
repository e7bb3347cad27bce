#pragma once

#include <cstdint>
#include <vector>

#include "wrf/render.hpp"
#include "wrf/scene.hpp"

namespace wrf {

// Per-parameter-group step sizes. Centers decay exponentially from mu_init to
// mu_final over the configured horizon; everything else is constant.
struct LearningRates {
    double mu_init = 1.6e-4;
    double mu_final = 1.6e-6;
    double log_scale = 2e-2;
    double rotation = 1e-3;
    double opacity = 5e-2;
    double signal = 2.5e-3;
    double mask = 1e-2;
    double net = 3e-3;
};

struct AdamConfig {
    LearningRates lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-15;
    int mu_decay_steps = 20000;  // horizon of the center lr schedule
};

// Bias-corrected adaptive-moment optimizer over all scene parameters and the
// deformation-net weights. Moment rows track the primitive count through
// densify (append/reset) and prune (keep).
class AdamOptimizer {
public:
    AdamOptimizer() = default;
    AdamOptimizer(const AdamConfig& cfg, std::size_t n, const DeformationNet& net);

    // One update from accumulated gradients; quaternions are renormalized
    // afterwards. Mask scores are left untouched when update_masks is false.
    void step(Scene* scene, DeformationNet* net, const SceneGradients& grads,
              bool update_masks);

    double current_mu_lr() const;

    // Row compaction after pruning: keep exactly the listed primitive indices.
    void keep(const std::vector<std::uint32_t>& retained);
    // Fresh zero-moment rows for newly added primitives.
    void append(std::size_t count);
    // Zero the moments of one row (densify split replaces the parent in place).
    void reset_row(std::size_t i);

    std::size_t rows() const { return m_.mu.size(); }
    int step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    const SceneGradients& first_moments() const { return m_; }
    const SceneGradients& second_moments() const { return v_; }
    void restore(SceneGradients m, SceneGradients v, int step);

private:
    AdamConfig cfg_;
    SceneGradients m_;
    SceneGradients v_;
    int t_ = 0;
};

}  // namespace wrf
