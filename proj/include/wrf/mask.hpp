#pragma once

#include <cstddef>
#include <vector>

#include "wrf/scene.hpp"

namespace wrf {

struct MaskConfig {
    double epsilon = 0.01;   // binarization threshold, in (0,1)
    double lambda = 0.0;     // regularizer weight, >= 0
    int prune_interval = 1000;

    void validate() const;
};

struct MaskForward {
    double value = 1.0;       // binarized M in {0,1}
    double backward = 0.0;    // STE multiplier dM/dm = sigma'(m)
};

// Forward M = 1 iff sigma(m) >= epsilon; gradient passes through sigma(m).
MaskForward mask_forward(double mask_score, double epsilon);

// (1/N) sum sigma(m_i), the expected ratio of retained Gaussians.
double mask_regularizer(const std::vector<double>& mask_scores);

// Per-element gradient sigma'(m_i)/N added into grads (scaled by weight).
void mask_regularizer_backward(const std::vector<double>& mask_scores, double weight,
                               std::vector<double>* grads);

struct PruneResult {
    std::size_t removed = 0;
    bool refused = false;               // pruning would empty the scene
    std::vector<std::uint32_t> retained;  // indices into the pre-prune scene
};

// Physically removes primitives with sigma(m_i) < epsilon, preserving order.
// Refuses (scene untouched) when nothing would survive.
PruneResult prune(Scene* scene, double epsilon);

}  // namespace wrf
