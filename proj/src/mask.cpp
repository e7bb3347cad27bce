#include "wrf/mask.hpp"

#include <stdexcept>

#include "wrf/geometry.hpp"

namespace wrf {

void MaskConfig::validate() const {
    if (epsilon <= 0.0 || epsilon >= 1.0) {
        throw std::invalid_argument("MaskConfig: epsilon must be in (0,1)");
    }
    if (lambda < 0.0) {
        throw std::invalid_argument("MaskConfig: lambda must be >= 0");
    }
    if (prune_interval < 1) {
        throw std::invalid_argument("MaskConfig: prune_interval must be >= 1");
    }
}

MaskForward mask_forward(double mask_score, double epsilon) {
    MaskForward f;
    f.value = sigmoid(mask_score) >= epsilon ? 1.0 : 0.0;
    f.backward = sigmoid_grad(mask_score);
    return f;
}

double mask_regularizer(const std::vector<double>& mask_scores) {
    if (mask_scores.empty()) {
        throw std::invalid_argument("mask_regularizer: empty score list");
    }
    double sum = 0.0;
    for (double m : mask_scores) sum += sigmoid(m);
    return sum / static_cast<double>(mask_scores.size());
}

void mask_regularizer_backward(const std::vector<double>& mask_scores, double weight,
                               std::vector<double>* grads) {
    const double inv_n = 1.0 / static_cast<double>(mask_scores.size());
    for (std::size_t i = 0; i < mask_scores.size(); ++i) {
        (*grads)[i] += weight * inv_n * sigmoid_grad(mask_scores[i]);
    }
}

PruneResult prune(Scene* scene, double epsilon) {
    PruneResult res;
    res.retained.reserve(scene->count());
    for (std::uint32_t i = 0; i < scene->count(); ++i) {
        if (sigmoid(scene->primitives[i].mask_score) >= epsilon) {
            res.retained.push_back(i);
        }
    }
    if (res.retained.empty()) {
        res.refused = true;
        res.retained.clear();
        return res;
    }
    res.removed = scene->count() - res.retained.size();
    if (res.removed == 0) return res;
    std::vector<GaussianPrimitive> kept;
    kept.reserve(res.retained.size());
    for (std::uint32_t i : res.retained) {
        kept.push_back(scene->primitives[i]);
    }
    scene->primitives = std::move(kept);
    return res;
}

}  // namespace wrf
