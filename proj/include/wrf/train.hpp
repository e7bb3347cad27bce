#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wrf/checkpoint.hpp"
#include "wrf/dataset.hpp"
#include "wrf/optim.hpp"
#include "wrf/render.hpp"

namespace wrf {

struct TrainConfig {
    int m = 20000;    // total iterations
    int m_d = 2000;   // densification ends
    int m_p = 4000;   // pruning ends
    int i_p = 1000;   // prune interval

    double epsilon = 0.01;  // mask threshold
    double lambda = 0.0;    // mask regularizer weight
    double w = 0.2;         // D-SSIM share of the rendering loss

    LearningRates lr;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-15;

    double tau_g = 1e-5;               // densify positional-gradient threshold
    int densify_interval = 100;
    double split_scale_threshold = 0.1;  // meters; larger primitives split
    double split_factor = 1.6;

    enum class Init { kCloud, kRandom };
    Init init = Init::kCloud;
    std::size_t random_count = 1000;  // primitives for random init

    int net_embedding_levels = 10;
    int net_hidden_width = 64;
    int net_hidden_layers = 2;

    std::uint64_t seed = 1;
    int threads = 1;
    int log_interval = 100;
    RenderConfig render;

    void validate() const;
    std::uint64_t hash() const;
};

struct TrainLogEntry {
    int t = 0;
    std::size_t n = 0;
    double l1 = 0.0;
    double d_ssim = 0.0;
    double mask_reg = 0.0;
    double total = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<TrainLogEntry> log;
    double mean_test_ssim = 0.0;
};

// Raised when a step produces a non-finite loss; carries the diagnostic line.
struct NonFiniteLossError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Three phases over t = 1..M: densify while t <= M_d, prune on the I_p grid
// while M_d < t <= M_p, finetune with frozen masks afterwards. One training
// pose per step, epoch-shuffled. Deterministic for a fixed seed at threads=1.
TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  std::ostream* log_stream = nullptr);

struct EvalReport {
    std::vector<double> ssim;  // per test sample
    double mean_ssim = 0.0;
    std::size_t n = 0;              // primitive count
    std::size_t checkpoint_size = 0;  // serialized bytes, moments excluded
    double latency_median_ms = 0.0;
    double latency_p90_ms = 0.0;
    double chamfer = -1.0;  // centers vs reference cloud; -1 when no cloud
};

// Renders every sample of the split, reporting per-sample SSIM against the
// stored spectra plus warm per-prediction latency over >= 20 renders.
EvalReport evaluate(const Checkpoint& ckpt, const std::vector<Sample>& split,
                    const RenderConfig& render, const PointCloud* cloud = nullptr);

}  // namespace wrf
