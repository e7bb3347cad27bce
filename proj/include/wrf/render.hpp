#pragma once

#include <complex>
#include <vector>

#include "wrf/deform.hpp"
#include "wrf/projection.hpp"
#include "wrf/scene.hpp"
#include "wrf/spectrum.hpp"

namespace wrf {

enum class MaskMode {
    kHard,   // binarized masks, forward only
    kSte,    // binarized forward, straight-through gradients
    kNone,   // masks ignored (M == 1)
};

struct RenderConfig {
    int width = SpectrumImage::kFullWidth;
    int height = SpectrumImage::kFullHeight;
    double mask_epsilon = 0.01;
    double cov_regularizer = kCovRegularizerDeg2;  // deg^2
    double gamma_clamp = 0.999;
    double gamma_cull = 1.0 / 255.0;
    double transmittance_floor = 1e-4;  // early ray termination
    double sigma_cutoff = 3.0;          // bounding box half-extent in sigmas
    bool squared_magnitude = false;     // pixel = |z|^2 instead of |z|
    int threads = 1;
};

// 2D footprint of one primitive, possibly duplicated across the azimuth seam.
struct SplatInstance {
    std::uint32_t prim = 0;
    float az_shift = 0.0f;  // -360, 0, or +360 degrees
    int az0 = 0, az1 = 0;   // inclusive pixel bounds
    int el0 = 0, el1 = 0;
};

// Everything the backward pass needs from a forward render.
struct RenderGraph {
    Vec3 p_tx = Vec3::Zero();
    RenderConfig config;
    MaskMode mode = MaskMode::kNone;

    std::vector<char> active;                  // M == 1 and projection valid
    std::vector<double> mask_value;            // binarized M
    DeformationNet::BatchCache net_cache;      // one column per active primitive
    std::vector<std::int32_t> net_col;         // primitive -> cache column, -1 if inactive
    std::vector<Calibration> calibration;
    std::vector<DeformedParams> deformed;
    std::vector<Projection> projection;
    std::vector<Mat3> sigma3;
    std::vector<Mat2> cov2d;
    std::vector<Mat2> cov2d_inv;
    std::vector<double> opacity;               // sigma(opacity_logit)
    std::vector<SplatInstance> instances;      // depth-sorted
    std::vector<Complex> blended;              // per-pixel complex sum
};

struct SceneGradients {
    std::vector<Vec3> mu;
    std::vector<Vec3> log_scale;
    std::vector<Vec4> rotation;
    std::vector<double> opacity_logit;
    std::vector<Complex> signal;
    std::vector<double> mask_score;
    std::vector<Vec2> center2d;  // screen-space positional gradient, drives densification
    DeformationNet::Gradients net;

    static SceneGradients zeros(std::size_t n, const DeformationNet& net);
};

// Deform, project, depth-sort and alpha-blend the scene for one transmitter
// position. With a non-null graph the per-primitive state is retained for
// render_backward (graph rendering requires mode != kHard).
SpectrumImage render(const Scene& scene, const Vec3& p_tx, const DeformationNet& net,
                     MaskMode mode, const RenderConfig& config,
                     RenderGraph* graph = nullptr);

// Reverse-mode gradients of sum(pixel_grads * pixels) through the full
// pipeline: blending, projection, covariance, calibration and the MLP.
void render_backward(const Scene& scene, const DeformationNet& net,
                     const RenderGraph& graph, const SpectrumImage& pixel_grads,
                     SceneGradients* grads);

// Inference fast path for an already-pruned scene: no masks, no graph.
SpectrumImage render_pruned(const Scene& scene, const Vec3& p_tx,
                            const DeformationNet& net, const RenderConfig& config);

}  // namespace wrf
