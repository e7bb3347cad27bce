#pragma once

#include <vector>

#include "wrf/geometry.hpp"
#include "wrf/scene.hpp"

namespace wrf {

// Per-primitive calibration deltas produced by the deformation block.
struct Calibration {
    Vec3 delta_log_scale = Vec3::Zero();
    Vec4 delta_quat = Vec4::Zero();
    Complex delta_signal = Complex(0.0, 0.0);
};

// NeRF-style positional embedding: v followed by (sin(2^k pi v), cos(2^k pi v))
// for k = 0..levels-1, elementwise. Output length 3 + 6*levels.
Eigen::VectorXd positional_embedding(const Vec3& v, int levels);

// Accumulates d(embedding)/dv^T * grad_embed into grad_v.
void positional_embedding_backward(const Vec3& v, int levels,
                                   const Eigen::VectorXd& grad_embed, Vec3* grad_v);

// Transmitter-conditioned calibration MLP: embeds mu, p_tx, and their offset
// mu - p_tx, concatenates, runs dense layers with tanh activations and a
// linear output head of width 9 (3 delta log-scale, 4 delta quaternion,
// 2 delta signal).
class DeformationNet {
public:
    static constexpr int kOutputDim = 9;

    struct Layer {
        Eigen::MatrixXd weight;
        Eigen::VectorXd bias;
    };

    // Forward activations cached for the matching backward call.
    struct Cache {
        Eigen::VectorXd input;                  // concatenated embedding
        std::vector<Eigen::VectorXd> pre;       // pre-activations per layer
        std::vector<Eigen::VectorXd> post;      // post-activations per layer
    };

    // Column-per-center activations for the batched evaluation path.
    struct BatchCache {
        Eigen::MatrixXd input;                  // input_dim x count
        std::vector<Eigen::MatrixXd> post;      // post-activations per layer
    };

    struct Gradients {
        std::vector<Layer> layers;  // same shapes as the net

        void add(const Gradients& other);
        void scale(double s);
    };

    DeformationNet() = default;
    DeformationNet(int embedding_levels, int hidden_width, int hidden_layers);

    // Fan-in scaled uniform init for hidden layers; the output head starts at
    // zero so training begins from undeformed primitives.
    void init_weights(std::uint64_t seed);

    // Test hook: every weight/bias uniform in [-scale, scale].
    void randomize_all(std::uint64_t seed, double scale);

    int embedding_levels() const { return embedding_levels_; }
    int input_dim() const { return 3 * (3 + 6 * embedding_levels_); }
    double input_scale() const { return input_scale_; }
    void set_input_scale(double s) { input_scale_ = s; }

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }
    std::size_t parameter_count() const;

    Gradients zero_gradients() const;

    Calibration forward(const Vec3& mu, const Vec3& p_tx, Cache* cache = nullptr) const;

    // Exact reverse-mode gradients. upstream packs the output head as
    // (d_log_scale[3], d_quat[4], d_signal_re, d_signal_im). Gradients on the
    // weights accumulate into *grads; input gradients accumulate into
    // grad_mu / grad_p_tx when non-null.
    void backward(const Cache& cache, const Eigen::Matrix<double, kOutputDim, 1>& upstream,
                  Gradients* grads, Vec3* grad_mu, Vec3* grad_p_tx) const;

    // Evaluates many centers against one transmitter with a single matrix
    // product per layer. Output column b matches mus[b]; the cache (when
    // requested) feeds backward_batch.
    void forward_batch(const std::vector<Vec3>& mus, const Vec3& p_tx,
                       std::vector<Calibration>* out, BatchCache* cache = nullptr) const;

    // Batched reverse mode. upstream is kOutputDim x count, one column per
    // cached center. Weight gradients accumulate into *grads; center
    // gradients are written (overwritten, one per column) into *grad_mu.
    void backward_batch(const BatchCache& cache, const Eigen::MatrixXd& upstream,
                        Gradients* grads, std::vector<Vec3>* grad_mu) const;

private:
    int embedding_levels_ = 10;
    int hidden_width_ = 64;
    int hidden_layers_ = 2;
    double input_scale_ = 1.0;  // applied to mu and p_tx before embedding
    std::vector<Layer> layers_;
};

// Additive calibration; the quaternion sum is renormalized, falling
// back to the base rotation when it is numerically zero.
struct DeformedParams {
    Vec3 log_scale;
    Vec4 quaternion;       // unit
    Complex signal;
    Vec4 quat_raw;         // rotation + delta, before normalization
    bool quat_degenerate = false;
};

DeformedParams apply_calibration(const GaussianPrimitive& p, const Calibration& cal);

// Chains gradients on the deformed parameters back to the base primitive
// fields and the calibration deltas.
void apply_calibration_backward(const GaussianPrimitive& p, const DeformedParams& d,
                                const Vec3& grad_log_scale, const Vec4& grad_quat_unit,
                                const Complex& grad_signal, Vec3* grad_base_log_scale,
                                Vec4* grad_base_rotation, Complex* grad_base_signal,
                                Calibration* grad_cal);

}  // namespace wrf
