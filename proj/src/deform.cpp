#include "wrf/deform.hpp"

#include <cmath>
#include <stdexcept>

#include "wrf/rng.hpp"

namespace wrf {

Eigen::VectorXd positional_embedding(const Vec3& v, int levels) {
    if (levels < 0) {
        throw std::invalid_argument("positional_embedding: levels must be >= 0");
    }
    Eigen::VectorXd out(3 + 6 * levels);
    out.head<3>() = v;
    for (int k = 0; k < levels; ++k) {
        const double f = std::ldexp(kPi, k);  // 2^k * pi
        for (int j = 0; j < 3; ++j) {
            out[3 + 6 * k + j] = std::sin(f * v[j]);
            out[3 + 6 * k + 3 + j] = std::cos(f * v[j]);
        }
    }
    return out;
}

void positional_embedding_backward(const Vec3& v, int levels,
                                   const Eigen::VectorXd& grad_embed, Vec3* grad_v) {
    *grad_v += grad_embed.head<3>();
    for (int k = 0; k < levels; ++k) {
        const double f = std::ldexp(kPi, k);
        for (int j = 0; j < 3; ++j) {
            (*grad_v)[j] += grad_embed[3 + 6 * k + j] * f * std::cos(f * v[j]);
            (*grad_v)[j] -= grad_embed[3 + 6 * k + 3 + j] * f * std::sin(f * v[j]);
        }
    }
}

DeformationNet::DeformationNet(int embedding_levels, int hidden_width, int hidden_layers)
    : embedding_levels_(embedding_levels),
      hidden_width_(hidden_width),
      hidden_layers_(hidden_layers) {
    if (embedding_levels < 0 || hidden_width < 1 || hidden_layers < 1) {
        throw std::invalid_argument("DeformationNet: invalid architecture");
    }
    int in = input_dim();
    for (int l = 0; l < hidden_layers_; ++l) {
        layers_.push_back({Eigen::MatrixXd::Zero(hidden_width_, in),
                           Eigen::VectorXd::Zero(hidden_width_)});
        in = hidden_width_;
    }
    layers_.push_back({Eigen::MatrixXd::Zero(kOutputDim, in), Eigen::VectorXd::Zero(kOutputDim)});
}

void DeformationNet::init_weights(std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        auto& layer = layers_[l];
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
            for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
                layer.weight(i, j) = rng.uniform(-bound, bound);
            }
        }
        layer.bias.setZero();
    }
    // Zero output head: training starts from undeformed primitives.
    layers_.back().weight.setZero();
    layers_.back().bias.setZero();
}

void DeformationNet::randomize_all(std::uint64_t seed, double scale) {
    Rng rng(seed);
    for (auto& layer : layers_) {
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
            for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
                layer.weight(i, j) = rng.uniform(-scale, scale);
            }
        }
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
            layer.bias[i] = rng.uniform(-scale, scale);
        }
    }
}

std::size_t DeformationNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) {
        n += static_cast<std::size_t>(l.weight.size()) + static_cast<std::size_t>(l.bias.size());
    }
    return n;
}

DeformationNet::Gradients DeformationNet::zero_gradients() const {
    Gradients g;
    for (const auto& l : layers_) {
        g.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                            Eigen::VectorXd::Zero(l.bias.size())});
    }
    return g;
}

void DeformationNet::Gradients::add(const Gradients& other) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weight += other.layers[l].weight;
        layers[l].bias += other.layers[l].bias;
    }
}

void DeformationNet::Gradients::scale(double s) {
    for (auto& l : layers) {
        l.weight *= s;
        l.bias *= s;
    }
}

Calibration DeformationNet::forward(const Vec3& mu, const Vec3& p_tx, Cache* cache) const {
    const int embed_len = 3 + 6 * embedding_levels_;
    Eigen::VectorXd input(input_dim());
    input.head(embed_len) = positional_embedding(input_scale_ * mu, embedding_levels_);
    input.segment(embed_len, embed_len) =
        positional_embedding(input_scale_ * p_tx, embedding_levels_);
    // Relative offset: distance/alignment conditions between the primitive and
    // the transmitter become near-linear in this feature block, which the
    // small MLP learns far faster than products of the separate embeddings.
    input.tail(embed_len) =
        positional_embedding(input_scale_ * (mu - p_tx), embedding_levels_);

    Eigen::VectorXd x = input;
    std::vector<Eigen::VectorXd> pre, post;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::VectorXd z = layers_[l].weight * x + layers_[l].bias;
        if (l + 1 < layers_.size()) {
            x = z.array().tanh();
        } else {
            x = z;
        }
        if (cache) {
            pre.push_back(z);
            post.push_back(x);
        }
    }
    if (cache) {
        cache->input = std::move(input);
        cache->pre = std::move(pre);
        cache->post = std::move(post);
    }

    Calibration cal;
    cal.delta_log_scale = x.segment<3>(0);
    cal.delta_quat = x.segment<4>(3);
    cal.delta_signal = Complex(x[7], x[8]);
    return cal;
}

void DeformationNet::backward(const Cache& cache,
                              const Eigen::Matrix<double, kOutputDim, 1>& upstream,
                              Gradients* grads, Vec3* grad_mu, Vec3* grad_p_tx) const {
    const std::size_t nl = layers_.size();
    Eigen::VectorXd delta = upstream;  // gradient on the layer output
    for (std::size_t l = nl; l-- > 0;) {
        if (l + 1 < nl) {
            // tanh': 1 - tanh^2, with tanh cached in post.
            delta = delta.cwiseProduct(
                (1.0 - cache.post[l].array().square()).matrix());
        }
        const Eigen::VectorXd& in = (l == 0) ? cache.input : cache.post[l - 1];
        if (grads) {
            grads->layers[l].weight.noalias() += delta * in.transpose();
            grads->layers[l].bias += delta;
        }
        delta = (layers_[l].weight.transpose() * delta).eval();
    }
    if (grad_mu || grad_p_tx) {
        const int embed_len = 3 + 6 * embedding_levels_;
        // delta now holds the gradient on the concatenated embedding.
        // The embedding's leading entries are the (scaled) input itself.
        Vec3 g_diff = Vec3::Zero();
        const Vec3 scaled_diff = cache.input.segment<3>(2 * embed_len);
        positional_embedding_backward(scaled_diff, embedding_levels_,
                                      delta.tail(embed_len), &g_diff);
        if (grad_mu) {
            Vec3 g = Vec3::Zero();
            const Vec3 scaled_mu = cache.input.head<3>();
            positional_embedding_backward(scaled_mu, embedding_levels_,
                                          delta.head(embed_len), &g);
            *grad_mu += input_scale_ * (g + g_diff);
        }
        if (grad_p_tx) {
            Vec3 g = Vec3::Zero();
            const Vec3 scaled_tx = cache.input.segment<3>(embed_len);
            positional_embedding_backward(scaled_tx, embedding_levels_,
                                          delta.segment(embed_len, embed_len), &g);
            *grad_p_tx += input_scale_ * (g - g_diff);
        }
    }
}

void DeformationNet::forward_batch(const std::vector<Vec3>& mus, const Vec3& p_tx,
                                   std::vector<Calibration>* out, BatchCache* cache) const {
    const int embed_len = 3 + 6 * embedding_levels_;
    const Eigen::Index count = static_cast<Eigen::Index>(mus.size());
    Eigen::MatrixXd input(input_dim(), count);
    const Eigen::VectorXd tx_embed =
        positional_embedding(input_scale_ * p_tx, embedding_levels_);
    for (Eigen::Index b = 0; b < count; ++b) {
        input.col(b).head(embed_len) =
            positional_embedding(input_scale_ * mus[b], embedding_levels_);
        input.col(b).segment(embed_len, embed_len) = tx_embed;
        input.col(b).tail(embed_len) =
            positional_embedding(input_scale_ * (mus[b] - p_tx), embedding_levels_);
    }

    Eigen::MatrixXd x = input;
    std::vector<Eigen::MatrixXd> post;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::MatrixXd z = (layers_[l].weight * x).colwise() + layers_[l].bias;
        if (l + 1 < layers_.size()) {
            x = z.array().tanh();
        } else {
            x = std::move(z);
        }
        if (cache) post.push_back(x);
    }

    out->resize(static_cast<std::size_t>(count));
    for (Eigen::Index b = 0; b < count; ++b) {
        Calibration& cal = (*out)[static_cast<std::size_t>(b)];
        cal.delta_log_scale = x.col(b).segment<3>(0);
        cal.delta_quat = x.col(b).segment<4>(3);
        cal.delta_signal = Complex(x(7, b), x(8, b));
    }
    if (cache) {
        cache->input = std::move(input);
        cache->post = std::move(post);
    }
}

void DeformationNet::backward_batch(const BatchCache& cache, const Eigen::MatrixXd& upstream,
                                    Gradients* grads, std::vector<Vec3>* grad_mu) const {
    const std::size_t nl = layers_.size();
    Eigen::MatrixXd delta = upstream;  // gradient on the layer outputs, per column
    for (std::size_t l = nl; l-- > 0;) {
        if (l + 1 < nl) {
            delta = delta.cwiseProduct((1.0 - cache.post[l].array().square()).matrix());
        }
        const Eigen::MatrixXd& in = (l == 0) ? cache.input : cache.post[l - 1];
        if (grads) {
            grads->layers[l].weight.noalias() += delta * in.transpose();
            grads->layers[l].bias.noalias() += delta.rowwise().sum();
        }
        delta = (layers_[l].weight.transpose() * delta).eval();
    }
    if (grad_mu) {
        const int embed_len = 3 + 6 * embedding_levels_;
        grad_mu->assign(static_cast<std::size_t>(cache.input.cols()), Vec3::Zero());
        for (Eigen::Index b = 0; b < cache.input.cols(); ++b) {
            Vec3 g = Vec3::Zero();
            Vec3 g_diff = Vec3::Zero();
            const Vec3 scaled_mu = cache.input.col(b).head<3>();
            const Vec3 scaled_diff = cache.input.col(b).segment<3>(2 * embed_len);
            positional_embedding_backward(scaled_mu, embedding_levels_,
                                          delta.col(b).head(embed_len), &g);
            positional_embedding_backward(scaled_diff, embedding_levels_,
                                          delta.col(b).tail(embed_len), &g_diff);
            (*grad_mu)[static_cast<std::size_t>(b)] = input_scale_ * (g + g_diff);
        }
    }
}

DeformedParams apply_calibration(const GaussianPrimitive& p, const Calibration& cal) {
    DeformedParams d;
    d.log_scale = p.log_scale + cal.delta_log_scale;
    d.quat_raw = p.rotation + cal.delta_quat;
    if (d.quat_raw.norm() < 1e-8) {
        d.quaternion = quat_normalize(p.rotation);
        d.quat_degenerate = true;
    } else {
        d.quaternion = quat_normalize(d.quat_raw);
    }
    d.signal = p.signal + cal.delta_signal;
    return d;
}

void apply_calibration_backward(const GaussianPrimitive& p, const DeformedParams& d,
                                const Vec3& grad_log_scale, const Vec4& grad_quat_unit,
                                const Complex& grad_signal, Vec3* grad_base_log_scale,
                                Vec4* grad_base_rotation, Complex* grad_base_signal,
                                Calibration* grad_cal) {
    if (grad_base_log_scale) *grad_base_log_scale += grad_log_scale;
    if (grad_cal) grad_cal->delta_log_scale += grad_log_scale;

    Vec4 grad_raw = Vec4::Zero();
    if (d.quat_degenerate) {
        grad_raw = quat_normalize_backward(p.rotation, grad_quat_unit);
        if (grad_base_rotation) *grad_base_rotation += grad_raw;
        // Delta receives nothing in the degenerate fallback.
    } else {
        grad_raw = quat_normalize_backward(d.quat_raw, grad_quat_unit);
        if (grad_base_rotation) *grad_base_rotation += grad_raw;
        if (grad_cal) grad_cal->delta_quat += grad_raw;
    }

    if (grad_base_signal) *grad_base_signal += grad_signal;
    if (grad_cal) grad_cal->delta_signal += grad_signal;
}

}  // namespace wrf
