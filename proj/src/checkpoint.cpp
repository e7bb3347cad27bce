#include "wrf/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wrf {

namespace {

constexpr char kMagic[4] = {'W', 'R', 'F', 'C'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

void write_f32(std::ostream& out, double v) { write_raw(out, static_cast<float>(v)); }
double read_f32(std::istream& in) { return read_raw<float>(in); }

// Per-primitive arrays shared by the parameter and moment sections.
struct PrimArrays {
    const std::vector<Vec3>* mu;
    const std::vector<Vec3>* log_scale;
    const std::vector<Vec4>* rotation;
    const std::vector<double>* opacity;
    const std::vector<Complex>* signal;
    const std::vector<double>* mask;
};

void write_prim_arrays(std::ostream& out, const PrimArrays& a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) write_f32(out, (*a.mu)[i][k]);
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) write_f32(out, (*a.log_scale)[i][k]);
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 4; ++k) write_f32(out, (*a.rotation)[i][k]);
    for (std::size_t i = 0; i < n; ++i) write_f32(out, (*a.opacity)[i]);
    for (std::size_t i = 0; i < n; ++i) {
        write_f32(out, (*a.signal)[i].real());
        write_f32(out, (*a.signal)[i].imag());
    }
    for (std::size_t i = 0; i < n; ++i) write_f32(out, (*a.mask)[i]);
}

struct PrimArraysMut {
    std::vector<Vec3>* mu;
    std::vector<Vec3>* log_scale;
    std::vector<Vec4>* rotation;
    std::vector<double>* opacity;
    std::vector<Complex>* signal;
    std::vector<double>* mask;
};

void read_prim_arrays(std::istream& in, const PrimArraysMut& a, std::size_t n) {
    a.mu->resize(n);
    a.log_scale->resize(n);
    a.rotation->resize(n);
    a.opacity->resize(n);
    a.signal->resize(n);
    a.mask->resize(n);
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) (*a.mu)[i][k] = read_f32(in);
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) (*a.log_scale)[i][k] = read_f32(in);
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 4; ++k) (*a.rotation)[i][k] = read_f32(in);
    for (std::size_t i = 0; i < n; ++i) (*a.opacity)[i] = read_f32(in);
    for (std::size_t i = 0; i < n; ++i) {
        const double re = read_f32(in);
        const double im = read_f32(in);
        (*a.signal)[i] = Complex(re, im);
    }
    for (std::size_t i = 0; i < n; ++i) (*a.mask)[i] = read_f32(in);
}

void write_net_layers(std::ostream& out, const std::vector<DeformationNet::Layer>& layers) {
    write_raw(out, static_cast<std::uint32_t>(layers.size()));
    for (const auto& l : layers) {
        write_raw(out, static_cast<std::uint32_t>(l.weight.rows()));
        write_raw(out, static_cast<std::uint32_t>(l.weight.cols()));
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) write_f32(out, l.weight(r, c));
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) write_f32(out, l.bias[r]);
    }
}

void read_net_layers(std::istream& in, std::vector<DeformationNet::Layer>* layers) {
    const auto count = read_raw<std::uint32_t>(in);
    if (layers->size() != count) {
        throw std::runtime_error("checkpoint: deformation-net layer count mismatch");
    }
    for (auto& l : *layers) {
        const auto rows = read_raw<std::uint32_t>(in);
        const auto cols = read_raw<std::uint32_t>(in);
        if (rows != static_cast<std::uint32_t>(l.weight.rows()) ||
            cols != static_cast<std::uint32_t>(l.weight.cols())) {
            throw std::runtime_error("checkpoint: deformation-net layer shape mismatch");
        }
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = read_f32(in);
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = read_f32(in);
    }
}

std::size_t net_section_bytes(const DeformationNet& net) {
    std::size_t bytes = 3 * sizeof(std::int32_t) + sizeof(double);  // architecture header
    bytes += sizeof(std::uint32_t);                                 // layer count
    for (const auto& l : net.layers()) {
        bytes += 2 * sizeof(std::uint32_t);
        bytes += sizeof(float) * static_cast<std::size_t>(l.weight.size() + l.bias.size());
    }
    return bytes;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
    const std::size_t n = ckpt.scene.count();
    out.write(kMagic, 4);
    write_raw(out, kVersion);
    write_raw(out, ckpt.config_hash);
    write_raw(out, static_cast<std::int32_t>(ckpt.iteration));
    write_raw(out, static_cast<std::uint32_t>(n));
    for (int k = 0; k < 3; ++k) write_raw(out, ckpt.scene.receiver_origin[k]);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) write_raw(out, ckpt.scene.receiver_orientation(r, c));

    std::vector<Vec3> mu(n), ls(n);
    std::vector<Vec4> rot(n);
    std::vector<double> op(n), mask(n);
    std::vector<Complex> sig(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = ckpt.scene.primitives[i];
        mu[i] = p.mu;
        ls[i] = p.log_scale;
        rot[i] = p.rotation;
        op[i] = p.opacity_logit;
        sig[i] = p.signal;
        mask[i] = p.mask_score;
    }
    write_prim_arrays(out, {&mu, &ls, &rot, &op, &sig, &mask}, n);

    write_raw(out, static_cast<std::int32_t>(ckpt.net.embedding_levels()));
    const auto& layers = ckpt.net.layers();
    const std::int32_t hidden_layers = static_cast<std::int32_t>(layers.size()) - 1;
    const std::int32_t hidden_width =
        hidden_layers > 0 ? static_cast<std::int32_t>(layers[0].weight.rows()) : 0;
    write_raw(out, hidden_width);
    write_raw(out, hidden_layers);
    write_raw(out, ckpt.net.input_scale());
    write_net_layers(out, layers);

    write_raw(out, static_cast<std::uint8_t>(ckpt.has_moments ? 1 : 0));
    if (ckpt.has_moments) {
        write_raw(out, static_cast<std::int32_t>(ckpt.adam_step));
        for (const SceneGradients* g : {&ckpt.moments_m, &ckpt.moments_v}) {
            write_prim_arrays(
                out, {&g->mu, &g->log_scale, &g->rotation, &g->opacity_logit, &g->signal,
                      &g->mask_score},
                n);
            write_net_layers(out, g->net.layers);
        }
    }
    if (!out) {
        throw std::runtime_error("I/O failure while writing checkpoint");
    }
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write checkpoint: " + path);
    }
    save_checkpoint(ckpt, out);
    if (!out) {
        throw std::runtime_error("I/O failure while writing checkpoint: " + path);
    }
}

Checkpoint load_checkpoint(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("bad magic in checkpoint");
    }
    if (read_raw<std::uint16_t>(in) != kVersion) {
        throw std::runtime_error("unsupported checkpoint version");
    }
    Checkpoint ckpt;
    ckpt.config_hash = read_raw<std::uint64_t>(in);
    ckpt.iteration = read_raw<std::int32_t>(in);
    const std::size_t n = read_raw<std::uint32_t>(in);
    for (int k = 0; k < 3; ++k) ckpt.scene.receiver_origin[k] = read_raw<double>(in);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) ckpt.scene.receiver_orientation(r, c) = read_raw<double>(in);

    std::vector<Vec3> mu, ls;
    std::vector<Vec4> rot;
    std::vector<double> op, mask;
    std::vector<Complex> sig;
    read_prim_arrays(in, {&mu, &ls, &rot, &op, &sig, &mask}, n);
    ckpt.scene.primitives.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& p = ckpt.scene.primitives[i];
        p.mu = mu[i];
        p.log_scale = ls[i];
        p.rotation = rot[i];
        p.opacity_logit = op[i];
        p.signal = sig[i];
        p.mask_score = mask[i];
    }

    const auto levels = read_raw<std::int32_t>(in);
    const auto hidden_width = read_raw<std::int32_t>(in);
    const auto hidden_layers = read_raw<std::int32_t>(in);
    const double input_scale = read_raw<double>(in);
    ckpt.net = DeformationNet(levels, hidden_width, hidden_layers);
    ckpt.net.set_input_scale(input_scale);
    read_net_layers(in, &ckpt.net.layers());

    ckpt.has_moments = read_raw<std::uint8_t>(in) != 0;
    if (ckpt.has_moments) {
        ckpt.adam_step = read_raw<std::int32_t>(in);
        ckpt.moments_m = SceneGradients::zeros(n, ckpt.net);
        ckpt.moments_v = SceneGradients::zeros(n, ckpt.net);
        for (SceneGradients* g : {&ckpt.moments_m, &ckpt.moments_v}) {
            read_prim_arrays(in,
                             {&g->mu, &g->log_scale, &g->rotation, &g->opacity_logit,
                              &g->signal, &g->mask_score},
                             n);
            read_net_layers(in, &g->net.layers);
        }
    }
    if (!in) {
        throw std::runtime_error("truncated checkpoint");
    }
    return ckpt;
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open checkpoint: " + path);
    }
    return load_checkpoint(in);
}

std::size_t checkpoint_bytes(const Checkpoint& ckpt) {
    std::ostringstream buf(std::ios::binary);
    save_checkpoint(ckpt, buf);
    return buf.str().size();
}

std::size_t checkpoint_bytes_excluding_net(const Checkpoint& ckpt) {
    std::size_t net_bytes = net_section_bytes(ckpt.net);
    if (ckpt.has_moments) net_bytes += 2 * (net_section_bytes(ckpt.net) - 3 * sizeof(std::int32_t) - sizeof(double));
    return checkpoint_bytes(ckpt) - net_bytes;
}

}  // namespace wrf
