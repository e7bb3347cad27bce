#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wrf/checkpoint.hpp"
#include "wrf/rng.hpp"

using namespace wrf;
namespace fs = std::filesystem;

namespace {

Checkpoint sample_checkpoint(std::size_t n, bool moments) {
    Checkpoint c;
    Rng rng(n + (moments ? 1 : 0));
    c.scene.receiver_origin = Vec3(0.5, -0.25, 0.125);
    for (std::size_t i = 0; i < n; ++i) {
        GaussianPrimitive p;
        p.mu = Vec3(rng.normal(), rng.normal(), rng.normal());
        p.log_scale = Vec3(rng.normal(), rng.normal(), rng.normal());
        p.rotation = quat_normalize(Vec4(1.0, rng.normal(), rng.normal(), rng.normal()));
        p.opacity_logit = rng.normal();
        p.signal = Complex(rng.normal(), rng.normal());
        p.mask_score = rng.normal();
        c.scene.primitives.push_back(p);
    }
    c.net = DeformationNet(4, 8, 2);
    c.net.randomize_all(7, 0.5);
    c.net.set_input_scale(0.25);
    c.iteration = 123;
    c.config_hash = 0xabcdef0123456789ull;
    if (moments) {
        c.has_moments = true;
        c.adam_step = 77;
        c.moments_m = SceneGradients::zeros(n, c.net);
        c.moments_v = SceneGradients::zeros(n, c.net);
        for (std::size_t i = 0; i < n; ++i) {
            c.moments_m.opacity_logit[i] = rng.normal();
            c.moments_v.opacity_logit[i] = std::abs(rng.normal());
            c.moments_m.mu[i] = Vec3(rng.normal(), rng.normal(), rng.normal());
        }
        c.moments_m.net.layers[0].weight.setConstant(0.125);
    }
    return c;
}

std::string to_bytes(const Checkpoint& c) {
    std::ostringstream out(std::ios::binary);
    save_checkpoint(c, out);
    return out.str();
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("serialize/deserialize/serialize is byte-identical") {
    for (bool moments : {false, true}) {
        const Checkpoint c = sample_checkpoint(15, moments);
        const std::string bytes = to_bytes(c);
        std::istringstream in(bytes, std::ios::binary);
        const Checkpoint back = load_checkpoint(in);
        CHECK(to_bytes(back) == bytes);
        CHECK(back.iteration == c.iteration);
        CHECK(back.config_hash == c.config_hash);
        CHECK(back.has_moments == moments);
        REQUIRE(back.scene.count() == c.scene.count());
        CHECK(back.net.input_scale() == c.net.input_scale());
        if (moments) {
            CHECK(back.adam_step == 77);
            CHECK(back.moments_m.net.layers[0].weight(0, 0) == 0.125);
        }
    }
}

TEST_CASE("values survive within f32 precision") {
    const Checkpoint c = sample_checkpoint(8, false);
    std::istringstream in(to_bytes(c), std::ios::binary);
    const Checkpoint back = load_checkpoint(in);
    for (std::size_t i = 0; i < c.scene.count(); ++i) {
        const auto& a = c.scene.primitives[i];
        const auto& b = back.scene.primitives[i];
        CHECK((a.mu - b.mu).norm() < 1e-6 * (1.0 + a.mu.norm()));
        CHECK(std::abs(a.opacity_logit - b.opacity_logit) < 1e-6);
        CHECK(std::abs(a.signal - b.signal) < 1e-6);
    }
    // receiver pose is stored exactly
    CHECK(back.scene.receiver_origin == c.scene.receiver_origin);
}

TEST_CASE("file round trip") {
    const auto path = (fs::temp_directory_path() / "wrf_ckpt_test.bin").string();
    const Checkpoint c = sample_checkpoint(5, true);
    save_checkpoint(c, path);
    const Checkpoint back = load_checkpoint(path);
    CHECK(to_bytes(back) == to_bytes(c));
    fs::remove(path);
    CHECK_THROWS(load_checkpoint(path));
}

TEST_CASE("size scales with primitive count once the net section is excluded") {
    const Checkpoint a = sample_checkpoint(100, false);
    const Checkpoint b = sample_checkpoint(300, false);
    const double bytes_a = static_cast<double>(checkpoint_bytes_excluding_net(a));
    const double bytes_b = static_cast<double>(checkpoint_bytes_excluding_net(b));
    const double ratio = bytes_b / bytes_a;
    CHECK(ratio > 3.0 * 0.8);
    CHECK(ratio < 3.0 * 1.2);
    CHECK(checkpoint_bytes(a) > checkpoint_bytes_excluding_net(a));
}

TEST_CASE("corrupt data is rejected") {
    std::istringstream bad("XXXXGARBAGE", std::ios::binary);
    CHECK_THROWS(load_checkpoint(bad));
    const Checkpoint c = sample_checkpoint(3, false);
    std::string bytes = to_bytes(c);
    bytes.resize(bytes.size() / 2);  // truncate
    std::istringstream in(bytes, std::ios::binary);
    CHECK_THROWS(load_checkpoint(in));
}

}  // TEST_SUITE
