#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "wrf/deform.hpp"
#include "wrf/optim.hpp"
#include "wrf/scene.hpp"

namespace wrf {

// Serialized training state. Bulk arrays are stored as little-endian f32;
// optimizer moments are an optional trailing section so inference checkpoints
// stay small.
struct Checkpoint {
    Scene scene;
    DeformationNet net;
    int iteration = 0;
    std::uint64_t config_hash = 0;

    bool has_moments = false;
    SceneGradients moments_m;
    SceneGradients moments_v;
    int adam_step = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
void save_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint load_checkpoint(const std::string& path);
Checkpoint load_checkpoint(std::istream& in);

// Byte size of the serialized form; with and without the fixed-size
// deformation-net section (the latter is what scales with N).
std::size_t checkpoint_bytes(const Checkpoint& ckpt);
std::size_t checkpoint_bytes_excluding_net(const Checkpoint& ckpt);

}  // namespace wrf
