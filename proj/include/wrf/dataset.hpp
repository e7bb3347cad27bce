#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wrf/oracle.hpp"
#include "wrf/scene.hpp"
#include "wrf/spectrum.hpp"

namespace wrf {

struct Sample {
    Vec3 tx = Vec3::Zero();
    SpectrumImage spectrum;
};

// In-memory dataset. Spectra are divided by the manifest's spectrum_max on
// load (unless normalization is disabled) so targets live in [0, ~1].
struct Dataset {
    std::vector<Sample> train;
    std::vector<Sample> test;
    ArraySpec array;
    Vec3 receiver_origin = Vec3::Zero();
    Mat3 receiver_orientation = Mat3::Identity();
    Vec3 bounds_min = Vec3::Zero();
    Vec3 bounds_max = Vec3::Zero();
    double spectrum_max = 1.0;
    double input_scale = 1.0;  // maps positions into roughly [-1, 1] for the net
    std::uint64_t seed = 0;
    PointCloud cloud;
    bool has_cloud = false;
    std::vector<int> empty_samples;  // indices (over all poses) with no path
};

// Transmitter positions uniform in the scene bounds.
std::vector<Vec3> sample_tx_positions(const SyntheticSceneSpec& spec, std::size_t count,
                                      std::uint64_t seed);

// Writes meta.json, train/NNNNN.spect, test/NNNNN.spect and cloud.txt under
// dir. Split is a seeded shuffle; spectra are stored unnormalized with the
// global maximum recorded in the manifest.
void generate_dataset(const SyntheticSceneSpec& spec, const std::vector<Vec3>& tx_positions,
                      double split_ratio, const std::string& dir);

Dataset load_dataset(const std::string& dir, bool normalize = true);

}  // namespace wrf
