#include "wrf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "wrf/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wrf {

namespace {

std::string sample_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%05u.spect", static_cast<unsigned>(index));
    return buf;
}

double bounds_input_scale(const Vec3& lo, const Vec3& hi) {
    double extent = 0.0;
    for (int k = 0; k < 3; ++k) {
        extent = std::max(extent, std::max(std::abs(lo[k]), std::abs(hi[k])));
    }
    return extent > 0.0 ? 1.0 / extent : 1.0;
}

}  // namespace

std::vector<Vec3> sample_tx_positions(const SyntheticSceneSpec& spec, std::size_t count,
                                      std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec3> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Vec3 p;
        for (int k = 0; k < 3; ++k) {
            p[k] = rng.uniform(spec.bounds_min[k], spec.bounds_max[k]);
        }
        out.push_back(p);
    }
    return out;
}

void generate_dataset(const SyntheticSceneSpec& spec, const std::vector<Vec3>& tx_positions,
                      double split_ratio, const std::string& dir) {
    if (tx_positions.empty()) {
        throw std::invalid_argument("generate_dataset: no transmitter positions");
    }
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
        throw std::invalid_argument("generate_dataset: split ratio must be in (0, 1)");
    }
    spec.validate();

    std::error_code ec;
    fs::create_directories(fs::path(dir) / "train", ec);
    fs::create_directories(fs::path(dir) / "test", ec);
    if (ec) {
        throw std::runtime_error("generate_dataset: cannot create " + dir + ": " +
                                 ec.message());
    }

    const std::size_t n = tx_positions.size();
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    Rng rng(spec.seed);
    rng.shuffle(order);
    const std::size_t n_train = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::llround(split_ratio * static_cast<double>(n))));

    std::vector<SpectrumImage> spectra;
    spectra.reserve(n);
    std::vector<int> empty;
    double spectrum_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        OracleResult res = synth_spectrum(spec, tx_positions[i]);
        if (res.path_count == 0) empty.push_back(static_cast<int>(i));
        spectrum_max = std::max(spectrum_max, res.spectrum.max_value());
        spectra.push_back(std::move(res.spectrum));
    }

    for (std::size_t j = 0; j < n; ++j) {
        const std::uint32_t src = order[j];
        const bool is_train = j < n_train;
        const fs::path sub = is_train ? "train" : "test";
        const std::size_t local = is_train ? j : j - n_train;
        save_spect(spectra[src], tx_positions[src],
                   (fs::path(dir) / sub / sample_name(local)).string());
    }

    save_point_cloud(sample_scene_cloud(spec), (fs::path(dir) / "cloud.txt").string());

    json meta;
    meta["format"] = 1;
    meta["seed"] = spec.seed;
    meta["split_ratio"] = split_ratio;
    meta["count_train"] = n_train;
    meta["count_test"] = n - n_train;
    meta["array"] = {{"k", spec.array.k},
                     {"spacing", spec.array.spacing},
                     {"wavelength", spec.array.wavelength}};
    meta["receiver_origin"] = {spec.receiver_origin[0], spec.receiver_origin[1],
                               spec.receiver_origin[2]};
    json orient = json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) orient.push_back(spec.receiver_orientation(r, c));
    meta["receiver_orientation"] = orient;
    meta["bounds_min"] = {spec.bounds_min[0], spec.bounds_min[1], spec.bounds_min[2]};
    meta["bounds_max"] = {spec.bounds_max[0], spec.bounds_max[1], spec.bounds_max[2]};
    meta["spectrum_max"] = spectrum_max;
    meta["tx_amplitude"] = spec.tx_amplitude;
    meta["tx_phase"] = spec.tx_phase;
    meta["max_paths"] = spec.max_paths;
    meta["cloud_points"] = spec.cloud_points;
    meta["empty_samples"] = empty;

    std::ofstream out(fs::path(dir) / "meta.json");
    if (!out) {
        throw std::runtime_error("generate_dataset: cannot write manifest in " + dir);
    }
    out << meta.dump(2) << '\n';
}

Dataset load_dataset(const std::string& dir, bool normalize) {
    std::ifstream in(fs::path(dir) / "meta.json");
    if (!in) {
        throw std::runtime_error("load_dataset: missing manifest in " + dir);
    }
    json meta;
    try {
        in >> meta;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_dataset: bad manifest in " + dir + ": " + e.what());
    }

    Dataset ds;
    ds.seed = meta.at("seed").get<std::uint64_t>();
    ds.array.k = meta.at("array").at("k").get<int>();
    ds.array.spacing = meta.at("array").at("spacing").get<double>();
    ds.array.wavelength = meta.at("array").at("wavelength").get<double>();
    for (int k = 0; k < 3; ++k) {
        ds.receiver_origin[k] = meta.at("receiver_origin").at(k).get<double>();
        ds.bounds_min[k] = meta.at("bounds_min").at(k).get<double>();
        ds.bounds_max[k] = meta.at("bounds_max").at(k).get<double>();
    }
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            ds.receiver_orientation(r, c) = meta.at("receiver_orientation").at(3 * r + c).get<double>();
    ds.spectrum_max = meta.at("spectrum_max").get<double>();
    ds.input_scale = bounds_input_scale(ds.bounds_min, ds.bounds_max);
    if (meta.contains("empty_samples")) {
        ds.empty_samples = meta["empty_samples"].get<std::vector<int>>();
    }

    const double scale =
        (normalize && ds.spectrum_max > 0.0) ? 1.0 / ds.spectrum_max : 1.0;
    auto load_split = [&](const char* sub, std::size_t count, std::vector<Sample>* out) {
        out->reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            Sample s;
            s.spectrum = load_spect((fs::path(dir) / sub / sample_name(i)).string(), &s.tx);
            if (scale != 1.0) {
                for (double& v : s.spectrum.data()) v *= scale;
            }
            out->push_back(std::move(s));
        }
    };
    load_split("train", meta.at("count_train").get<std::size_t>(), &ds.train);
    load_split("test", meta.at("count_test").get<std::size_t>(), &ds.test);

    const fs::path cloud_path = fs::path(dir) / "cloud.txt";
    if (fs::exists(cloud_path)) {
        ds.cloud = load_point_cloud(cloud_path.string());
        ds.has_cloud = true;
    }
    return ds;
}

}  // namespace wrf
