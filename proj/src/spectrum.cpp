#include "wrf/spectrum.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace wrf {

namespace {

constexpr char kMagic[4] = {'W', 'R', 'F', 'S'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::ifstream& in, T* v) {
    in.read(reinterpret_cast<char*>(v), sizeof(T));
}

}  // namespace

double SpectrumImage::max_value() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, v);
    return m;
}

SpectrumImage::Peak SpectrumImage::argmax() const {
    Peak p;
    p.value = -1.0;
    for (int az = 0; az < width_; ++az) {
        for (int el = 0; el < height_; ++el) {
            if (at(az, el) > p.value) {
                p = Peak{az, el, at(az, el)};
            }
        }
    }
    return p;
}

void save_spect(const SpectrumImage& img, const Vec3& tx, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write spectrum file: " + path);
    }
    out.write(kMagic, 4);
    write_raw(out, kVersion);
    const std::uint16_t w = static_cast<std::uint16_t>(img.width());
    const std::uint16_t h = static_cast<std::uint16_t>(img.height());
    write_raw(out, w);
    write_raw(out, h);
    for (int k = 0; k < 3; ++k) {
        write_raw(out, static_cast<float>(tx[k]));
    }
    for (double v : img.data()) {
        write_raw(out, static_cast<float>(v));
    }
    if (!out) {
        throw std::runtime_error("I/O failure while writing " + path);
    }
}

SpectrumImage load_spect(const std::string& path, Vec3* tx) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open spectrum file: " + path);
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("bad magic in spectrum file: " + path);
    }
    std::uint16_t version = 0, w = 0, h = 0;
    read_raw(in, &version);
    if (version != kVersion) {
        throw std::runtime_error("unsupported spectrum file version in " + path);
    }
    read_raw(in, &w);
    read_raw(in, &h);
    Vec3 pos;
    for (int k = 0; k < 3; ++k) {
        float f = 0;
        read_raw(in, &f);
        pos[k] = f;
    }
    if (tx) *tx = pos;
    SpectrumImage img(w, h);
    for (double& v : img.data()) {
        float f = 0;
        read_raw(in, &f);
        v = f;
    }
    if (!in) {
        throw std::runtime_error("truncated spectrum file: " + path);
    }
    return img;
}

void save_pgm(const SpectrumImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write pgm file: " + path);
    }
    double lo = img.data().empty() ? 0.0 : img.data()[0];
    double hi = lo;
    for (double v : img.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = (hi > lo) ? (hi - lo) : 1.0;
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    for (int el = img.height() - 1; el >= 0; --el) {
        for (int az = 0; az < img.width(); ++az) {
            const double v = (img.at(az, el) - lo) / span;
            out.put(static_cast<char>(static_cast<unsigned char>(v * 255.0 + 0.5)));
        }
    }
}

}  // namespace wrf
