#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wrf/geometry.hpp"

namespace wrf {

// Grid of nonnegative power values over (azimuth, elevation). Row index is
// the azimuth sample, column index the elevation sample. The canonical
// dataset resolution is 360x90 at 1 degree; smaller grids are used by tests.
class SpectrumImage {
public:
    static constexpr int kFullWidth = 360;  // azimuth samples
    static constexpr int kFullHeight = 90;  // elevation samples

    SpectrumImage() : SpectrumImage(kFullWidth, kFullHeight) {}
    SpectrumImage(int width, int height)
        : width_(width), height_(height), values_(static_cast<std::size_t>(width) * height, 0.0) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return values_.size(); }

    double& at(int az, int el) { return values_[static_cast<std::size_t>(az) * height_ + el]; }
    double at(int az, int el) const { return values_[static_cast<std::size_t>(az) * height_ + el]; }

    double azimuth_deg(int az) const { return az * 360.0 / width_; }
    double elevation_deg(int el) const { return el * 90.0 / height_; }

    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

    double max_value() const;

    struct Peak {
        int az = 0;
        int el = 0;
        double value = 0.0;
    };
    Peak argmax() const;

private:
    int width_;
    int height_;
    std::vector<double> values_;
};

// Binary .spect file: magic "WRFS", version u16, tx position (3 x f32),
// then width*height f32 values row-major (azimuth-major).
void save_spect(const SpectrumImage& img, const Vec3& tx, const std::string& path);
SpectrumImage load_spect(const std::string& path, Vec3* tx = nullptr);

// 8-bit portable graymap, min-max normalized per image, elevation as rows so
// the image is 360 wide and 90 tall.
void save_pgm(const SpectrumImage& img, const std::string& path);

}  // namespace wrf
