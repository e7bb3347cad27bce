#pragma once

#include <vector>

#include "wrf/scene.hpp"
#include "wrf/spectrum.hpp"

namespace wrf {

struct LossBreakdown {
    double l1 = 0.0;
    double d_ssim = 0.0;
    double render_loss = 0.0;
    double mask_reg = 0.0;
    double total = 0.0;
};

// Mean absolute difference. When grad_a is non-null it receives
// sign(a-b)/pixel_count per pixel (added in).
double l1_loss(const SpectrumImage& a, const SpectrumImage& b,
               SpectrumImage* grad_a = nullptr, double weight = 1.0);

// Windowed SSIM, 11x11 Gaussian window sigma=1.5, C1=0.01^2, C2=0.03^2 on
// unit dynamic range, symmetric border padding, mean over all pixels.
// grad_a accumulates weight * d(SSIM)/da.
double ssim(const SpectrumImage& a, const SpectrumImage& b,
            SpectrumImage* grad_a = nullptr, double weight = 1.0);

// (1-w) L1 + w (1 - SSIM); gradient of the combination accumulates in grad_a.
LossBreakdown render_loss(const SpectrumImage& a, const SpectrumImage& b, double w,
                          SpectrumImage* grad_a = nullptr);

// Adds lambda * mask_regularizer to an existing render-loss breakdown.
LossBreakdown total_loss(const LossBreakdown& render, const std::vector<double>& mask_scores,
                         double lambda);

// Symmetric mean squared nearest-neighbor distance (Chamfer).
double chamfer_distance(const std::vector<Vec3>& centers, const PointCloud& cloud);

// Brute-force reference, O(N * |P|); the default uses a uniform grid.
double chamfer_distance_bruteforce(const std::vector<Vec3>& centers, const PointCloud& cloud);

}  // namespace wrf
