#pragma once

#include <span>

#include "prism/forward.hpp"
#include "prism/grid.hpp"

namespace prism {

/// 10*log10(peak^2 / MSE) in dB; +inf sentinel when the grids are equal.
double psnr(const Grid& a, const Grid& b, double peak);

/// Mean local structural similarity with the standard 11x11 Gaussian window
/// (sigma 1.5) and constants C1=(0.01*peak)^2, C2=(0.03*peak)^2, averaged
/// over windows fully inside the image. Grids below 11x11 raise TooSmall.
double ssim(const Grid& a, const Grid& b, double peak);

/// Root mean squared difference over the full kernel grid.
double kernel_rmse(const Kernel& k1, const Kernel& k2);

/// Per-pixel posterior summary for uncertainty quantification.
struct PosteriorStats {
    Grid mean;
    Grid sd;           // population SD, floored at sd_floor
    double nll;        // nats per pixel, Gaussian per-pixel model
    double coverage3sd;
    Grid outlier_mask; // 1 where |truth - mean| > 3 SD
    double sd_floor;
};

inline constexpr double kDefaultSdFloor = 1e-6;

/// Streaming per-pixel moment accumulator, so large sample counts never
/// need to be held in memory at once.
class StatsAccumulator {
public:
    StatsAccumulator(int height, int width);
    void add(const Grid& sample);
    int count() const { return count_; }
    PosteriorStats finalize(const Grid& truth, double sd_floor = kDefaultSdFloor) const;

private:
    int count_ = 0;
    Grid mean_;
    Grid m2_;
};

/// Needs >= 2 samples (InsufficientSamples otherwise).
PosteriorStats posterior_stats(std::span<const Grid> samples, const Grid& truth,
                               double sd_floor = kDefaultSdFloor);

/// NLL/coverage recomputed from persisted mean/SD maps (the metrics command
/// consumes these rather than raw samples).
double nll_from_maps(const Grid& mean, const Grid& sd, const Grid& truth);
double coverage_from_maps(const Grid& mean, const Grid& sd, const Grid& truth);

/// Per-pixel |truth - mean| / SD.
Grid error_to_sd_map(const PosteriorStats& stats, const Grid& truth);

} // namespace prism
