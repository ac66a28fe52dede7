#pragma once

#include <filesystem>
#include <optional>

#include "prism/forward.hpp"
#include "prism/grid.hpp"
#include "prism/rng.hpp"

namespace prism {

/// Sub-pixel motion path the kernel rasterizer follows; exposed so the
/// trajectory statistics can be tested directly.
struct MotionTrajectory {
    std::vector<double> xs;
    std::vector<double> ys;
    double path_length() const;
    /// L2 norm of the second differences (turning energy of the path).
    double second_difference_norm() const;
};

/// Correlated-random-walk path: velocities follow a Gaussian AR(1) process
/// whose innovation strength grows with `intensity` (0 = near-straight,
/// 1 = wild), scaled to fit an s x s support.
MotionTrajectory generate_motion_trajectory(int support, double intensity, RngState& rng);

/// Rasterizes a trajectory with linear interpolation onto the s x s
/// support, smooths with a sigma = 0.5 px Gaussian, embeds centered at the
/// origin of the full grid, and projects to a normalized kernel.
/// Support must be odd, >= 3, and <= min(H, W)/2 (BadSupport otherwise).
Kernel generate_motion_kernel(int support, double intensity, int height, int width,
                              RngState& rng);

/// Stationary Gaussian field with power spectrum ~ (1 + |f|)^(-slope),
/// rescaled to [0, 1]. Slope must lie in [0, 4].
Grid generate_texture_image(int height, int width, double spectral_slope, RngState& rng);

/// A complete synthetic problem: ground truth, kernel, and measurement,
/// with provenance sufficient to regenerate y bit-exactly.
struct ProblemInstance {
    Grid truth_x;
    Kernel truth_kernel;
    Grid y;
    double noise_sigma = 0.0;
    uint64_t seed = 0;
    double image_slope = 2.0;
    double kernel_intensity = 0.5;
};

struct InstanceSpec {
    int height = 64;
    int width = 64;
    int kernel_support = 31;
    double kernel_intensity = 0.5;
    double noise_sigma = 0.05;
    double image_slope = 2.0;
    uint64_t seed = 0;
    std::optional<Grid> image; // user-supplied truth instead of a texture
};

ProblemInstance make_instance(const InstanceSpec& spec);

/// Directory layout: manifest + truth.pgrd, kernel.pgrd, y.pgrd.
void save_instance(const std::filesystem::path& dir, const ProblemInstance& instance);
ProblemInstance load_instance(const std::filesystem::path& dir);

} // namespace prism
