#include "prism/datagen.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "prism/errors.hpp"
#include "prism/fft.hpp"
#include "prism/grid_io.hpp"
#include "prism/manifest.hpp"
#include "prism/prior.hpp"

namespace prism {

namespace fs = std::filesystem;

double MotionTrajectory::path_length() const {
    double total = 0.0;
    for (size_t i = 1; i < xs.size(); ++i) {
        double dx = xs[i] - xs[i - 1];
        double dy = ys[i] - ys[i - 1];
        total += std::sqrt(dx * dx + dy * dy);
    }
    return total;
}

double MotionTrajectory::second_difference_norm() const {
    double acc = 0.0;
    for (size_t i = 1; i + 1 < xs.size(); ++i) {
        double ddx = xs[i + 1] - 2.0 * xs[i] + xs[i - 1];
        double ddy = ys[i + 1] - 2.0 * ys[i] + ys[i - 1];
        acc += ddx * ddx + ddy * ddy;
    }
    return std::sqrt(acc);
}

namespace {

void require_intensity(double intensity) {
    if (!std::isfinite(intensity) || intensity < 0.0 || intensity > 1.0) {
        std::ostringstream msg;
        msg << "motion intensity must lie in [0, 1], got " << intensity;
        throw ConfigError(msg.str());
    }
}

void require_support(int support, int height, int width) {
    int limit = std::min(height, width) / 2;
    if (support < 3 || support % 2 == 0 || support > limit) {
        std::ostringstream msg;
        msg << "kernel support must be odd and within [3, " << limit << "], got " << support;
        throw BadSupport(msg.str());
    }
}

} // namespace

MotionTrajectory generate_motion_trajectory(int support, double intensity, RngState& rng) {
    if (support < 3) throw BadSupport("trajectory support must be >= 3");
    require_intensity(intensity);

    const int steps = 6 * support;
    // Velocities follow a Gaussian AR(1) process; intensity 0 freezes the
    // innovations so the path is exactly straight.
    const double a = std::exp(-3.0 * intensity);
    const double innovation_sd = intensity * std::sqrt(std::max(0.0, 1.0 - a * a));

    double angle = 2.0 * std::numbers::pi * rng.uniform();
    double vx = std::cos(angle), vy = std::sin(angle);

    MotionTrajectory traj;
    traj.xs.reserve(steps + 1);
    traj.ys.reserve(steps + 1);
    double x = 0.0, y = 0.0;
    traj.xs.push_back(x);
    traj.ys.push_back(y);
    for (int t = 0; t < steps; ++t) {
        double gx, gy;
        rng.normal_pair(gx, gy);
        vx = a * vx + innovation_sd * gx;
        vy = a * vy + innovation_sd * gy;
        x += vx;
        y += vy;
        traj.xs.push_back(x);
        traj.ys.push_back(y);
    }

    // Uniformly rescale and center into the support box, leaving a margin
    // for rasterization splat and smoothing. Uniform (not per-axis) scaling
    // keeps straight paths straight.
    double min_x = traj.xs[0], max_x = traj.xs[0], min_y = traj.ys[0], max_y = traj.ys[0];
    for (size_t i = 1; i < traj.xs.size(); ++i) {
        min_x = std::min(min_x, traj.xs[i]);
        max_x = std::max(max_x, traj.xs[i]);
        min_y = std::min(min_y, traj.ys[i]);
        max_y = std::max(max_y, traj.ys[i]);
    }
    const double margin = 1.5;
    const double usable = support - 1 - 2.0 * margin;
    const double extent = std::max(max_x - min_x, max_y - min_y);
    const double center = (support - 1) / 2.0;
    if (extent < 1e-12 || usable <= 0.0) {
        for (size_t i = 0; i < traj.xs.size(); ++i) {
            traj.xs[i] = center;
            traj.ys[i] = center;
        }
        return traj;
    }
    const double scale = usable / extent;
    const double cx = 0.5 * (min_x + max_x), cy = 0.5 * (min_y + max_y);
    for (size_t i = 0; i < traj.xs.size(); ++i) {
        traj.xs[i] = center + scale * (traj.xs[i] - cx);
        traj.ys[i] = center + scale * (traj.ys[i] - cy);
    }
    return traj;
}

namespace {

void splat_bilinear(Grid& patch, double x, double y, double mass) {
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double fx = x - x0, fy = y - y0;
    for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
            int px = x0 + dx, py = y0 + dy;
            if (px < 0 || py < 0 || px >= patch.width() || py >= patch.height()) continue;
            double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
            patch(py, px) += w * mass;
        }
    }
}

} // namespace

Kernel generate_motion_kernel(int support, double intensity, int height, int width,
                              RngState& rng) {
    require_support(support, height, width);
    require_intensity(intensity);

    MotionTrajectory traj = generate_motion_trajectory(support, intensity, rng);
    Grid patch(support, support);

    // Deposit mass uniformly along the polyline with sub-pixel sampling.
    const double step = 0.25;
    bool any_mass = false;
    for (size_t i = 1; i < traj.xs.size(); ++i) {
        double x0 = traj.xs[i - 1], y0 = traj.ys[i - 1];
        double dx = traj.xs[i] - x0, dy = traj.ys[i] - y0;
        double len = std::sqrt(dx * dx + dy * dy);
        int subs = std::max(1, static_cast<int>(std::ceil(len / step)));
        double mass = len / subs;
        if (mass == 0.0) continue;
        for (int sidx = 0; sidx < subs; ++sidx) {
            double t = (sidx + 0.5) / subs;
            splat_bilinear(patch, x0 + t * dx, y0 + t * dy, mass);
            any_mass = true;
        }
    }
    if (!any_mass) {
        // Degenerate point trajectory: all mass at its single location.
        splat_bilinear(patch, traj.xs[0], traj.ys[0], 1.0);
    }

    Grid smoothed = gaussian_smooth(patch, 0.5);
    Kernel embedded = Kernel::embed_centered(smoothed, height, width);
    return project_kernel(embedded);
}

Grid generate_texture_image(int height, int width, double spectral_slope, RngState& rng) {
    if (!std::isfinite(spectral_slope) || spectral_slope < 0.0 || spectral_slope > 4.0) {
        std::ostringstream msg;
        msg << "spectral slope must lie in [0, 4], got " << spectral_slope;
        throw ConfigError(msg.str());
    }
    Grid noise = draw_standard_normal(rng, height, width);
    SpectralGrid spec = fft2(noise);
    for (int u = 0; u < height; ++u) {
        double ru = std::min(u, height - u);
        for (int v = 0; v < width; ++v) {
            double rv = std::min(v, width - v);
            double r = std::sqrt(ru * ru + rv * rv);
            spec(u, v) *= std::pow(1.0 + r, -spectral_slope / 2.0);
        }
    }
    Grid img = ifft2(spec);
    double min_v = img.data()[0], max_v = img.data()[0];
    for (double v : img.data()) {
        min_v = std::min(min_v, v);
        max_v = std::max(max_v, v);
    }
    if (max_v - min_v < 1e-30) {
        for (double& v : img.data()) v = 0.5;
        return img;
    }
    double inv_range = 1.0 / (max_v - min_v);
    for (double& v : img.data()) v = (v - min_v) * inv_range;
    return img;
}

ProblemInstance make_instance(const InstanceSpec& spec) {
    if (spec.height <= 0 || spec.width <= 0) throw ShapeMismatch("instance shape must be positive");
    if (!std::isfinite(spec.noise_sigma) || spec.noise_sigma < 0.0) {
        throw DegenerateScale("noise sigma must be finite and >= 0");
    }

    // Independent derived streams so each component is reproducible from the
    // instance seed alone.
    RngState root(spec.seed);
    RngState image_rng = root.split(1);
    RngState kernel_rng = root.split(2);
    RngState measure_rng = root.split(3);

    Grid truth = [&] {
        if (spec.image) {
            if (spec.image->height() != spec.height || spec.image->width() != spec.width) {
                throw ShapeMismatch("supplied image does not match instance shape");
            }
            if (!spec.image->all_finite()) throw Error("supplied image has non-finite entries");
            return *spec.image;
        }
        return generate_texture_image(spec.height, spec.width, spec.image_slope, image_rng);
    }();

    Kernel kernel = generate_motion_kernel(spec.kernel_support, spec.kernel_intensity,
                                           spec.height, spec.width, kernel_rng);
    ForwardModel model(kernel, spec.noise_sigma);
    Grid y = measure(model, truth, measure_rng);

    ProblemInstance instance{std::move(truth), std::move(kernel), std::move(y),
                             spec.noise_sigma, spec.seed,       spec.image_slope,
                             spec.kernel_intensity};
    return instance;
}

void save_instance(const fs::path& dir, const ProblemInstance& instance) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_pgrd(dir / "truth.pgrd", instance.truth_x);
    write_pgrd(dir / "kernel.pgrd", instance.truth_kernel.grid);
    write_pgrd(dir / "y.pgrd", instance.y);

    Manifest m;
    m.set_i64("height", instance.truth_x.height());
    m.set_i64("width", instance.truth_x.width());
    m.set_f64("noise_sigma", instance.noise_sigma);
    m.set_u64("seed", instance.seed);
    m.set_f64("image_slope", instance.image_slope);
    m.set_f64("kernel_intensity", instance.kernel_intensity);
    m.set_i64("kernel_support",
              instance.truth_kernel.support ? *instance.truth_kernel.support : -1);
    m.set_i64("kernel_normalized", instance.truth_kernel.normalized ? 1 : 0);
    m.save(dir / "instance.manifest");
}

ProblemInstance load_instance(const fs::path& dir) {
    Manifest m = Manifest::load(dir / "instance.manifest");
    ProblemInstance instance{read_pgrd(dir / "truth.pgrd"),
                             Kernel{read_pgrd(dir / "kernel.pgrd"), std::nullopt, false},
                             read_pgrd(dir / "y.pgrd"),
                             m.get_f64("noise_sigma"),
                             m.get_u64("seed"),
                             m.get_f64("image_slope"),
                             m.get_f64("kernel_intensity")};
    int64_t support = m.get_i64("kernel_support");
    if (support >= 0) instance.truth_kernel.support = static_cast<int>(support);
    instance.truth_kernel.normalized = m.get_i64("kernel_normalized") != 0;
    return instance;
}

} // namespace prism
