#include "prism/analysis.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "prism/errors.hpp"

namespace prism {

namespace {

void require_positive(double value, const char* name) {
    if (!std::isfinite(value) || value <= 0.0) {
        std::ostringstream msg;
        msg << name << " must be finite and positive, got " << value;
        throw DegenerateScale(msg.str());
    }
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

// Normalized 11x11 Gaussian window, row-major.
std::vector<double> ssim_window() {
    std::vector<double> w(kSsimWindow * kSsimWindow);
    double total = 0.0;
    int c = kSsimWindow / 2;
    for (int i = 0; i < kSsimWindow; ++i) {
        for (int j = 0; j < kSsimWindow; ++j) {
            double d2 = (i - c) * (i - c) + (j - c) * (j - c);
            double v = std::exp(-d2 / (2.0 * kSsimSigma * kSsimSigma));
            w[i * kSsimWindow + j] = v;
            total += v;
        }
    }
    for (double& v : w) v /= total;
    return w;
}

} // namespace

double psnr(const Grid& a, const Grid& b, double peak) {
    require_same_shape(a, b, "psnr");
    require_positive(peak, "psnr peak");
    double mse = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        double d = a.data()[i] - b.data()[i];
        mse += d * d;
    }
    mse /= a.size();
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Grid& a, const Grid& b, double peak) {
    require_same_shape(a, b, "ssim");
    require_positive(peak, "ssim peak");
    if (a.height() < kSsimWindow || a.width() < kSsimWindow) {
        std::ostringstream msg;
        msg << "ssim needs grids of at least " << kSsimWindow << "x" << kSsimWindow << ", got "
            << a.height() << "x" << a.width();
        throw TooSmall(msg.str());
    }
    static const std::vector<double> window = ssim_window();
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);

    double total = 0.0;
    int count = 0;
    for (int top = 0; top + kSsimWindow <= a.height(); ++top) {
        for (int left = 0; left + kSsimWindow <= a.width(); ++left) {
            double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
            for (int i = 0; i < kSsimWindow; ++i) {
                for (int j = 0; j < kSsimWindow; ++j) {
                    double w = window[i * kSsimWindow + j];
                    double va = a(top + i, left + j);
                    double vb = b(top + i, left + j);
                    mu_a += w * va;
                    mu_b += w * vb;
                    aa += w * (va * va);
                    bb += w * (vb * vb);
                    // Group the commutative pixel product first so the
                    // accumulation is bit-identical under argument swap.
                    ab += w * (va * vb);
                }
            }
            double sq_a = mu_a * mu_a;
            double sq_b = mu_b * mu_b;
            double cross = mu_a * mu_b;
            double var_a = aa - sq_a;
            double var_b = bb - sq_b;
            double cov = ab - cross;
            double value = ((2.0 * cross + c1) * (2.0 * cov + c2)) /
                           ((sq_a + sq_b + c1) * (var_a + var_b + c2));
            total += value;
            ++count;
        }
    }
    return total / count;
}

double kernel_rmse(const Kernel& k1, const Kernel& k2) {
    require_same_shape(k1.grid, k2.grid, "kernel_rmse");
    double acc = 0.0;
    for (int i = 0; i < k1.grid.size(); ++i) {
        double d = k1.grid.data()[i] - k2.grid.data()[i];
        acc += d * d;
    }
    return std::sqrt(acc / k1.grid.size());
}

StatsAccumulator::StatsAccumulator(int height, int width)
    : mean_(height, width), m2_(height, width) {}

void StatsAccumulator::add(const Grid& sample) {
    require_same_shape(mean_, sample, "StatsAccumulator::add");
    ++count_;
    for (int i = 0; i < mean_.size(); ++i) {
        double x = sample.data()[i];
        double delta = x - mean_.data()[i];
        mean_.data()[i] += delta / count_;
        m2_.data()[i] += delta * (x - mean_.data()[i]);
    }
}

PosteriorStats StatsAccumulator::finalize(const Grid& truth, double sd_floor) const {
    if (count_ < 2) throw InsufficientSamples("posterior stats need at least 2 samples");
    require_same_shape(mean_, truth, "StatsAccumulator::finalize");
    require_positive(sd_floor, "sd floor");

    PosteriorStats stats{mean_, Grid(mean_.height(), mean_.width()), 0.0, 0.0,
                         Grid(mean_.height(), mean_.width()), sd_floor};
    double nll_total = 0.0;
    int outliers = 0;
    for (int i = 0; i < mean_.size(); ++i) {
        double sd = std::sqrt(m2_.data()[i] / count_); // population SD
        sd = std::max(sd, sd_floor);
        stats.sd.data()[i] = sd;
        double err = truth.data()[i] - mean_.data()[i];
        nll_total += 0.5 * std::log(2.0 * std::numbers::pi * sd * sd) +
                     err * err / (2.0 * sd * sd);
        bool outlier = std::abs(err) > 3.0 * sd;
        stats.outlier_mask.data()[i] = outlier ? 1.0 : 0.0;
        outliers += outlier ? 1 : 0;
    }
    stats.nll = nll_total / mean_.size();
    stats.coverage3sd = 1.0 - static_cast<double>(outliers) / mean_.size();
    return stats;
}

PosteriorStats posterior_stats(std::span<const Grid> samples, const Grid& truth,
                               double sd_floor) {
    if (samples.size() < 2) throw InsufficientSamples("posterior stats need at least 2 samples");
    StatsAccumulator acc(truth.height(), truth.width());
    for (const Grid& s : samples) acc.add(s);
    return acc.finalize(truth, sd_floor);
}

double nll_from_maps(const Grid& mean, const Grid& sd, const Grid& truth) {
    require_same_shape(mean, sd, "nll_from_maps");
    require_same_shape(mean, truth, "nll_from_maps");
    double total = 0.0;
    for (int i = 0; i < mean.size(); ++i) {
        double s = sd.data()[i];
        if (!(s > 0.0)) throw DegenerateScale("sd map must be positive everywhere");
        double err = truth.data()[i] - mean.data()[i];
        total += 0.5 * std::log(2.0 * std::numbers::pi * s * s) + err * err / (2.0 * s * s);
    }
    return total / mean.size();
}

double coverage_from_maps(const Grid& mean, const Grid& sd, const Grid& truth) {
    require_same_shape(mean, sd, "coverage_from_maps");
    require_same_shape(mean, truth, "coverage_from_maps");
    int inside = 0;
    for (int i = 0; i < mean.size(); ++i) {
        if (std::abs(truth.data()[i] - mean.data()[i]) <= 3.0 * sd.data()[i]) ++inside;
    }
    return static_cast<double>(inside) / mean.size();
}

Grid error_to_sd_map(const PosteriorStats& stats, const Grid& truth) {
    require_same_shape(stats.mean, truth, "error_to_sd_map");
    Grid out(truth.height(), truth.width());
    for (int i = 0; i < out.size(); ++i) {
        out.data()[i] = std::abs(truth.data()[i] - stats.mean.data()[i]) / stats.sd.data()[i];
    }
    return out;
}

} // namespace prism
