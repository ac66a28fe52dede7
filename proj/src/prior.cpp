#include "prism/prior.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "prism/errors.hpp"
#include "prism/fft.hpp"
#include "prism/log.hpp"

namespace prism {

namespace {

void require_positive_scale(double value, const char* name) {
    if (!std::isfinite(value) || value <= 0.0) {
        std::ostringstream msg;
        msg << name << " must be finite and positive, got " << value;
        throw DegenerateScale(msg.str());
    }
}

double min_image_radius(int u, int v, int h, int w) {
    double ru = std::min(u, h - u);
    double rv = std::min(v, w - v);
    return std::sqrt(ru * ru + rv * rv);
}

} // namespace

GaussianPrior GaussianPrior::white(Grid mean, double sd) {
    require_positive_scale(sd, "prior sd");
    GaussianPrior p;
    p.spectral_variance.assign(static_cast<size_t>(mean.size()), sd * sd);
    p.mean = std::move(mean);
    return p;
}

GaussianPrior GaussianPrior::power_law(Grid mean, double slope, double pixel_sd) {
    require_positive_scale(pixel_sd, "prior pixel sd");
    if (!std::isfinite(slope) || slope < 0.0) {
        throw DegenerateScale("spectral slope must be finite and >= 0");
    }
    int h = mean.height(), w = mean.width();
    std::vector<double> s(static_cast<size_t>(mean.size()));
    double total = 0.0;
    for (int u = 0; u < h; ++u) {
        for (int v = 0; v < w; ++v) {
            double val = std::pow(1.0 + min_image_radius(u, v, h, w), -slope);
            s[static_cast<size_t>(u) * w + v] = val;
            total += val;
        }
    }
    // Marginal per-pixel variance of a circulant covariance is the average of
    // the spectral variances; scale so it equals pixel_sd^2.
    double scale = pixel_sd * pixel_sd * static_cast<double>(mean.size()) / total;
    for (double& v : s) v *= scale;
    GaussianPrior p;
    p.mean = std::move(mean);
    p.spectral_variance = std::move(s);
    return p;
}

void GaussianPrior::validate() const {
    if (mean.size() <= 0) throw ShapeMismatch("prior mean is empty");
    if (spectral_variance.size() != static_cast<size_t>(mean.size())) {
        throw ShapeMismatch("spectral variance length does not match prior mean shape");
    }
    for (double v : spectral_variance) {
        if (!std::isfinite(v) || v <= 0.0) {
            throw DegenerateScale("spectral variances must be finite and positive");
        }
    }
}

Grid sample_prior(const GaussianPrior& prior, RngState& rng) {
    prior.validate();
    Grid w = draw_standard_normal(rng, prior.mean.height(), prior.mean.width());
    SpectralGrid ws = fft2(w);
    for (int i = 0; i < ws.size(); ++i) {
        ws.coefficients()[i] *= std::sqrt(prior.spectral_variance[i]);
    }
    Grid colored = ifft2(ws);
    Grid out = prior.mean;
    for (int i = 0; i < out.size(); ++i) out.data()[i] += colored.data()[i];
    return out;
}

GaussianConditional gaussian_denoise_conditional(const GaussianPrior& prior,
                                                 const Grid& v, double rho) {
    prior.validate();
    require_same_shape(prior.mean, v, "gaussian_denoise_conditional");
    require_positive_scale(rho, "denoising rho");
    SpectralGrid m_hat = fft2(prior.mean);
    SpectralGrid v_hat = fft2(v);
    double inv_rho2 = 1.0 / (rho * rho);
    int n = m_hat.size();
    std::vector<double> precision(static_cast<size_t>(n));
    SpectralGrid mean(m_hat.height(), m_hat.width());
    for (int i = 0; i < n; ++i) {
        double inv_s = 1.0 / prior.spectral_variance[i];
        double d = inv_s + inv_rho2;
        precision[static_cast<size_t>(i)] = d;
        mean.coefficients()[i] =
            (m_hat.coefficients()[i] * inv_s + v_hat.coefficients()[i] * inv_rho2) / d;
    }
    return GaussianConditional::from_spectral(std::move(precision), std::move(mean));
}

Grid gaussian_denoise_sample(const GaussianPrior& prior, const Grid& v, double rho,
                             RngState& rng) {
    return gaussian_denoise_conditional(prior, v, rho).sample(rng);
}

GaussianDenoiser::GaussianDenoiser(GaussianPrior prior) : prior_(std::move(prior)) {
    prior_.validate();
}

Grid GaussianDenoiser::sample(const Grid& v, double rho, RngState& rng) const {
    return gaussian_denoise_sample(prior_, v, rho, rng);
}

FixedPointSampler::FixedPointSampler(Grid point) : point_(std::move(point)) {}

Grid FixedPointSampler::sample(const Grid& v, double rho, RngState& rng) const {
    (void)rho;
    (void)rng;
    require_same_shape(v, point_, "FixedPointSampler::sample");
    return point_;
}

namespace {

// Regularized inverse estimate of the kernel from the measurement alone:
// per-frequency Wiener ratio conj(x0_hat) y_hat / (|x0_hat|^2 + lambda).
// x0 is a proxy for the sharp image (smoothed y by default, caller-supplied
// in the oracle variant). The overall scale is arbitrary; the physicality
// projection renormalizes downstream.
Grid whitened_kernel_estimate(const Grid& y, const Grid& x0, double lambda) {
    SpectralGrid x0_hat = fft2(x0);
    SpectralGrid y_hat = fft2(y);
    SpectralGrid k_hat(y.height(), y.width());
    for (int i = 0; i < k_hat.size(); ++i) {
        std::complex<double> xh = x0_hat.coefficients()[i];
        k_hat.coefficients()[i] =
            std::conj(xh) * y_hat.coefficients()[i] / (std::norm(xh) + lambda);
    }
    // conj(x0_hat) * y_hat is Hermitian for real inputs, so this inverts cleanly.
    return ifft2(k_hat);
}

bool in_support_window(int r, int c, int h, int w, int half) {
    int dr = std::min(r, h - r);
    int dc = std::min(c, w - c);
    return dr <= half && dc <= half;
}

void mask_to_support(Grid& k, int support) {
    int h = k.height(), w = k.width();
    if (support < 1 || support > std::min(h, w)) {
        throw BadSupport("support hint out of range");
    }
    int half = support / 2;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!in_support_window(r, c, h, w, half)) k(r, c) = 0.0;
        }
    }
}

} // namespace

ConditionedKernelSampler::ConditionedKernelSampler(Grid y, GaussianPrior base,
                                                   ConditionedKernelConfig config)
    : prior_(std::move(base)) {
    prior_.validate();
    require_same_shape(prior_.mean, y, "ConditionedKernelSampler");
    if (!y.all_finite()) throw Error("conditioning measurement has non-finite entries");

    if (config.recentre) {
        require_positive_scale(config.lambda, "recentring lambda");

        Grid x0 = config.proxy ? *config.proxy : gaussian_smooth(y, config.smooth_sigma);
        require_same_shape(x0, y, "ConditionedKernelSampler proxy");
        Grid estimate = whitened_kernel_estimate(y, x0, config.lambda);
        if (config.support_hint) mask_to_support(estimate, *config.support_hint);
        if (config.delta_blend != 0.0) {
            if (!std::isfinite(config.delta_blend) || config.delta_blend < 0.0 ||
                config.delta_blend > 1.0) {
                throw ConfigError("kernel mean delta blend must lie in [0, 1]");
            }
            // Restore the peak concentration the whitened estimate smears out:
            // mix the (unit-mass-normalized) estimate with a centered delta.
            Kernel normalized =
                project_kernel(Kernel{std::move(estimate), config.support_hint, false});
            estimate = std::move(normalized.grid);
            const double b = config.delta_blend;
            for (double& v : estimate.data()) v *= 1.0 - b;
            estimate(0, 0) += b;
        }
        Kernel candidate =
            project_kernel(Kernel{std::move(estimate), config.support_hint, false});

        // Accept the recentred mean only if it actually explains the
        // measurement; pure-noise inputs fail this check and keep the base mean.
        Grid predicted = convolve_circular(x0, candidate.grid);
        double y_norm = l2_norm(y);
        double residual = y_norm > 0.0 ? l2_norm_diff(predicted, y) / y_norm : 1.0;
        if (residual <= config.fallback_residual) {
            prior_.mean = std::move(candidate.grid);
            recentred_ = true;
        } else {
            std::ostringstream msg;
            msg << "kernel recentring rejected: relative residual " << residual << " > "
                << config.fallback_residual;
            log_info(msg.str());
        }
    }

    // Compactness shaping: a support hint narrows the prior sd outside the
    // centered window (kept positive so the rho -> 0 invariant holds) and
    // confines the prior mean to the window. Applied in both the recentred
    // and the ablation arm -- it models the prior, not the conditioning.
    if (config.support_hint && config.support_sd_factor != 1.0) {
        if (!std::isfinite(config.support_sd_factor) || config.support_sd_factor <= 0.0 ||
            config.support_sd_factor > 1.0) {
            throw DegenerateScale("support sd factor must lie in (0, 1]");
        }
        int h = prior_.mean.height(), w = prior_.mean.width();
        int support = *config.support_hint;
        if (support < 1 || support > std::min(h, w)) {
            throw BadSupport("support hint out of range");
        }
        double avg_var = 0.0;
        for (double s : prior_.spectral_variance) avg_var += s;
        avg_var /= static_cast<double>(prior_.spectral_variance.size());
        const double inside_sd = std::sqrt(avg_var);
        const double outside_sd = inside_sd * config.support_sd_factor;
        int half = support / 2;
        pixel_sd_.assign(static_cast<size_t>(prior_.mean.size()), outside_sd);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                if (in_support_window(r, c, h, w, half)) {
                    pixel_sd_[static_cast<size_t>(r) * w + c] = inside_sd;
                }
            }
        }
        Grid masked = prior_.mean;
        mask_to_support(masked, support);
        prior_.mean = project_kernel(Kernel{std::move(masked), config.support_hint, false}).grid;
    }
}

Grid ConditionedKernelSampler::sample(const Grid& v, double rho, RngState& rng) const {
    if (pixel_sd_.empty()) return gaussian_denoise_sample(prior_, v, rho, rng);
    require_same_shape(prior_.mean, v, "ConditionedKernelSampler::sample");
    require_positive_scale(rho, "denoising rho");
    // Diagonal conjugate denoising posterior for the shaped (non-stationary)
    // prior: per-pixel precision 1/s_p + 1/rho^2.
    Grid out(v.height(), v.width());
    const double inv_rho2 = 1.0 / (rho * rho);
    for (int i = 0; i < out.size(); ++i) {
        double s = pixel_sd_[static_cast<size_t>(i)] * pixel_sd_[static_cast<size_t>(i)];
        double d = 1.0 / s + inv_rho2;
        double mean = (prior_.mean.data()[i] / s + v.data()[i] * inv_rho2) / d;
        out.data()[i] = mean + rng.normal() / std::sqrt(d);
    }
    return out;
}

std::unique_ptr<ConditionedKernelSampler> conditioned_kernel_sampler(
    const Grid& y, GaussianPrior base, ConditionedKernelConfig config) {
    return std::make_unique<ConditionedKernelSampler>(y, std::move(base), std::move(config));
}

Kernel project_kernel(const Kernel& k) {
    if (!k.grid.all_finite()) throw Error("cannot project a non-finite kernel");
    double min_v = k.grid.data()[0];
    for (double v : k.grid.data()) min_v = std::min(min_v, v);
    double sum = grid_sum(k.grid);
    if (min_v >= 0.0 && std::abs(sum - 1.0) <= 1e-12) {
        return Kernel{k.grid, k.support, true};
    }
    Grid clipped = k.grid;
    for (double& v : clipped.data()) v = std::max(v, 0.0);
    double mass = grid_sum(clipped);
    if (mass < 1e-12) {
        Kernel delta = Kernel::delta(k.grid.height(), k.grid.width());
        delta.support = k.support;
        return delta;
    }
    for (double& v : clipped.data()) v /= mass;
    return Kernel{std::move(clipped), k.support, true};
}

} // namespace prism
