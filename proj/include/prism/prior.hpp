#pragma once

#include <memory>
#include <optional>

#include "prism/forward.hpp"
#include "prism/grid.hpp"
#include "prism/likelihood.hpp"
#include "prism/rng.hpp"

namespace prism {

/// A prior step is a denoising-posterior sampler: given a noisy point v and
/// a noise level rho, draw from p(u | v) ~ p(u) * N(v; u, rho^2 I). This is
/// the seam where learned denoisers plug in; as rho -> 0 the draw must
/// converge to v (degenerate point-mass priors excepted).
class DenoisingPosteriorSampler {
public:
    virtual ~DenoisingPosteriorSampler() = default;

    virtual Grid sample(const Grid& v, double rho, RngState& rng) const = 0;

    /// Optional data-informed center, used to seed chain initialization.
    virtual std::optional<Grid> mean_hint() const { return std::nullopt; }
};

/// Same contract with a conditioning measurement y bound at construction.
class MeasurementConditionedSampler : public DenoisingPosteriorSampler {};

/// Stationary Gaussian prior with circulant covariance: per-frequency
/// variances s(f) > 0 around a fixed mean. The analytic stand-in for
/// learned priors; makes every posterior in the pipeline exactly testable.
struct GaussianPrior {
    Grid mean;
    std::vector<double> spectral_variance;

    /// i.i.d. N(mean, sd^2) per pixel.
    static GaussianPrior white(Grid mean, double sd);

    /// Power-law spectrum s(f) ~ (1 + |f|)^(-slope), scaled so the marginal
    /// per-pixel standard deviation equals pixel_sd.
    static GaussianPrior power_law(Grid mean, double slope, double pixel_sd);

    void validate() const;
};

/// Draw from the prior itself (mean + colored noise).
Grid sample_prior(const GaussianPrior& prior, RngState& rng);

/// Conjugate posterior of the Gaussian denoising problem:
/// precision(f) = 1/s(f) + 1/rho^2, mean blending prior mean and v.
GaussianConditional gaussian_denoise_conditional(const GaussianPrior& prior,
                                                 const Grid& v, double rho);

/// Exact draw from that posterior.
Grid gaussian_denoise_sample(const GaussianPrior& prior, const Grid& v,
                             double rho, RngState& rng);

/// DenoisingPosteriorSampler backed by a GaussianPrior.
class GaussianDenoiser final : public DenoisingPosteriorSampler {
public:
    explicit GaussianDenoiser(GaussianPrior prior);
    Grid sample(const Grid& v, double rho, RngState& rng) const override;
    std::optional<Grid> mean_hint() const override { return prior_.mean; }
    const GaussianPrior& prior() const { return prior_; }

private:
    GaussianPrior prior_;
};

/// Degenerate point-mass prior: always returns the fixed grid. Used for
/// non-blind runs with a known kernel (and intentionally exempt from the
/// rho -> 0 interface invariant).
class FixedPointSampler final : public MeasurementConditionedSampler {
public:
    explicit FixedPointSampler(Grid point);
    Grid sample(const Grid& v, double rho, RngState& rng) const override;
    std::optional<Grid> mean_hint() const override { return point_; }

private:
    Grid point_;
};

struct ConditionedKernelConfig {
    double lambda = 1e-2;          // whitening regularizer (operator-eigenvalue units)
    double smooth_sigma = 2.0;     // Gaussian smoothing of the proxy image, pixels
    double fallback_residual = 0.5;// reject recentring above this relative data residual
    std::optional<int> support_hint; // mask the estimate to a centered window if known
    std::optional<Grid> proxy;     // supply x0 directly (oracle variant)
    bool recentre = true;          // ablation switch: off = plain base prior
    // With a support hint the prior also encodes compactness: prior sd
    // outside the centered window shrinks by this factor (kept positive so
    // the rho -> 0 invariant survives). 1.0 disables the shaping.
    double support_sd_factor = 1e-3;
    // Recentred mean = project(blend * delta + (1 - blend) * estimate).
    // The whitened estimate recovers orientation and extent but smears the
    // peak; mixing a centered delta back in restores the mass concentration
    // that compact kernels have. 0 uses the raw estimate.
    double delta_blend = 0.5;
};

/// Analytic stand-in for a measurement-conditioned kernel prior. The base
/// Gaussian prior's mean is re-centered on a regularized inverse estimate
/// extracted from y (whitened cross-correlation against a smoothed proxy
/// image); if the estimate fails to explain y it falls back to the base
/// mean. Sampling then proceeds as the conjugate Gaussian denoising
/// posterior; with a support hint the prior variance is shaped per pixel
/// (compact-kernel belief), otherwise the circulant base prior is used
/// verbatim.
class ConditionedKernelSampler final : public MeasurementConditionedSampler {
public:
    ConditionedKernelSampler(Grid y, GaussianPrior base, ConditionedKernelConfig config = {});

    Grid sample(const Grid& v, double rho, RngState& rng) const override;
    std::optional<Grid> mean_hint() const override { return prior_.mean; }

    /// Prior mean after recentring (equals the base mean when the fallback
    /// or the ablation switch kept recentring off).
    const Grid& prior_mean() const { return prior_.mean; }
    bool recentred() const { return recentred_; }

private:
    GaussianPrior prior_;
    std::vector<double> pixel_sd_; // per-pixel prior sd; empty = circulant path
    bool recentred_ = false;
};

/// Factory matching the conditioned-prior construction in one call.
std::unique_ptr<ConditionedKernelSampler> conditioned_kernel_sampler(
    const Grid& y, GaussianPrior base, ConditionedKernelConfig config = {});

/// Physicality projection: clip negatives, renormalize to unit sum, flag
/// normalized. Degenerate inputs (positive mass < 1e-12) become a centered
/// delta. Exactly idempotent: re-projecting a projected kernel is a no-op.
Kernel project_kernel(const Kernel& k);

} // namespace prism
