#pragma once

#include <vector>

#include "prism/forward.hpp"
#include "prism/grid.hpp"
#include "prism/rng.hpp"

namespace prism {

/// Gaussian distribution with circulant precision, diagonal in the Fourier
/// domain: per-frequency precision d(f) and Hermitian spectral mean.
/// Exact draws cost two FFTs (whiten-and-color). Immutable after build;
/// concurrent sample() calls need distinct RngStates.
class GaussianConditional {
public:
    static GaussianConditional from_spectral(std::vector<double> spectral_precision,
                                             SpectralGrid spectral_mean);

    int height() const { return spectral_mean_.height(); }
    int width() const { return spectral_mean_.width(); }

    const std::vector<double>& spectral_precision() const { return precision_; }
    const SpectralGrid& spectral_mean() const { return spectral_mean_; }
    /// Spatial mean, precomputed at construction.
    const Grid& mean() const { return mean_; }

    /// Exact draw: mean + ifft2(fft2(w) / sqrt(d)) with w standard normal.
    Grid sample(RngState& rng) const;

private:
    std::vector<double> precision_;
    SpectralGrid spectral_mean_;
    Grid mean_;
};

/// Image likelihood step: the conditional over the latent z given data y,
/// current image x, and coupling rho_x:
///     precision(f) = |H_hat(f)|^2 / sigma_y^2 + 1 / rho_x^2
///     mean(f)      = (conj(H_hat) y_hat / sigma_y^2 + x_hat / rho_x^2) / precision(f)
/// where H_hat are the circulant operator eigenvalues of the model kernel.
GaussianConditional build_image_conditional(const ForwardModel& model, const Grid& y,
                                            const Grid& x, double rho_x);

/// Kernel likelihood step: identical machinery with the image x playing the
/// transfer-function role (C_x) and the kernel phi as the coupled point.
GaussianConditional build_kernel_conditional(const Grid& x, const Grid& y,
                                             const Kernel& phi, double rho_phi,
                                             double sigma_y);

/// Brute-force reference: materializes the circulant operator as a dense
/// n x n matrix, solves for the conditional mean, and inverts the precision
/// for the covariance. Grids above 144 pixels raise TooLarge.
struct DenseConditional {
    Grid mean;
    std::vector<double> covariance; // row-major n x n
    int n = 0;
};
DenseConditional dense_oracle(const Grid& convolver, const Grid& y,
                              const Grid& coupled, double rho, double sigma_y);

inline constexpr int kDenseOracleMaxPixels = 144;

} // namespace prism
