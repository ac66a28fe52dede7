#pragma once

#include <optional>

#include "prism/fft.hpp"
#include "prism/grid.hpp"
#include "prism/rng.hpp"

namespace prism {

/// Blur kernel living on the full image grid, mass centered at the origin
/// with wrap-around. `support` records the nominal extent of the kernel
/// (metadata only; the convolution always uses the full grid).
struct Kernel {
    Grid grid;
    std::optional<int> support;
    bool normalized = false;

    static Kernel delta(int height, int width);

    /// Embeds an s x s patch (center tap at (s/2, s/2)) at the origin of an
    /// H x W grid with wrap-around.
    static Kernel embed_centered(const Grid& patch, int height, int width);

    /// Centered s x s view of the kernel, inverse of embed_centered.
    Grid crop_centered(int s) const;
};

/// Circular convolution operator y = h (*) x with Gaussian measurement
/// noise of deviation `noise_sigma`. Immutable after construction; the
/// kernel's unitary spectrum is cached.
class ForwardModel {
public:
    ForwardModel(Kernel kernel, double noise_sigma);

    const Kernel& kernel() const { return kernel_; }
    /// Unitary fft2 of the kernel grid. The circulant operator's eigenvalues
    /// are sqrt(HW) times these coefficients.
    const SpectralGrid& spectrum() const { return spectrum_; }
    double noise_sigma() const { return noise_sigma_; }

    int height() const { return kernel_.grid.height(); }
    int width() const { return kernel_.grid.width(); }

private:
    Kernel kernel_;
    SpectralGrid spectrum_;
    double noise_sigma_;
};

/// h (*) x, computed spectrally. Matches the direct-sum circular
/// convolution to 1e-10 relative.
Grid apply(const ForwardModel& model, const Grid& x);

/// Correlation with the kernel (conjugate spectrum): <Hx, y> == <x, H^T y>.
Grid adjoint(const ForwardModel& model, const Grid& y);

/// apply(model, x) plus sigma * standard normal noise.
Grid measure(const ForwardModel& model, const Grid& x, RngState& rng);

/// C_x m: convolution with the roles of image and kernel swapped.
/// Bit-identical to apply() with kernel m on image x.
Grid commute(const Grid& x, const Kernel& m);

/// Shared spectral implementation of circular convolution.
Grid convolve_circular(const Grid& image, const Grid& kernel_grid);

/// Periodic Gaussian smoothing (circular convolution with a normalized
/// min-image Gaussian of deviation sigma pixels). sigma = 0 is the identity.
Grid gaussian_smooth(const Grid& g, double sigma);

} // namespace prism
