#pragma once

// Independent reference implementations used only by tests. Everything here
// is deliberately naive (direct sums, nested loops, textbook factorizations)
// so that agreement with the fast paths is meaningful evidence.

#include <vector>

#include "prism/grid.hpp"

namespace prism::oracle {

/// O(n^2)-per-coefficient direct discrete Fourier transform, unitary scaling.
SpectralGrid direct_fft2(const Grid& g);

/// Direct inverse transform of the unitary DFT; returns the real part and
/// the largest imaginary residue through `max_imag` when non-null.
Grid direct_ifft2(const SpectralGrid& s, double* max_imag = nullptr);

/// Nested-loop circular convolution (kernel indexed at the origin with
/// wrap-around), no FFT anywhere.
Grid direct_convolve(const Grid& image, const Grid& kernel);

/// Dense conditional oracle built without Eigen: materializes the circulant
/// operator column by column via direct_convolve, forms the normal
/// equations, and solves with a hand-rolled Cholesky factorization.
struct DenseSolve {
    Grid mean;
    std::vector<double> covariance; // row-major n x n
};
DenseSolve dense_conditional(const Grid& convolver, const Grid& y, const Grid& coupled,
                             double rho, double sigma_y);

/// Exact tail probability P(X >= wins) for X ~ Binomial(trials, 1/2).
double binomial_tail_half(int trials, int wins);

} // namespace prism::oracle
