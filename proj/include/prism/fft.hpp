#pragma once

#include "prism/grid.hpp"

namespace prism {

/// Unitary 2D discrete Fourier transform (1/sqrt(HW) scaling both ways, so
/// Parseval holds symmetrically: ||g||_2 == ||fft2(g)||_2).
SpectralGrid fft2(const Grid& g);

/// Inverse transform of a Hermitian-symmetric spectrum. The imaginary
/// residue must stay below 1e-10 of the total energy; larger residue means
/// the spectrum was corrupted and raises SymmetryViolation.
Grid ifft2(const SpectralGrid& s);

/// Relative imaginary residue the checked inverse enforces.
inline constexpr double kIfftSymmetryTolerance = 1e-10;

} // namespace prism
