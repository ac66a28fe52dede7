#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "prism/errors.hpp"

namespace prism {

/// Row-major 2D array of doubles. The common carrier for images, kernels
/// embedded in the image domain, and per-pixel statistic maps.
///
/// Grids are plain values: cheap to copy/move and treated as immutable once
/// filled, so they can be shared read-only across threads.
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, double fill = 0.0);

    /// Takes ownership of `data` (must have height*width entries).
    static Grid from_data(int height, int width, std::vector<double> data);

    int height() const { return height_; }
    int width() const { return width_; }
    int size() const { return height_ * width_; }

    double operator()(int row, int col) const { return data_[row * width_ + col]; }
    double& operator()(int row, int col) { return data_[row * width_ + col]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Complex Fourier coefficients of a Grid under the unitary normalization
/// (1/sqrt(HW) applied in both directions).
class SpectralGrid {
public:
    SpectralGrid() = default;
    SpectralGrid(int height, int width);
    static SpectralGrid from_data(int height, int width, std::vector<std::complex<double>> coefficients);

    int height() const { return height_; }
    int width() const { return width_; }
    int size() const { return height_ * width_; }

    std::complex<double> operator()(int row, int col) const { return coef_[row * width_ + col]; }
    std::complex<double>& operator()(int row, int col) { return coef_[row * width_ + col]; }

    const std::vector<std::complex<double>>& coefficients() const { return coef_; }
    std::vector<std::complex<double>>& coefficients() { return coef_; }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::complex<double>> coef_;
};

inline bool same_shape(const Grid& a, const Grid& b) {
    return a.height() == b.height() && a.width() == b.width();
}

/// Throws ShapeMismatch naming the offending operation.
void require_same_shape(const Grid& a, const Grid& b, const char* op);

double grid_sum(const Grid& g);     // Neumaier-compensated
double dot(const Grid& a, const Grid& b);
double l2_norm(const Grid& g);
double l2_norm_diff(const Grid& a, const Grid& b); // ||a - b||_2
double max_abs_diff(const Grid& a, const Grid& b);

} // namespace prism
