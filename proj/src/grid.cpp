#include "prism/grid.hpp"

#include <cmath>
#include <sstream>

namespace prism {

namespace {

void require_positive_shape(int height, int width) {
    if (height <= 0 || width <= 0) {
        std::ostringstream msg;
        msg << "grid shape must be positive, got " << height << "x" << width;
        throw ShapeMismatch(msg.str());
    }
}

} // namespace

Grid::Grid(int height, int width, double fill)
    : height_(height), width_(width) {
    require_positive_shape(height, width);
    data_.assign(static_cast<size_t>(height) * width, fill);
}

Grid Grid::from_data(int height, int width, std::vector<double> data) {
    require_positive_shape(height, width);
    if (data.size() != static_cast<size_t>(height) * width) {
        std::ostringstream msg;
        msg << "data length " << data.size() << " does not match " << height << "x" << width;
        throw ShapeMismatch(msg.str());
    }
    Grid g;
    g.height_ = height;
    g.width_ = width;
    g.data_ = std::move(data);
    return g;
}

bool Grid::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

SpectralGrid::SpectralGrid(int height, int width)
    : height_(height), width_(width) {
    require_positive_shape(height, width);
    coef_.assign(static_cast<size_t>(height) * width, {0.0, 0.0});
}

SpectralGrid SpectralGrid::from_data(int height, int width,
                                     std::vector<std::complex<double>> coefficients) {
    require_positive_shape(height, width);
    if (coefficients.size() != static_cast<size_t>(height) * width) {
        throw ShapeMismatch("spectral coefficient count does not match shape");
    }
    SpectralGrid s;
    s.height_ = height;
    s.width_ = width;
    s.coef_ = std::move(coefficients);
    return s;
}

void require_same_shape(const Grid& a, const Grid& b, const char* op) {
    if (!same_shape(a, b)) {
        std::ostringstream msg;
        msg << op << ": shape mismatch " << a.height() << "x" << a.width()
            << " vs " << b.height() << "x" << b.width();
        throw ShapeMismatch(msg.str());
    }
}

double grid_sum(const Grid& g) {
    // Neumaier compensation keeps the unit-sum check on large kernels exact
    // enough for the idempotent projection window, and survives addends that
    // exceed the running sum (where classic Kahan drops the carry).
    double sum = 0.0, c = 0.0;
    for (double v : g.data()) {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    return sum + c;
}

double dot(const Grid& a, const Grid& b) {
    require_same_shape(a, b, "dot");
    double acc = 0.0;
    for (int i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
    return acc;
}

double l2_norm(const Grid& g) {
    double acc = 0.0;
    for (double v : g.data()) acc += v * v;
    return std::sqrt(acc);
}

double l2_norm_diff(const Grid& a, const Grid& b) {
    require_same_shape(a, b, "l2_norm_diff");
    double acc = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double max_abs_diff(const Grid& a, const Grid& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

} // namespace prism
