#include "prism/forward.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "prism/errors.hpp"

namespace prism {

namespace {

// Shared spectral core: ifft2 of kspec .* xspec scaled by sqrt(HW). The
// operand order (kernel spectrum first) is fixed so that apply() and
// commute() execute identical arithmetic and agree bit-for-bit.
Grid spectral_convolve(const SpectralGrid& kspec, const SpectralGrid& xspec) {
    int h = kspec.height(), w = kspec.width();
    double scale = std::sqrt(static_cast<double>(h) * w);
    SpectralGrid out(h, w);
    for (int i = 0; i < out.size(); ++i) {
        out.coefficients()[i] = kspec.coefficients()[i] * xspec.coefficients()[i] * scale;
    }
    return ifft2(out);
}

} // namespace

Kernel Kernel::delta(int height, int width) {
    Grid g(height, width);
    g(0, 0) = 1.0;
    return Kernel{std::move(g), 1, true};
}

Kernel Kernel::embed_centered(const Grid& patch, int height, int width) {
    if (patch.height() > height || patch.width() > width) {
        std::ostringstream msg;
        msg << "patch " << patch.height() << "x" << patch.width()
            << " does not fit in " << height << "x" << width;
        throw BadSupport(msg.str());
    }
    Grid g(height, width);
    int ph = patch.height(), pw = patch.width();
    int ch = ph / 2, cw = pw / 2;
    for (int i = 0; i < ph; ++i) {
        int r = ((i - ch) % height + height) % height;
        for (int j = 0; j < pw; ++j) {
            int c = ((j - cw) % width + width) % width;
            g(r, c) = patch(i, j);
        }
    }
    Kernel k{std::move(g), std::nullopt, false};
    if (ph == pw) k.support = ph;
    return k;
}

Grid Kernel::crop_centered(int s) const {
    if (s < 1 || s > grid.height() || s > grid.width()) {
        std::ostringstream msg;
        msg << "crop size " << s << " invalid for " << grid.height() << "x" << grid.width();
        throw BadSupport(msg.str());
    }
    Grid out(s, s);
    int c = s / 2;
    int h = grid.height(), w = grid.width();
    for (int i = 0; i < s; ++i) {
        int r = ((i - c) % h + h) % h;
        for (int j = 0; j < s; ++j) {
            int cc = ((j - c) % w + w) % w;
            out(i, j) = grid(r, cc);
        }
    }
    return out;
}

ForwardModel::ForwardModel(Kernel kernel, double noise_sigma)
    : kernel_(std::move(kernel)), noise_sigma_(noise_sigma) {
    if (!kernel_.grid.all_finite()) throw Error("forward model kernel has non-finite entries");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw DegenerateScale("noise sigma must be finite and >= 0");
    }
    spectrum_ = fft2(kernel_.grid);
}

Grid apply(const ForwardModel& model, const Grid& x) {
    require_same_shape(model.kernel().grid, x, "apply");
    return spectral_convolve(model.spectrum(), fft2(x));
}

Grid adjoint(const ForwardModel& model, const Grid& y) {
    require_same_shape(model.kernel().grid, y, "adjoint");
    const SpectralGrid& spec = model.spectrum();
    SpectralGrid conj_spec(spec.height(), spec.width());
    for (int i = 0; i < spec.size(); ++i) {
        conj_spec.coefficients()[i] = std::conj(spec.coefficients()[i]);
    }
    return spectral_convolve(conj_spec, fft2(y));
}

Grid measure(const ForwardModel& model, const Grid& x, RngState& rng) {
    Grid y = apply(model, x);
    if (model.noise_sigma() == 0.0) return y;
    Grid noise = draw_standard_normal(rng, y.height(), y.width());
    for (int i = 0; i < y.size(); ++i) y.data()[i] += model.noise_sigma() * noise.data()[i];
    return y;
}

Grid commute(const Grid& x, const Kernel& m) {
    require_same_shape(x, m.grid, "commute");
    return convolve_circular(x, m.grid);
}

Grid convolve_circular(const Grid& image, const Grid& kernel_grid) {
    require_same_shape(image, kernel_grid, "convolve_circular");
    return spectral_convolve(fft2(kernel_grid), fft2(image));
}

Grid gaussian_smooth(const Grid& g, double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw DegenerateScale("smoothing sigma must be finite and >= 0");
    }
    if (sigma == 0.0) return g;
    int h = g.height(), w = g.width();
    Grid kernel(h, w);
    double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int r = 0; r < h; ++r) {
        double dr = std::min(r, h - r);
        for (int c = 0; c < w; ++c) {
            double dc = std::min(c, w - c);
            kernel(r, c) = std::exp(-(dr * dr + dc * dc) * inv2s2);
        }
    }
    double total = grid_sum(kernel);
    for (double& v : kernel.data()) v /= total;
    return convolve_circular(g, kernel);
}

} // namespace prism
