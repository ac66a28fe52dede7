#include "prism/likelihood.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

#include "prism/errors.hpp"
#include "prism/fft.hpp"

namespace prism {

namespace {

void require_positive_scale(double value, const char* name) {
    if (!std::isfinite(value) || value <= 0.0) {
        std::ostringstream msg;
        msg << name << " must be finite and positive, got " << value;
        throw DegenerateScale(msg.str());
    }
}

} // namespace

GaussianConditional GaussianConditional::from_spectral(std::vector<double> spectral_precision,
                                                       SpectralGrid spectral_mean) {
    if (spectral_precision.size() != static_cast<size_t>(spectral_mean.size())) {
        throw ShapeMismatch("spectral precision length does not match spectral mean shape");
    }
    for (double d : spectral_precision) {
        if (!std::isfinite(d) || d <= 0.0) {
            throw DegenerateScale("spectral precision must be finite and positive everywhere");
        }
    }
    GaussianConditional cond;
    cond.precision_ = std::move(spectral_precision);
    cond.spectral_mean_ = std::move(spectral_mean);
    // ifft2 enforces the Hermitian-symmetry invariant of the mean.
    cond.mean_ = ifft2(cond.spectral_mean_);
    return cond;
}

Grid GaussianConditional::sample(RngState& rng) const {
    Grid w = draw_standard_normal(rng, height(), width());
    SpectralGrid ws = fft2(w);
    for (int i = 0; i < ws.size(); ++i) {
        ws.coefficients()[i] /= std::sqrt(precision_[i]);
    }
    Grid colored = ifft2(ws);
    Grid out = mean_;
    for (int i = 0; i < out.size(); ++i) out.data()[i] += colored.data()[i];
    return out;
}

namespace {

// Shared spectral construction for both likelihood steps. `transfer` holds
// the circulant operator's eigenvalues (sqrt(HW) times the unitary spectrum
// of the convolver); `coupled` is the quadratically coupled point.
GaussianConditional build_conditional(const SpectralGrid& transfer, const Grid& y,
                                      const Grid& coupled, double rho, double sigma_y) {
    require_positive_scale(rho, "coupling rho");
    require_positive_scale(sigma_y, "noise sigma");
    SpectralGrid y_hat = fft2(y);
    SpectralGrid c_hat = fft2(coupled);
    int n = y_hat.size();
    double inv_sigma2 = 1.0 / (sigma_y * sigma_y);
    double inv_rho2 = 1.0 / (rho * rho);
    std::vector<double> precision(n);
    SpectralGrid mean(y_hat.height(), y_hat.width());
    for (int i = 0; i < n; ++i) {
        std::complex<double> lam = transfer.coefficients()[i];
        double d = std::norm(lam) * inv_sigma2 + inv_rho2;
        precision[i] = d;
        mean.coefficients()[i] =
            (std::conj(lam) * y_hat.coefficients()[i] * inv_sigma2 +
             c_hat.coefficients()[i] * inv_rho2) /
            d;
    }
    return GaussianConditional::from_spectral(std::move(precision), std::move(mean));
}

SpectralGrid operator_eigenvalues(const SpectralGrid& unitary_spectrum) {
    int h = unitary_spectrum.height(), w = unitary_spectrum.width();
    double scale = std::sqrt(static_cast<double>(h) * w);
    SpectralGrid out(h, w);
    for (int i = 0; i < out.size(); ++i) {
        out.coefficients()[i] = unitary_spectrum.coefficients()[i] * scale;
    }
    return out;
}

} // namespace

GaussianConditional build_image_conditional(const ForwardModel& model, const Grid& y,
                                            const Grid& x, double rho_x) {
    require_same_shape(model.kernel().grid, y, "build_image_conditional");
    require_same_shape(y, x, "build_image_conditional");
    return build_conditional(operator_eigenvalues(model.spectrum()), y, x, rho_x,
                             model.noise_sigma());
}

GaussianConditional build_kernel_conditional(const Grid& x, const Grid& y,
                                             const Kernel& phi, double rho_phi,
                                             double sigma_y) {
    require_same_shape(x, y, "build_kernel_conditional");
    require_same_shape(y, phi.grid, "build_kernel_conditional");
    return build_conditional(operator_eigenvalues(fft2(x)), y, phi.grid, rho_phi, sigma_y);
}

DenseConditional dense_oracle(const Grid& convolver, const Grid& y,
                              const Grid& coupled, double rho, double sigma_y) {
    require_same_shape(convolver, y, "dense_oracle");
    require_same_shape(y, coupled, "dense_oracle");
    require_positive_scale(rho, "coupling rho");
    require_positive_scale(sigma_y, "noise sigma");
    int h = convolver.height(), w = convolver.width();
    int n = h * w;
    if (n > kDenseOracleMaxPixels) {
        std::ostringstream msg;
        msg << "dense oracle limited to " << kDenseOracleMaxPixels << " pixels, got " << n;
        throw TooLarge(msg.str());
    }

    // Materialize the circulant operator: row p of A convolves the input
    // with the convolver grid, evaluated at pixel p.
    Eigen::MatrixXd A(n, n);
    for (int p = 0; p < n; ++p) {
        int rp = p / w, cp = p % w;
        for (int q = 0; q < n; ++q) {
            int rq = q / w, cq = q % w;
            int dr = ((rp - rq) % h + h) % h;
            int dc = ((cp - cq) % w + w) % w;
            A(p, q) = convolver(dr, dc);
        }
    }

    double inv_sigma2 = 1.0 / (sigma_y * sigma_y);
    double inv_rho2 = 1.0 / (rho * rho);
    Eigen::MatrixXd P = A.transpose() * A * inv_sigma2;
    P.diagonal().array() += inv_rho2;

    Eigen::Map<const Eigen::VectorXd> yv(y.data().data(), n);
    Eigen::Map<const Eigen::VectorXd> cv(coupled.data().data(), n);
    Eigen::VectorXd b = A.transpose() * yv * inv_sigma2 + cv * inv_rho2;

    Eigen::LLT<Eigen::MatrixXd> llt(P);
    if (llt.info() != Eigen::Success) throw Error("dense oracle: precision not positive definite");
    Eigen::VectorXd mean = llt.solve(b);
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(n, n));

    DenseConditional out;
    out.n = n;
    out.mean = Grid::from_data(h, w, std::vector<double>(mean.data(), mean.data() + n));
    out.covariance.assign(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) out.covariance[static_cast<size_t>(i) * n + j] = cov(i, j);
    }
    return out;
}

} // namespace prism
