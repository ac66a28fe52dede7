#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "prism/errors.hpp"
#include "prism/forward.hpp"
#include "prism/grid.hpp"
#include "prism/likelihood.hpp"
#include "prism/rng.hpp"
#include "test_helpers.hpp"

using namespace prism;
using prism::testing::random_kernel;
using prism::testing::random_uniform_grid;

TEST_CASE("image conditional: delta kernel with equal precisions averages y and x") {
    RngState rng(20);
    Grid y = random_uniform_grid(rng, 8, 8);
    Grid x = random_uniform_grid(rng, 8, 8);
    ForwardModel model(Kernel::delta(8, 8), 0.1);
    GaussianConditional cond = build_image_conditional(model, y, x, 0.1);
    Grid expected(8, 8);
    for (int i = 0; i < expected.size(); ++i) {
        expected.data()[i] = 0.5 * (y.data()[i] + x.data()[i]);
    }
    CHECK(max_abs_diff(cond.mean(), expected) <= 1e-12);
}

TEST_CASE("image conditional: huge rho_x recovers the data") {
    RngState rng(21);
    Grid y = random_uniform_grid(rng, 8, 8);
    Grid x = random_uniform_grid(rng, 8, 8);
    ForwardModel model(Kernel::delta(8, 8), 0.05);
    GaussianConditional cond = build_image_conditional(model, y, x, 1e12);
    CHECK(max_abs_diff(cond.mean(), y) <= 1e-6);
}

TEST_CASE("image conditional: mean matches both dense oracles") {
    RngState rng(22);
    Grid y = random_uniform_grid(rng, 8, 8);
    Grid x = random_uniform_grid(rng, 8, 8);
    Kernel k = random_kernel(rng, 3, 8, 8);
    const double sigma_y = 0.07, rho_x = 0.3;

    ForwardModel model(k, sigma_y);
    GaussianConditional fast = build_image_conditional(model, y, x, rho_x);

    oracle::DenseSolve hand = oracle::dense_conditional(k.grid, y, x, rho_x, sigma_y);
    DenseConditional lib = dense_oracle(k.grid, y, x, rho_x, sigma_y);

    double scale = std::max(1.0, l2_norm(hand.mean));
    CHECK(l2_norm_diff(fast.mean(), hand.mean) <= 1e-10 * scale);
    CHECK(l2_norm_diff(fast.mean(), lib.mean) <= 1e-10 * scale);
    // The two independent dense implementations agree with each other too.
    CHECK(l2_norm_diff(hand.mean, lib.mean) <= 1e-10 * scale);
    double cov_diff = 0.0;
    for (size_t i = 0; i < hand.covariance.size(); ++i) {
        cov_diff = std::max(cov_diff, std::abs(hand.covariance[i] - lib.covariance[i]));
    }
    CHECK(cov_diff <= 1e-10);
}

TEST_CASE("kernel conditional: delta image reduces to scalar blending") {
    RngState rng(23);
    Grid x(8, 8);
    x(0, 0) = 1.0; // delta image: C_x is the identity
    Grid y = random_uniform_grid(rng, 8, 8);
    Kernel phi = random_kernel(rng, 3, 8, 8);
    const double sigma_y = 0.1, rho_phi = 0.2;
    GaussianConditional cond = build_kernel_conditional(x, y, phi, rho_phi, sigma_y);
    // Per-pixel blend: (y/sigma^2 + phi/rho^2) / (1/sigma^2 + 1/rho^2).
    double wy = 1.0 / (sigma_y * sigma_y), wp = 1.0 / (rho_phi * rho_phi);
    Grid expected(8, 8);
    for (int i = 0; i < expected.size(); ++i) {
        expected.data()[i] = (wy * y.data()[i] + wp * phi.grid.data()[i]) / (wy + wp);
    }
    CHECK(max_abs_diff(cond.mean(), expected) <= 1e-12);
}

TEST_CASE("kernel conditional: mean matches the dense oracle via materialized C_x") {
    RngState rng(24);
    Grid x = random_uniform_grid(rng, 8, 8);
    Grid y = random_uniform_grid(rng, 8, 8);
    Kernel phi = random_kernel(rng, 3, 8, 8);
    const double sigma_y = 0.05, rho_phi = 0.4;

    GaussianConditional fast = build_kernel_conditional(x, y, phi, rho_phi, sigma_y);
    oracle::DenseSolve hand = oracle::dense_conditional(x, y, phi.grid, rho_phi, sigma_y);
    CHECK(l2_norm_diff(fast.mean(), hand.mean) <= 1e-10 * std::max(1.0, l2_norm(hand.mean)));
}

TEST_CASE("kernel conditional: vanishing rho_phi pins the mean to phi") {
    RngState rng(25);
    Grid x = random_uniform_grid(rng, 8, 8);
    Grid y = random_uniform_grid(rng, 8, 8);
    Kernel phi = random_kernel(rng, 3, 8, 8);
    GaussianConditional cond = build_kernel_conditional(x, y, phi, 1e-12, 0.05);
    CHECK(max_abs_diff(cond.mean(), phi.grid) <= 1e-6);
}

TEST_CASE("conditional validation: degenerate scales and bad spectra rejected") {
    RngState rng(26);
    Grid y = random_uniform_grid(rng, 4, 4);
    Grid x = random_uniform_grid(rng, 4, 4);
    ForwardModel model(Kernel::delta(4, 4), 0.1);
    CHECK_THROWS_AS(build_image_conditional(model, y, x, 0.0), DegenerateScale);
    CHECK_THROWS_AS(build_image_conditional(model, y, x, -1.0), DegenerateScale);
    ForwardModel noiseless(Kernel::delta(4, 4), 0.0);
    CHECK_THROWS_AS(build_image_conditional(noiseless, y, x, 0.1), DegenerateScale);

    std::vector<double> bad_precision(16, -1.0);
    CHECK_THROWS_AS(GaussianConditional::from_spectral(bad_precision, SpectralGrid(4, 4)),
                    DegenerateScale);
    std::vector<double> short_precision(8, 1.0);
    CHECK_THROWS_AS(GaussianConditional::from_spectral(short_precision, SpectralGrid(4, 4)),
                    ShapeMismatch);
}

TEST_CASE("sample: isotropic case has the advertised variance") {
    // d(f) == 1/rho^2 directly: draws are N(mu, rho^2 I).
    const double rho = 0.7;
    const int h = 8, w = 8;
    RngState rng(27);
    Grid mu = random_uniform_grid(rng, h, w);
    SpectralGrid mu_hat = fft2(mu);
    std::vector<double> d(static_cast<size_t>(h) * w, 1.0 / (rho * rho));
    GaussianConditional cond = GaussianConditional::from_spectral(d, mu_hat);

    const int draws = 100000;
    Grid sum(h, w), sum_sq(h, w);
    for (int i = 0; i < draws; ++i) {
        Grid s = cond.sample(rng);
        for (int j = 0; j < s.size(); ++j) {
            double e = s.data()[j] - mu.data()[j];
            sum.data()[j] += e;
            sum_sq.data()[j] += e * e;
        }
    }
    for (int j = 0; j < sum.size(); ++j) {
        double var = sum_sq.data()[j] / draws - std::pow(sum.data()[j] / draws, 2);
        CHECK(std::abs(var - rho * rho) <= 0.03 * rho * rho);
    }
}

TEST_CASE("sample: empirical covariance matches the dense oracle") {
    RngState rng(28);
    const int h = 4, w = 4, n = h * w;
    Grid y = random_uniform_grid(rng, h, w);
    Grid x = random_uniform_grid(rng, h, w);
    Kernel k = random_kernel(rng, 3, h, w);
    // Covariance entries are O(rho^2); at this scale the 5e-3 bound below is
    // a ~3-sigma CLT bound on the max-entry error over 2e5 draws.
    const double sigma_y = 1.0, rho = 0.7;

    ForwardModel model(k, sigma_y);
    GaussianConditional cond = build_image_conditional(model, y, x, rho);
    oracle::DenseSolve dense = oracle::dense_conditional(k.grid, y, x, rho, sigma_y);

    const int draws = 200000;
    std::vector<double> mean_acc(n, 0.0), cov_acc(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < draws; ++i) {
        Grid s = cond.sample(rng);
        for (int p = 0; p < n; ++p) {
            double ep = s.data()[p] - dense.mean.data()[p];
            mean_acc[p] += ep;
            for (int q = p; q < n; ++q) {
                cov_acc[static_cast<size_t>(p) * n + q] += ep * (s.data()[q] - dense.mean.data()[q]);
            }
        }
    }
    double worst = 0.0;
    for (int p = 0; p < n; ++p) {
        double mp = mean_acc[p] / draws;
        for (int q = p; q < n; ++q) {
            double mq = mean_acc[q] / draws;
            double cov = cov_acc[static_cast<size_t>(p) * n + q] / draws - mp * mq;
            worst = std::max(worst, std::abs(cov - dense.covariance[static_cast<size_t>(p) * n + q]));
        }
    }
    CHECK(worst <= 5e-3);
}

TEST_CASE("sample: fixed seed reproduces exactly") {
    RngState build_rng(29);
    Grid y = random_uniform_grid(build_rng, 8, 8);
    Grid x = random_uniform_grid(build_rng, 8, 8);
    ForwardModel model(random_kernel(build_rng, 3, 8, 8), 0.1);
    GaussianConditional cond = build_image_conditional(model, y, x, 0.2);
    RngState a(30), b(30);
    CHECK(max_abs_diff(cond.sample(a), cond.sample(b)) == 0.0);
}

TEST_CASE("dense oracle: identity operator with equal precisions") {
    RngState rng(31);
    const double rho = 0.35;
    Grid y = random_uniform_grid(rng, 4, 4);
    Grid x = random_uniform_grid(rng, 4, 4);
    Grid delta(4, 4);
    delta(0, 0) = 1.0;
    DenseConditional d = dense_oracle(delta, y, x, rho, rho);
    const int n = 16;
    for (int p = 0; p < n; ++p) {
        for (int q = 0; q < n; ++q) {
            double expected = (p == q) ? rho * rho / 2.0 : 0.0;
            CHECK(std::abs(d.covariance[static_cast<size_t>(p) * n + q] - expected) <= 1e-12);
        }
    }
    // Mean is the equal-precision average.
    for (int p = 0; p < n; ++p) {
        CHECK(std::abs(d.mean.data()[p] - 0.5 * (y.data()[p] + x.data()[p])) <= 1e-12);
    }
}

TEST_CASE("dense oracle: delta kernel mean equals fast path within 1e-12") {
    RngState rng(32);
    Grid y = random_uniform_grid(rng, 6, 6);
    Grid x = random_uniform_grid(rng, 6, 6);
    Grid delta(6, 6);
    delta(0, 0) = 1.0;
    ForwardModel model(Kernel::delta(6, 6), 0.1);
    GaussianConditional fast = build_image_conditional(model, y, x, 0.25);
    DenseConditional dense = dense_oracle(delta, y, x, 0.25, 0.1);
    CHECK(max_abs_diff(fast.mean(), dense.mean) <= 1e-12);
}

TEST_CASE("dense oracle: size cap") {
    Grid big(13, 13, 0.1);
    CHECK_THROWS_AS(dense_oracle(big, big, big, 1.0, 1.0), TooLarge);
    Grid edge(12, 12, 0.1);
    CHECK_NOTHROW(dense_oracle(edge, edge, edge, 1.0, 1.0));
}
