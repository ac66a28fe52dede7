#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "prism/errors.hpp"
#include "prism/fft.hpp"
#include "prism/forward.hpp"
#include "prism/grid.hpp"
#include "prism/rng.hpp"
#include "test_helpers.hpp"

using namespace prism;
using prism::testing::random_kernel;
using prism::testing::random_uniform_grid;

TEST_CASE("apply: delta kernel is the identity") {
    RngState rng(1);
    Grid x = random_uniform_grid(rng, 8, 8);
    ForwardModel model(Kernel::delta(8, 8), 0.05);
    CHECK(max_abs_diff(apply(model, x), x) <= 1e-12);
}

TEST_CASE("apply: uniform kernel averages") {
    RngState rng(2);
    Grid x = random_uniform_grid(rng, 8, 8);
    Kernel uniform{Grid(8, 8, 1.0 / 64.0), std::nullopt, true};
    Grid out = apply(ForwardModel(uniform, 0.0), x);
    double mean = grid_sum(x) / x.size();
    for (double v : out.data()) CHECK(std::abs(v - mean) <= 1e-12);
}

TEST_CASE("apply: matches the direct convolution oracle") {
    RngState rng(3);
    Grid x = random_uniform_grid(rng, 8, 8);
    Kernel k = random_kernel(rng, 3, 8, 8);
    Grid fast = apply(ForwardModel(k, 0.0), x);
    Grid slow = oracle::direct_convolve(x, k.grid);
    CHECK(max_abs_diff(fast, slow) <= 1e-10 * std::max(1.0, l2_norm(slow)));
}

TEST_CASE("apply: shape mismatch and bad sigma are rejected") {
    RngState rng(4);
    Kernel k = random_kernel(rng, 3, 8, 8);
    ForwardModel model(k, 0.0);
    Grid wrong(4, 4, 1.0);
    CHECK_THROWS_AS(apply(model, wrong), ShapeMismatch);
    CHECK_THROWS_AS(ForwardModel(k, -1.0), DegenerateScale);
    CHECK_THROWS_AS(ForwardModel(k, std::nan("")), DegenerateScale);
}

TEST_CASE("adjoint: delta kernel is the identity") {
    RngState rng(5);
    Grid y = random_uniform_grid(rng, 8, 8);
    ForwardModel model(Kernel::delta(8, 8), 0.0);
    CHECK(max_abs_diff(adjoint(model, y), y) <= 1e-12);
}

TEST_CASE("adjoint: pairing <Hx, y> == <x, H^T y> over 100 random triples") {
    RngState rng(6);
    for (int t = 0; t < 100; ++t) {
        Kernel k = random_kernel(rng, 3 + 2 * (t % 3), 8, 8);
        Grid x = random_uniform_grid(rng, 8, 8);
        Grid y = random_uniform_grid(rng, 8, 8);
        ForwardModel model(k, 0.0);
        double lhs = dot(apply(model, x), y);
        double rhs = dot(x, adjoint(model, y));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("adjoint: symmetric kernels are self-adjoint") {
    RngState rng(7);
    // Symmetrize a random kernel: k(r, c) = k(-r, -c) with wrap-around.
    Grid raw = random_kernel(rng, 5, 8, 8).grid;
    Grid sym(8, 8);
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 8; ++c) {
            sym(r, c) = 0.5 * (raw(r, c) + raw((8 - r) % 8, (8 - c) % 8));
        }
    }
    ForwardModel model(Kernel{sym, 5, false}, 0.0);
    Grid y = random_uniform_grid(rng, 8, 8);
    CHECK(max_abs_diff(adjoint(model, y), apply(model, y)) <= 1e-12);
}

TEST_CASE("measure: sigma 0 equals apply exactly") {
    RngState data_rng(8), noise_rng(9);
    Grid x = random_uniform_grid(data_rng, 8, 8);
    Kernel k = random_kernel(data_rng, 3, 8, 8);
    ForwardModel model(k, 0.0);
    CHECK(max_abs_diff(measure(model, x, noise_rng), apply(model, x)) == 0.0);
}

TEST_CASE("measure: empirical noise deviation at sigma 0.05") {
    RngState rng(10);
    Grid x(64, 64, 0.5);
    ForwardModel model(Kernel::delta(64, 64), 0.05);
    Grid y = measure(model, x, rng);
    Grid clean = apply(model, x);
    double sd = l2_norm_diff(y, clean) / std::sqrt(static_cast<double>(x.size()));
    CHECK(sd >= 0.04);
    CHECK(sd <= 0.06);
}

TEST_CASE("measure: fixed seed reproduces") {
    RngState a(11), b(11);
    Grid x(16, 16, 0.3);
    ForwardModel model(Kernel::delta(16, 16), 0.1);
    CHECK(max_abs_diff(measure(model, x, a), measure(model, x, b)) == 0.0);
}

TEST_CASE("commute: delta kernel returns x") {
    RngState rng(12);
    Grid x = random_uniform_grid(rng, 8, 8);
    CHECK(max_abs_diff(commute(x, Kernel::delta(8, 8)), x) <= 1e-12);
}

TEST_CASE("commute: bit-identical to apply with roles swapped") {
    RngState rng(13);
    for (int t = 0; t < 20; ++t) {
        Grid x = random_uniform_grid(rng, 8, 8);
        Kernel m = random_kernel(rng, 5, 8, 8);
        Grid via_apply = apply(ForwardModel(m, 0.0), x);
        Grid via_commute = commute(x, m);
        CHECK(max_abs_diff(via_apply, via_commute) == 0.0);
    }
}

TEST_CASE("commute: matches the direct convolution oracle") {
    RngState rng(14);
    Grid x = random_uniform_grid(rng, 6, 9);
    Kernel m = random_kernel(rng, 3, 6, 9);
    Grid slow = oracle::direct_convolve(x, m.grid);
    CHECK(max_abs_diff(commute(x, m), slow) <= 1e-10 * std::max(1.0, l2_norm(slow)));
}

TEST_CASE("kernel embedding: crop inverts embed") {
    RngState rng(15);
    Grid patch = random_uniform_grid(rng, 5, 5);
    Kernel k = Kernel::embed_centered(patch, 16, 16);
    CHECK(k.support.has_value());
    CHECK(*k.support == 5);
    CHECK(max_abs_diff(k.crop_centered(5), patch) == 0.0);
    CHECK(std::abs(grid_sum(k.grid) - grid_sum(patch)) <= 1e-12);

    CHECK_THROWS_AS(Kernel::embed_centered(patch, 4, 4), BadSupport);
    CHECK_THROWS_AS(k.crop_centered(0), BadSupport);
    CHECK_THROWS_AS(k.crop_centered(17), BadSupport);
}

TEST_CASE("spectral consistency: |h_hat|^2 are the eigenvalues of H^T H") {
    RngState rng(16);
    const int h = 6, w = 6, n = h * w;
    Kernel k = random_kernel(rng, 3, h, w);

    // Materialize H column by column, then H^T H.
    std::vector<double> H(static_cast<size_t>(n) * n);
    for (int q = 0; q < n; ++q) {
        Grid unit(h, w);
        unit.data()[q] = 1.0;
        Grid col = oracle::direct_convolve(unit, k.grid);
        for (int p = 0; p < n; ++p) H[static_cast<size_t>(p) * n + q] = col.data()[p];
    }

    // The DFT basis diagonalizes H^T H; check the Rayleigh quotient of each
    // (real-valued) cos/sin eigenvector pair against |lambda(f)|^2.
    ForwardModel model(k, 0.0);
    const auto& spec = model.spectrum();
    for (int fu = 0; fu < h; ++fu) {
        for (int fv = 0; fv < w; ++fv) {
            std::complex<double> lambda = std::sqrt(static_cast<double>(n)) * spec(fu, fv);
            double target = std::norm(lambda);

            // Complex eigenvector e(f) applied through the real matrix.
            std::vector<std::complex<double>> vec(static_cast<size_t>(n));
            for (int r = 0; r < h; ++r) {
                for (int c = 0; c < w; ++c) {
                    double phase = 2.0 * std::numbers::pi *
                                   (static_cast<double>(fu) * r / h + static_cast<double>(fv) * c / w);
                    vec[static_cast<size_t>(r) * w + c] = {std::cos(phase), std::sin(phase)};
                }
            }
            std::vector<std::complex<double>> hv(static_cast<size_t>(n), {0.0, 0.0});
            for (int p = 0; p < n; ++p) {
                for (int q = 0; q < n; ++q) hv[p] += H[static_cast<size_t>(p) * n + q] * vec[q];
            }
            // ||H e||^2 / ||e||^2 = |lambda|^2.
            double num = 0.0;
            for (const auto& v : hv) num += std::norm(v);
            CHECK(std::abs(num / n - target) <= 1e-10 * std::max(1.0, target));
        }
    }
}

TEST_CASE("mass conservation: normalized kernels preserve the grid sum") {
    RngState rng(17);
    Grid x = random_uniform_grid(rng, 16, 16);
    Kernel k = random_kernel(rng, 5, 16, 16);
    Grid out = apply(ForwardModel(k, 0.0), x);
    CHECK(std::abs(grid_sum(out) - grid_sum(x)) <= 1e-9 * std::abs(grid_sum(x)));
}

TEST_CASE("gaussian_smooth: preserves mass and is the identity at sigma 0") {
    RngState rng(18);
    Grid x = random_uniform_grid(rng, 16, 16);
    CHECK(max_abs_diff(gaussian_smooth(x, 0.0), x) == 0.0);
    Grid s = gaussian_smooth(x, 2.0);
    CHECK(std::abs(grid_sum(s) - grid_sum(x)) <= 1e-9 * std::abs(grid_sum(x)));
    // Smoothing shrinks the deviation around the mean.
    double mean = grid_sum(x) / x.size();
    Grid flat(16, 16, mean);
    CHECK(l2_norm_diff(s, flat) < l2_norm_diff(x, flat));
    CHECK_THROWS_AS(gaussian_smooth(x, -1.0), DegenerateScale);
}
