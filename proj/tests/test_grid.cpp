#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "prism/errors.hpp"
#include "prism/fft.hpp"
#include "prism/grid.hpp"
#include "prism/grid_io.hpp"
#include "prism/manifest.hpp"
#include "prism/rng.hpp"
#include "test_helpers.hpp"

using namespace prism;
using prism::testing::fresh_temp_dir;
using prism::testing::random_uniform_grid;

namespace {

double max_spectral_diff(const SpectralGrid& a, const SpectralGrid& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.coefficients()[i] - b.coefficients()[i]));
    }
    return worst;
}

} // namespace

TEST_CASE("grid: construction and shape checks") {
    Grid g(3, 4, 2.5);
    CHECK(g.height() == 3);
    CHECK(g.width() == 4);
    CHECK(g.size() == 12);
    CHECK(g(2, 3) == 2.5);

    CHECK_THROWS_AS(Grid::from_data(2, 2, {1.0, 2.0, 3.0}), ShapeMismatch);
    Grid ok = Grid::from_data(1, 3, {1.0, 2.0, 3.0});
    CHECK(ok(0, 2) == 3.0);

    CHECK(ok.all_finite());
    ok(0, 1) = std::nan("");
    CHECK(!ok.all_finite());

    Grid a(2, 2), b(3, 2);
    CHECK_THROWS_AS(require_same_shape(a, b, "test"), ShapeMismatch);
}

TEST_CASE("grid: reductions") {
    Grid g = Grid::from_data(2, 2, {1.0, 2.0, 3.0, 4.0});
    CHECK(grid_sum(g) == doctest::Approx(10.0));
    CHECK(dot(g, g) == doctest::Approx(30.0));
    CHECK(l2_norm(g) == doctest::Approx(std::sqrt(30.0)));

    Grid h = Grid::from_data(2, 2, {1.0, 2.0, 3.0, 5.0});
    CHECK(max_abs_diff(g, h) == 1.0);
    CHECK(l2_norm_diff(g, h) == 1.0);

    // Neumaier compensation keeps large alternating sums exact even when a
    // late addend cancels the running sum.
    Grid k(1, 3);
    k(0, 0) = 1e16;
    k(0, 1) = 1.0;
    k(0, 2) = -1e16;
    CHECK(grid_sum(k) == 1.0);
}

TEST_CASE("fft2: constant grid concentrates at DC") {
    const double c = 3.25;
    Grid g(4, 4, c);
    SpectralGrid s = fft2(g);
    CHECK(std::abs(s(0, 0) - std::complex<double>(4.0 * c, 0.0)) <= 1e-12);
    for (int i = 1; i < s.size(); ++i) CHECK(std::abs(s.coefficients()[i]) <= 1e-12);
}

TEST_CASE("fft2: impulse has flat spectrum 1/sqrt(HW)") {
    Grid g(4, 4);
    g(0, 0) = 1.0;
    SpectralGrid s = fft2(g);
    for (int i = 0; i < s.size(); ++i) {
        CHECK(std::abs(s.coefficients()[i] - std::complex<double>(0.25, 0.0)) <= 1e-12);
    }
}

TEST_CASE("fft2: matches direct DFT oracle and round-trips") {
    RngState rng(11);
    Grid g = random_uniform_grid(rng, 8, 8);

    SpectralGrid fast = fft2(g);
    SpectralGrid slow = oracle::direct_fft2(g);
    CHECK(max_spectral_diff(fast, slow) <= 1e-12);

    Grid back = ifft2(fast);
    CHECK(max_abs_diff(back, g) <= 1e-12);

    // Parseval under the unitary normalization.
    double spectral_energy = 0.0;
    for (const auto& c : fast.coefficients()) spectral_energy += std::norm(c);
    CHECK(std::abs(std::sqrt(spectral_energy) - l2_norm(g)) <= 1e-10);
}

TEST_CASE("fft2: linearity") {
    RngState rng(12);
    Grid g1 = random_uniform_grid(rng, 6, 9);
    Grid g2 = random_uniform_grid(rng, 6, 9);
    const double a = 1.7, b = -0.4;

    Grid combo(6, 9);
    for (int i = 0; i < combo.size(); ++i) {
        combo.data()[i] = a * g1.data()[i] + b * g2.data()[i];
    }
    SpectralGrid lhs = fft2(combo);
    SpectralGrid s1 = fft2(g1), s2 = fft2(g2);
    SpectralGrid rhs(6, 9);
    for (int i = 0; i < rhs.size(); ++i) {
        rhs.coefficients()[i] = a * s1.coefficients()[i] + b * s2.coefficients()[i];
    }
    CHECK(max_spectral_diff(lhs, rhs) <= 1e-12);
}

TEST_CASE("ifft2: closed-form cases") {
    SpectralGrid flat(4, 4);
    for (auto& c : flat.coefficients()) c = 0.25;
    Grid delta = ifft2(flat);
    CHECK(std::abs(delta(0, 0) - 1.0) <= 1e-12);
    for (int i = 1; i < delta.size(); ++i) CHECK(std::abs(delta.data()[i]) <= 1e-12);

    SpectralGrid zero(5, 3);
    Grid z = ifft2(zero);
    for (double v : z.data()) CHECK(v == 0.0);
}

TEST_CASE("ifft2: inverts the direct-DFT oracle") {
    RngState rng(13);
    Grid g = random_uniform_grid(rng, 8, 8);
    Grid back = ifft2(oracle::direct_fft2(g));
    CHECK(max_abs_diff(back, g) <= 1e-12);
}

TEST_CASE("ifft2: rejects non-Hermitian spectra") {
    RngState rng(14);
    SpectralGrid s = fft2(random_uniform_grid(rng, 8, 8));
    s(3, 5) += std::complex<double>(0.0, 0.5); // break conjugate symmetry
    CHECK_THROWS_AS(ifft2(s), SymmetryViolation);
}

TEST_CASE("rng: law of large numbers bound at 64x64") {
    RngState rng(0);
    Grid g = draw_standard_normal(rng, 64, 64);
    double mean = grid_sum(g) / g.size();
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(4096.0)); // 0.0625
}

TEST_CASE("rng: determinism and stream separation") {
    RngState a(0), b(0), c(1);
    Grid ga = draw_standard_normal(a, 16, 16);
    Grid gb = draw_standard_normal(b, 16, 16);
    Grid gc = draw_standard_normal(c, 16, 16);
    CHECK(max_abs_diff(ga, gb) == 0.0);
    CHECK(max_abs_diff(ga, gc) > 0.0);

    RngState base(7);
    RngState s1 = base.split(1);
    RngState s2 = base.split(2);
    Grid g1 = draw_standard_normal(s1, 8, 8);
    Grid g2 = draw_standard_normal(s2, 8, 8);
    CHECK(max_abs_diff(g1, g2) > 0.0);
}

TEST_CASE("rng: normal consumes exactly two raw words") {
    RngState a(42), b(42);
    (void)a.normal();
    (void)b.raw();
    (void)b.raw();
    CHECK(a.raw() == b.raw());
}

TEST_CASE("rng: serialize round-trips mid-stream") {
    RngState a(99);
    for (int i = 0; i < 17; ++i) (void)a.normal();
    std::string blob = a.serialize();
    RngState b = RngState::deserialize(blob);
    CHECK(b.seed() == a.seed());
    for (int i = 0; i < 32; ++i) CHECK(a.raw() == b.raw());

    CHECK_THROWS_AS(RngState::deserialize("not a state"), IoError);
    CHECK_THROWS_AS(RngState::deserialize(""), IoError);
}

TEST_CASE("rng: uniform stays in [0,1)") {
    RngState rng(3);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("pgrd: f64 round-trip is bit-exact") {
    auto dir = fresh_temp_dir("pgrd");
    RngState rng(5);
    Grid g = random_uniform_grid(rng, 7, 13);
    g(0, 0) = 1e-300;
    g(6, 12) = -0.1;

    write_pgrd(dir / "g.pgrd", g);
    Grid back = read_pgrd(dir / "g.pgrd");
    CHECK(back.height() == 7);
    CHECK(back.width() == 13);
    CHECK(max_abs_diff(g, back) == 0.0);

    write_pgrd(dir / "g32.pgrd", g, PgrdType::f32);
    Grid back32 = read_pgrd(dir / "g32.pgrd");
    CHECK(max_abs_diff(g, back32) <= 1e-7);
}

TEST_CASE("pgrd: malformed files raise IoError") {
    auto dir = fresh_temp_dir("pgrd_bad");

    CHECK_THROWS_AS(read_pgrd(dir / "missing.pgrd"), IoError);

    std::ofstream(dir / "magic.pgrd") << "NOPE1234567890";
    CHECK_THROWS_AS(read_pgrd(dir / "magic.pgrd"), IoError);

    Grid g(4, 4, 1.0);
    write_pgrd(dir / "trunc.pgrd", g);
    std::filesystem::resize_file(dir / "trunc.pgrd", 40);
    CHECK_THROWS_AS(read_pgrd(dir / "trunc.pgrd"), IoError);

    // Hand-craft a payload containing a NaN.
    {
        std::ofstream out(dir / "nan.pgrd", std::ios::binary);
        out.write("PGRD", 4);
        uint32_t one = 1;
        out.write(reinterpret_cast<const char*>(&one), 4);
        out.write(reinterpret_cast<const char*>(&one), 4);
        char dtype = 0;
        out.write(&dtype, 1);
        double nan = std::nan("");
        out.write(reinterpret_cast<const char*>(&nan), 8);
    }
    CHECK_THROWS_AS(read_pgrd(dir / "nan.pgrd"), IoError);
}

TEST_CASE("manifest: round-trip and typed accessors") {
    auto dir = fresh_temp_dir("manifest");
    Manifest m;
    m.set("name", "trial 7 = ok");
    m.set_f64("sigma", 0.1);
    m.set_f64("tiny", 4.9406564584124654e-324);
    m.set_i64("k", -42);
    m.set_u64("seed", 18446744073709551615ULL);
    m.save(dir / "m.manifest");

    Manifest back = Manifest::load(dir / "m.manifest");
    CHECK(back.get("name") == "trial 7 = ok");
    CHECK(back.get_f64("sigma") == 0.1);
    CHECK(back.get_f64("tiny") == 4.9406564584124654e-324);
    CHECK(back.get_i64("k") == -42);
    CHECK(back.get_u64("seed") == 18446744073709551615ULL);
    CHECK(back.has("name"));
    CHECK(!back.has("absent"));
    CHECK(back.get_or("absent", "fallback") == "fallback");

    CHECK_THROWS_AS(back.get("absent"), ConfigError);
    CHECK_THROWS_AS(back.get_f64("name"), ConfigError);

    Manifest bad;
    CHECK_THROWS_AS(bad.set("", "v"), ConfigError);
    CHECK_THROWS_AS(bad.set("a=b", "v"), ConfigError);
    CHECK_THROWS_AS(bad.set("key", "line\nbreak"), ConfigError);
}

TEST_CASE("manifest: set overwrites in place and save is deterministic") {
    Manifest m;
    m.set("a", "1");
    m.set("b", "2");
    m.set("a", "3");
    CHECK(m.entries().size() == 2);
    CHECK(m.get("a") == "3");
    CHECK(m.entries()[0].first == "a");
}

TEST_CASE("manifest: fnv1a64 known vectors and f64 formatting") {
    CHECK(fnv1a64("") == 14695981039346656037ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);

    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
        CHECK(std::stod(format_f64(v)) == v);
    }
}
