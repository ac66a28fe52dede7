#include "prism/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "prism/errors.hpp"

namespace prism {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RngState::RngState(uint64_t seed) : seed_(seed), engine_(seed) {}

uint64_t RngState::raw() { return engine_(); }

double RngState::uniform() {
    // 53-bit mantissa in [0, 1).
    return static_cast<double>(raw() >> 11) * 0x1.0p-53;
}

void RngState::normal_pair(double& a, double& b) {
    // Box-Muller with a fixed draw count of two raw words per pair, so the
    // generator state is fully captured by the engine alone (no cached spare).
    double u1 = (static_cast<double>(raw() >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
    double u2 = static_cast<double>(raw() >> 11) * 0x1.0p-53;         // [0, 1)
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    a = r * std::cos(theta);
    b = r * std::sin(theta);
}

double RngState::normal() {
    double a, b;
    normal_pair(a, b);
    (void)b;
    return a;
}

RngState RngState::split(uint64_t stream) const {
    uint64_t derived = splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    return RngState(derived);
}

std::string RngState::serialize() const {
    std::ostringstream out;
    out << seed_ << ' ' << engine_;
    return out.str();
}

RngState RngState::deserialize(const std::string& text) {
    std::istringstream in(text);
    uint64_t seed = 0;
    if (!(in >> seed)) throw IoError("rng state: missing seed");
    RngState state(seed);
    if (!(in >> state.engine_)) throw IoError("rng state: malformed engine text");
    return state;
}

Grid draw_standard_normal(RngState& rng, int height, int width) {
    Grid g(height, width);
    double* d = g.data().data();
    int n = g.size();
    int i = 0;
    for (; i + 1 < n; i += 2) rng.normal_pair(d[i], d[i + 1]);
    if (i < n) d[i] = rng.normal();
    return g;
}

} // namespace prism
