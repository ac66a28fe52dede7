#pragma once

#include <filesystem>
#include <string>

#include "prism/forward.hpp"
#include "prism/grid.hpp"
#include "prism/prior.hpp"
#include "prism/rng.hpp"

namespace prism::testing {

inline Grid random_uniform_grid(RngState& rng, int h, int w) {
    Grid g(h, w);
    for (double& v : g.data()) v = rng.uniform();
    return g;
}

inline Grid random_normal_grid(RngState& rng, int h, int w) {
    return draw_standard_normal(rng, h, w);
}

/// Nonnegative normalized kernel with an s x s support patch, embedded on an
/// h x w grid.
inline Kernel random_kernel(RngState& rng, int s, int h, int w) {
    Grid patch(s, s);
    for (double& v : patch.data()) v = rng.uniform() + 1e-3;
    return project_kernel(Kernel::embed_centered(patch, h, w));
}

/// Fresh unique directory under the system temp root.
inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("prism_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace prism::testing
