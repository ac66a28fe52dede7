#pragma once

#include <filesystem>
#include <vector>

#include "prism/grid.hpp"

namespace prism {

/// Reads a PNG as a single [0,1] grayscale grid (Rec.709 luminance for
/// color inputs).
Grid read_png_gray(const std::filesystem::path& path);

/// Reads each color channel as its own [0,1] grid (1 entry for grayscale).
std::vector<Grid> read_png_channels(const std::filesystem::path& path);

/// 8-bit grayscale export, presentation only. With autoscale the grid's
/// [min,max] maps to [0,255]; otherwise values are clamped to [0,1].
void write_png_gray(const std::filesystem::path& path, const Grid& g, bool autoscale = false);

} // namespace prism
