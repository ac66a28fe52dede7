#pragma once

#include <filesystem>

#include "prism/grid.hpp"

namespace prism {

/// Raw grid binary format, bit-exact:
///   magic "PGRD" | u32le height | u32le width | u8 dtype (0=f64, 1=f32)
///   | row-major payload, little-endian.
enum class PgrdType : uint8_t { f64 = 0, f32 = 1 };

/// Writes via a temp name + rename so readers never observe partial files.
void write_pgrd(const std::filesystem::path& path, const Grid& g, PgrdType type = PgrdType::f64);

/// Throws IoError on bad magic, short payload, or non-finite values.
Grid read_pgrd(const std::filesystem::path& path);

} // namespace prism
