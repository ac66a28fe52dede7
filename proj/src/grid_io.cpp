#include "prism/grid_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "prism/errors.hpp"

namespace prism {

namespace {

constexpr char kMagic[4] = {'P', 'G', 'R', 'D'};

void put_u32le(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

uint32_t get_u32le(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

template <typename T>
void append_le(std::string& out, T value) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using Bits = std::conditional_t<sizeof(T) == 4, uint32_t, uint64_t>;
    auto bits = std::bit_cast<Bits>(value);
    for (size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
}

template <typename T>
T read_le(const unsigned char* p) {
    using Bits = std::conditional_t<sizeof(T) == 4, uint32_t, uint64_t>;
    Bits bits = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
        bits |= static_cast<Bits>(p[i]) << (8 * i);
    }
    return std::bit_cast<T>(bits);
}

} // namespace

void write_pgrd(const std::filesystem::path& path, const Grid& grid, PgrdType dtype) {
    std::string payload;
    payload.reserve(13 + static_cast<size_t>(grid.size()) * (dtype == PgrdType::f64 ? 8 : 4));
    payload.append(kMagic, 4);
    put_u32le(payload, static_cast<uint32_t>(grid.height()));
    put_u32le(payload, static_cast<uint32_t>(grid.width()));
    payload.push_back(static_cast<char>(dtype));
    for (double v : grid.data()) {
        if (dtype == PgrdType::f64) {
            append_le(payload, v);
        } else {
            append_le(payload, static_cast<float>(v));
        }
    }

    // Write to a sibling temp file and rename so readers polling the target
    // path never observe a partial file.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!out) throw IoError("short write: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

Grid read_pgrd(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() < 13) throw IoError("truncated grid file: " + path.string());
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    if (std::memcmp(p, kMagic, 4) != 0) throw IoError("bad magic in " + path.string());
    uint32_t height = get_u32le(p + 4);
    uint32_t width = get_u32le(p + 8);
    uint8_t dtype = p[12];
    if (dtype != 0 && dtype != 1) {
        std::ostringstream msg;
        msg << "unknown dtype " << int(dtype) << " in " << path.string();
        throw IoError(msg.str());
    }
    if (height == 0 || width == 0 || height > (1u << 20) || width > (1u << 20)) {
        throw IoError("implausible shape in " + path.string());
    }
    size_t n = static_cast<size_t>(height) * width;
    size_t elem = dtype == 0 ? 8 : 4;
    if (raw.size() != 13 + n * elem) {
        throw IoError("payload length mismatch in " + path.string());
    }
    std::vector<double> data(n);
    const unsigned char* payload = p + 13;
    for (size_t i = 0; i < n; ++i) {
        data[i] = dtype == 0 ? read_le<double>(payload + 8 * i)
                             : static_cast<double>(read_le<float>(payload + 4 * i));
    }
    Grid g = Grid::from_data(static_cast<int>(height), static_cast<int>(width), std::move(data));
    if (!g.all_finite()) throw IoError("non-finite values in " + path.string());
    return g;
}

} // namespace prism
