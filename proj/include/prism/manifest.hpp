#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace prism {

/// UTF-8 key=value file, order-preserving and deterministic on save.
/// Used for instance provenance, checkpoints, and run manifests.
class Manifest {
public:
    void set(const std::string& key, const std::string& value);
    void set_f64(const std::string& key, double value);   // round-trips exactly
    void set_i64(const std::string& key, int64_t value);
    void set_u64(const std::string& key, uint64_t value);

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;        // throws ConfigError if absent
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_f64(const std::string& key) const;
    int64_t get_i64(const std::string& key) const;
    uint64_t get_u64(const std::string& key) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    void save(const std::filesystem::path& path) const;
    static Manifest load(const std::filesystem::path& path);

private:
    std::optional<std::string> find(const std::string& key) const;
    std::vector<std::pair<std::string, std::string>> entries_;
};

uint64_t fnv1a64(const std::string& text);

/// Formats a double so that parsing it back recovers the same bits.
std::string format_f64(double value);

} // namespace prism
