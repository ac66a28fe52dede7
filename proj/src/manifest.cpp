#include "prism/manifest.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "prism/errors.hpp"

namespace prism {

uint64_t fnv1a64(const std::string& text) {
    uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string format_f64(double value) {
    // %.17g round-trips every finite double through text.
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::optional<std::string> Manifest::find(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    return std::nullopt;
}

void Manifest::set(const std::string& key, const std::string& value) {
    if (key.empty() || key.find('=') != std::string::npos ||
        key.find('\n') != std::string::npos) {
        throw ConfigError("bad manifest key: '" + key + "'");
    }
    if (value.find('\n') != std::string::npos) {
        throw ConfigError("manifest value contains newline for key " + key);
    }
    for (auto& e : entries_) {
        if (e.first == key) {
            e.second = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void Manifest::set_f64(const std::string& key, double value) { set(key, format_f64(value)); }

void Manifest::set_i64(const std::string& key, int64_t value) {
    set(key, std::to_string(value));
}

void Manifest::set_u64(const std::string& key, uint64_t value) {
    set(key, std::to_string(value));
}

bool Manifest::has(const std::string& key) const { return find(key).has_value(); }

std::string Manifest::get(const std::string& key) const {
    auto v = find(key);
    if (!v) throw ConfigError("manifest missing key: " + key);
    return *v;
}

std::string Manifest::get_or(const std::string& key, const std::string& fallback) const {
    auto v = find(key);
    return v ? *v : fallback;
}

double Manifest::get_f64(const std::string& key) const {
    const std::string text = get(key);
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') {
        throw ConfigError("manifest key " + key + " is not a number: " + text);
    }
    return v;
}

int64_t Manifest::get_i64(const std::string& key) const {
    const std::string text = get(key);
    try {
        size_t pos = 0;
        int64_t v = std::stoll(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("manifest key " + key + " is not an integer: " + text);
    }
}

uint64_t Manifest::get_u64(const std::string& key) const {
    const std::string text = get(key);
    try {
        size_t pos = 0;
        uint64_t v = std::stoull(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("manifest key " + key + " is not an unsigned integer: " + text);
    }
}

void Manifest::save(const std::filesystem::path& path) const {
    std::ostringstream out;
    for (const auto& [key, value] : entries_) out << key << '=' << value << '\n';
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
        if (!file) throw IoError("cannot open for writing: " + tmp.string());
        const std::string text = out.str();
        file.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!file) throw IoError("short write: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

Manifest Manifest::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    Manifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << path.string() << ":" << lineno << ": expected key=value";
            throw IoError(msg.str());
        }
        m.set(line.substr(0, eq), line.substr(eq + 1));
    }
    return m;
}

} // namespace prism
