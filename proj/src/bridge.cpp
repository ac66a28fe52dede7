#include "prism/bridge.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "prism/errors.hpp"
#include "prism/grid_io.hpp"
#include "prism/log.hpp"
#include "prism/manifest.hpp"

namespace prism {

namespace {

namespace fs = std::filesystem;

// Parses the counter out of req_<k>.meta / req_<k>.pgrd / resp_<k>.pgrd
// names; returns 0 for anything else.
uint64_t file_counter(const std::string& stem_prefix, const fs::path& p,
                      const std::string& extension) {
    const std::string name = p.filename().string();
    if (name.size() <= stem_prefix.size() + extension.size()) return 0;
    if (name.compare(0, stem_prefix.size(), stem_prefix) != 0) return 0;
    if (name.compare(name.size() - extension.size(), extension.size(), extension) != 0) {
        return 0;
    }
    std::string digits =
        name.substr(stem_prefix.size(), name.size() - stem_prefix.size() - extension.size());
    if (digits.empty()) return 0;
    uint64_t value = 0;
    for (char c : digits) {
        if (c < '0' || c > '9') return 0;
        value = value * 10 + static_cast<uint64_t>(c - '0');
    }
    return value;
}

uint64_t max_existing_counter(const fs::path& endpoint) {
    uint64_t max_seen = 0;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(endpoint, ec)) {
        const fs::path& p = entry.path();
        max_seen = std::max({max_seen, file_counter("req_", p, ".meta"),
                             file_counter("req_", p, ".pgrd"),
                             file_counter("resp_", p, ".pgrd")});
    }
    return max_seen;
}

void write_text_file(const fs::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw IoError("short write: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

} // namespace

BridgeSampler::BridgeSampler(std::filesystem::path endpoint, BridgeConfig config,
                             std::optional<Grid> measurement)
    : endpoint_(std::move(endpoint)), config_(config) {
    if (!(config_.timeout_seconds > 0.0)) throw ConfigError("bridge timeout must be positive");
    if (!(config_.poll_interval_ms > 0.0)) throw ConfigError("bridge poll interval must be positive");
    std::error_code ec;
    fs::create_directories(endpoint_, ec);
    counter_ = max_existing_counter(endpoint_);
    if (measurement) {
        fs::path mpath = endpoint_ / "measurement.pgrd";
        write_pgrd(mpath, *measurement);
        measurement_path_ = mpath;
    }
}

Grid BridgeSampler::sample(const Grid& v, double rho, RngState& rng) const {
    (void)rng; // randomness is owned by the responder
    std::scoped_lock lock(in_flight_);
    uint64_t id = ++counter_;
    const std::string tag = std::to_string(id);
    fs::path req_grid = endpoint_ / ("req_" + tag + ".pgrd");
    fs::path req_meta = endpoint_ / ("req_" + tag + ".meta");
    fs::path resp = endpoint_ / ("resp_" + tag + ".pgrd");

    // Payload first, meta last: the meta file is the commit signal.
    write_pgrd(req_grid, v);
    std::ostringstream meta;
    meta << "rho=" << format_f64(rho) << '\n';
    if (measurement_path_) meta << "measurement=" << measurement_path_->string() << '\n';
    write_text_file(req_meta, meta.str());

    using Clock = std::chrono::steady_clock;
    auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(config_.timeout_seconds));
    auto poll = std::chrono::duration<double, std::milli>(config_.poll_interval_ms);
    bool found = false;
    while (Clock::now() < deadline) {
        std::error_code ec;
        if (fs::exists(resp, ec)) {
            found = true;
            break;
        }
        auto remaining = deadline - Clock::now();
        auto nap = std::chrono::duration_cast<Clock::duration>(poll);
        std::this_thread::sleep_for(std::min(nap, remaining));
    }
    if (!found) {
        std::error_code ec;
        found = fs::exists(resp, ec);
    }
    if (!found) {
        std::ostringstream msg;
        msg << "no response from " << endpoint_.string() << " for request " << id << " within "
            << config_.timeout_seconds << " s";
        throw BridgeTimeout(msg.str());
    }

    Grid out;
    try {
        out = read_pgrd(resp);
    } catch (const IoError& e) {
        throw MalformedResponse(std::string("bridge response unreadable: ") + e.what());
    }
    std::error_code ec;
    fs::remove(resp, ec);
    if (!same_shape(out, v)) {
        std::ostringstream msg;
        msg << "bridge response shape " << out.height() << "x" << out.width()
            << " does not match request " << v.height() << "x" << v.width();
        throw MalformedResponse(msg.str());
    }
    return out;
}

BridgeResponder::BridgeResponder(std::filesystem::path endpoint, Handler handler)
    : endpoint_(std::move(endpoint)), handler_(std::move(handler)) {
    if (!handler_) throw ConfigError("bridge responder requires a handler");
    std::error_code ec;
    fs::create_directories(endpoint_, ec);
}

BridgeResponder::~BridgeResponder() { stop(); }

int BridgeResponder::serve_pending() {
    std::vector<uint64_t> pending;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(endpoint_, ec)) {
        uint64_t id = file_counter("req_", entry.path(), ".meta");
        if (id > 0) pending.push_back(id);
    }
    std::sort(pending.begin(), pending.end());

    int served = 0;
    for (uint64_t id : pending) {
        const std::string tag = std::to_string(id);
        fs::path req_meta = endpoint_ / ("req_" + tag + ".meta");
        fs::path req_grid = endpoint_ / ("req_" + tag + ".pgrd");
        fs::path resp = endpoint_ / ("resp_" + tag + ".pgrd");

        double rho = 0.0;
        std::optional<Grid> measurement;
        {
            std::ifstream meta(req_meta);
            if (!meta) continue;
            std::string line;
            bool have_rho = false;
            while (std::getline(meta, line)) {
                if (line.rfind("rho=", 0) == 0) {
                    rho = std::strtod(line.c_str() + 4, nullptr);
                    have_rho = true;
                } else if (line.rfind("measurement=", 0) == 0) {
                    measurement = read_pgrd(fs::path(line.substr(12)));
                }
            }
            if (!have_rho) {
                log_error("bridge request " + tag + " missing rho; skipping");
                continue;
            }
        }
        Grid v = read_pgrd(req_grid);
        Grid out = handler_(v, rho, measurement);
        write_pgrd(resp, out);
        fs::remove(req_meta, ec);
        fs::remove(req_grid, ec);
        ++served;
        next_counter_ = std::max(next_counter_, id + 1);
    }
    return served;
}

void BridgeResponder::start(double poll_interval_ms) {
    if (running_.exchange(true)) return;
    worker_ = std::thread([this, poll_interval_ms] {
        auto nap = std::chrono::duration<double, std::milli>(poll_interval_ms);
        while (running_.load()) {
            try {
                serve_pending();
            } catch (const std::exception& e) {
                log_error(std::string("bridge responder: ") + e.what());
            }
            std::this_thread::sleep_for(nap);
        }
    });
}

void BridgeResponder::stop() {
    if (!running_.exchange(false)) return;
    if (worker_.joinable()) worker_.join();
}

} // namespace prism
