#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>

#include "prism/prior.hpp"

namespace prism {

/// File-exchange protocol for out-of-process denoisers, one directory per
/// endpoint. Requests are `req_<counter>.pgrd` plus `req_<counter>.meta`
/// (UTF-8 lines: `rho=<float>`, optional `measurement=<path>`); the
/// response is `resp_<counter>.pgrd`. The counter is monotone per
/// endpoint and every file is written complete-on-rename, so readers never
/// observe partial payloads.
struct BridgeConfig {
    double timeout_seconds = 10.0;
    double poll_interval_ms = 2.0;
};

/// DenoisingPosteriorSampler that forwards each request over the exchange
/// directory and blocks for the response. One in-flight request per
/// endpoint; the rng argument is unused (the responder owns randomness).
class BridgeSampler final : public MeasurementConditionedSampler {
public:
    BridgeSampler(std::filesystem::path endpoint, BridgeConfig config = {},
                  std::optional<Grid> measurement = std::nullopt);

    /// Throws BridgeTimeout if no response lands in time, MalformedResponse
    /// on shape mismatch or non-finite payload.
    Grid sample(const Grid& v, double rho, RngState& rng) const override;

    const std::filesystem::path& endpoint() const { return endpoint_; }

private:
    std::filesystem::path endpoint_;
    BridgeConfig config_;
    std::optional<std::filesystem::path> measurement_path_;
    mutable std::mutex in_flight_;
    mutable uint64_t counter_ = 0;
};

/// Counterparty side of the protocol: watches an endpoint directory and
/// answers requests with a handler. Runs in-process for tests and inside
/// the standalone responder tool for real external denoisers.
class BridgeResponder {
public:
    using Handler = std::function<Grid(const Grid& v, double rho,
                                       const std::optional<Grid>& measurement)>;

    BridgeResponder(std::filesystem::path endpoint, Handler handler);
    ~BridgeResponder();

    /// Answers pending requests once; returns how many were served.
    int serve_pending();

    /// Background polling thread until stop()/destruction.
    void start(double poll_interval_ms = 2.0);
    void stop();

private:
    std::filesystem::path endpoint_;
    Handler handler_;
    uint64_t next_counter_ = 1;
    std::atomic<bool> running_{false};
    std::thread worker_;
};

} // namespace prism
