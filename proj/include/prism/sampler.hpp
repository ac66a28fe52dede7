#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "prism/likelihood.hpp"
#include "prism/prior.hpp"

namespace prism {

/// Exponentially annealed coupling deviations:
///   rho^k = rho_max * (rho_min/rho_max)^((k-1)/(K-1)),  k = 1..K.
/// Strictly decreasing when rho_max > rho_min; constant schedules
/// (rho_max == rho_min) are allowed for stationary chains.
class AnnealingSchedule {
public:
    AnnealingSchedule(double rho_max, double rho_min, int iterations);

    double at(int k) const; // k in [1, iterations]
    const std::vector<double>& values() const { return values_; }
    double rho_max() const { return rho_max_; }
    double rho_min() const { return rho_min_; }
    int iterations() const { return static_cast<int>(values_.size()); }

private:
    double rho_max_, rho_min_;
    std::vector<double> values_;
};

/// Full Markov-chain state: the quadruple (x, z, phi, m), the iteration
/// counter, and the owned random stream.
struct ChainState {
    Grid x, z;
    Kernel phi, m;
    int k = 0;
    RngState rng;
};

enum class EstimationMode { kSingleSample, kPosteriorMean };

struct ChainConfig {
    int iterations = 200;
    double rho_x_max = 1.0;
    double rho_x_min = 0.01;
    double rho_phi_max = 1.0;
    double rho_phi_min = 0.01;
    EstimationMode mode = EstimationMode::kSingleSample;
    int sample_count = 20;   // posterior-mean mode
    int burn_in = -1;        // -1: default to iterations - sample_count * thin
    int thin = 1;
    uint64_t seed = 0;
    bool project_kernel = true;
    int checkpoint_every = 50;
    std::filesystem::path checkpoint_dir; // empty: checkpointing disabled
    int halt_after = 0;                   // >0: stop after this iteration (checkpoint + return)

    int effective_burn_in() const;
    void validate() const;

    /// Canonical key=value text of the chain-defining fields (checkpoint
    /// paths and halt flags excluded: they do not alter the trajectory).
    std::string canonical_text() const;
    uint64_t config_hash() const;
};

/// Seam for the two conditional-Gaussian updates so tests can inject spies.
/// The production implementation binds (y, sigma_y) and delegates to the
/// spectral samplers.
class LikelihoodSampler {
public:
    virtual ~LikelihoodSampler() = default;
    virtual Grid sample_image_latent(const Grid& x, const Kernel& phi, double rho_x,
                                     RngState& rng) const = 0;
    virtual Grid sample_kernel_latent(const Grid& x, const Kernel& phi, double rho_phi,
                                      RngState& rng) const = 0;
};

class SpectralLikelihood final : public LikelihoodSampler {
public:
    SpectralLikelihood(Grid y, double sigma_y);
    Grid sample_image_latent(const Grid& x, const Kernel& phi, double rho_x,
                             RngState& rng) const override;
    Grid sample_kernel_latent(const Grid& x, const Kernel& phi, double rho_phi,
                              RngState& rng) const override;
    const Grid& y() const { return y_; }
    double sigma_y() const { return sigma_y_; }

private:
    Grid y_;
    double sigma_y_;
};

/// The four conditional samplers one split-Gibbs iteration cycles through.
struct PrismOperators {
    const MeasurementConditionedSampler* kernel_prior = nullptr;
    const DenoisingPosteriorSampler* image_prior = nullptr;
    const LikelihoodSampler* likelihood = nullptr;
};

struct StepParams {
    double rho_x;
    double rho_phi;
    bool project_kernel = true;
};

/// One iteration, exactly in algorithm order:
///   1. phi <- kernel prior sample at (m, rho_phi)   [+ optional projection]
///   2. z   <- image likelihood sample given (x, phi, rho_x)
///   3. x   <- image prior sample at (z, rho_x)
///   4. m   <- kernel likelihood sample given (x, phi, rho_phi)
/// Increments state.k.
void prism_step(ChainState& state, const StepParams& params, const PrismOperators& ops);

struct TraceRow {
    int k;
    double rho_x;
    double rho_phi;
    double residual; // ||H_phi x - y||_2
    std::optional<double> psnr;
};

struct ChainResult {
    Grid x;
    Kernel phi;
    std::vector<std::pair<Grid, Kernel>> samples;
    std::vector<TraceRow> trace;
    Grid init_x;
    Kernel init_m;
    bool completed = true; // false when halt_after stopped the chain early
};

struct RunOptions {
    std::optional<std::filesystem::path> resume_from;
    const Grid* truth_x = nullptr; // enables the PSNR trace column
};

/// Runs the full chain: initializes (x0, m0), iterates prism_step K times,
/// retains samples per the estimation mode, and records the trace. On error
/// the latest state is checkpointed (when enabled) before the exception
/// propagates, so the chain is resumable.
ChainResult run_chain(const ChainConfig& config, const PrismOperators& ops, const Grid& y,
                      const RunOptions& options = {});

/// Element-wise average of retained samples; single-sample mode returns the
/// last sample unchanged. Throws EmptySampleSet on an empty list.
std::pair<Grid, Kernel> estimate(const std::vector<std::pair<Grid, Kernel>>& samples,
                                 EstimationMode mode);

struct Checkpoint {
    ChainState state;
    std::vector<std::pair<Grid, Kernel>> samples;
    std::vector<TraceRow> trace;
    Grid init_x;
    Kernel init_m;
    uint64_t config_hash = 0;
};

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

} // namespace prism
