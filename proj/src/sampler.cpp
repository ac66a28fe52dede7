#include "prism/sampler.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "prism/analysis.hpp"
#include "prism/errors.hpp"
#include "prism/grid_io.hpp"
#include "prism/log.hpp"
#include "prism/manifest.hpp"

namespace prism {

namespace fs = std::filesystem;

AnnealingSchedule::AnnealingSchedule(double rho_max, double rho_min, int iterations)
    : rho_max_(rho_max), rho_min_(rho_min) {
    if (!std::isfinite(rho_max) || !std::isfinite(rho_min) || rho_min <= 0.0 ||
        rho_max < rho_min) {
        throw ConfigError("annealing schedule requires rho_max >= rho_min > 0");
    }
    if (iterations < 1) throw ConfigError("annealing schedule requires >= 1 iteration");
    values_.resize(static_cast<size_t>(iterations));
    if (iterations == 1) {
        values_[0] = rho_max;
        return;
    }
    double ratio = rho_min / rho_max;
    for (int k = 1; k <= iterations; ++k) {
        values_[static_cast<size_t>(k - 1)] =
            rho_max * std::pow(ratio, static_cast<double>(k - 1) / (iterations - 1));
    }
    // Pin the endpoints exactly; pow() reproduces them only to rounding.
    values_.front() = rho_max;
    values_.back() = rho_min;
}

double AnnealingSchedule::at(int k) const {
    if (k < 1 || k > iterations()) {
        std::ostringstream msg;
        msg << "schedule index " << k << " outside [1, " << iterations() << "]";
        throw ConfigError(msg.str());
    }
    return values_[static_cast<size_t>(k - 1)];
}

int ChainConfig::effective_burn_in() const {
    if (burn_in >= 0) return burn_in;
    int derived = iterations - sample_count * thin;
    return derived > 0 ? derived : 0;
}

void ChainConfig::validate() const {
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (thin < 1) throw ConfigError("thin must be >= 1");
    if (sample_count < 1) throw ConfigError("sample_count must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
    if (halt_after < 0) throw ConfigError("halt_after must be >= 0");
    if (halt_after > 0 && checkpoint_dir.empty()) {
        throw ConfigError("halt_after requires a checkpoint directory");
    }
    auto check_rho = [](double max_v, double min_v, const char* which) {
        if (!std::isfinite(max_v) || !std::isfinite(min_v) || min_v <= 0.0 || max_v < min_v) {
            throw ConfigError(std::string(which) + " schedule requires max >= min > 0");
        }
    };
    check_rho(rho_x_max, rho_x_min, "rho_x");
    check_rho(rho_phi_max, rho_phi_min, "rho_phi");
    if (mode == EstimationMode::kPosteriorMean) {
        if (effective_burn_in() + thin * (sample_count - 1) >= iterations) {
            throw ConfigError(
                "posterior-mean mode needs burn_in + thin*(sample_count-1) < iterations");
        }
    }
}

std::string ChainConfig::canonical_text() const {
    std::ostringstream out;
    out << "iterations=" << iterations << '\n'
        << "rho_x_max=" << format_f64(rho_x_max) << '\n'
        << "rho_x_min=" << format_f64(rho_x_min) << '\n'
        << "rho_phi_max=" << format_f64(rho_phi_max) << '\n'
        << "rho_phi_min=" << format_f64(rho_phi_min) << '\n'
        << "mode=" << (mode == EstimationMode::kSingleSample ? "single" : "mean") << '\n'
        << "sample_count=" << sample_count << '\n'
        << "burn_in=" << burn_in << '\n'
        << "thin=" << thin << '\n'
        << "seed=" << seed << '\n'
        << "project_kernel=" << (project_kernel ? 1 : 0) << '\n';
    return out.str();
}

uint64_t ChainConfig::config_hash() const { return fnv1a64(canonical_text()); }

SpectralLikelihood::SpectralLikelihood(Grid y, double sigma_y)
    : y_(std::move(y)), sigma_y_(sigma_y) {
    if (!std::isfinite(sigma_y) || sigma_y <= 0.0) {
        throw DegenerateScale("likelihood noise sigma must be finite and positive");
    }
}

Grid SpectralLikelihood::sample_image_latent(const Grid& x, const Kernel& phi, double rho_x,
                                             RngState& rng) const {
    ForwardModel model(phi, sigma_y_);
    return build_image_conditional(model, y_, x, rho_x).sample(rng);
}

Grid SpectralLikelihood::sample_kernel_latent(const Grid& x, const Kernel& phi, double rho_phi,
                                              RngState& rng) const {
    return build_kernel_conditional(x, y_, phi, rho_phi, sigma_y_).sample(rng);
}

namespace {

void require_operators(const PrismOperators& ops) {
    if (ops.kernel_prior == nullptr || ops.image_prior == nullptr || ops.likelihood == nullptr) {
        throw ConfigError("all three chain operators must be provided");
    }
}

} // namespace

void prism_step(ChainState& state, const StepParams& params, const PrismOperators& ops) {
    require_operators(ops);

    // (1) kernel conditional prior: phi <- D(m, rho_phi), optionally projected.
    Grid phi_draw = ops.kernel_prior->sample(state.m.grid, params.rho_phi, state.rng);
    Kernel phi{std::move(phi_draw), state.m.support, false};
    if (params.project_kernel) phi = project_kernel(phi);
    state.phi = std::move(phi);

    // (2) image likelihood: z <- N(mu_z, Sigma_z) given (x^{k-1}, phi^k).
    state.z = ops.likelihood->sample_image_latent(state.x, state.phi, params.rho_x, state.rng);

    // (3) image prior: x <- D(z, rho_x).
    state.x = ops.image_prior->sample(state.z, params.rho_x, state.rng);

    // (4) kernel likelihood: m <- N(mu_m, Sigma_m) given (x^k, phi^k).
    Grid m_draw =
        ops.likelihood->sample_kernel_latent(state.x, state.phi, params.rho_phi, state.rng);
    state.m = Kernel{std::move(m_draw), state.phi.support, false};

    ++state.k;
}

namespace {

ChainState make_initial_state(const ChainConfig& config, const PrismOperators& ops,
                              const Grid& y) {
    ChainState state{Grid(y.height(), y.width()), Grid(y.height(), y.width()),
                     Kernel::delta(y.height(), y.width()), Kernel::delta(y.height(), y.width()),
                     0, RngState(config.seed)};

    // x0: intensity-scale Gaussian field (mean 0.5, sd 0.25 on [0,1] images).
    Grid noise = draw_standard_normal(state.rng, y.height(), y.width());
    for (int i = 0; i < noise.size(); ++i) {
        state.x.data()[i] = 0.5 + 0.25 * noise.data()[i];
    }
    state.z = state.x;

    // m0: centered delta, blended toward the kernel prior's mean when it
    // exposes one (the conditioned prior's recentred estimate).
    Kernel m0 = Kernel::delta(y.height(), y.width());
    if (auto hint = ops.kernel_prior->mean_hint(); hint && same_shape(*hint, y)) {
        Grid blended = std::move(m0.grid);
        for (int i = 0; i < blended.size(); ++i) {
            blended.data()[i] = 0.5 * blended.data()[i] + 0.5 * hint->data()[i];
        }
        m0 = project_kernel(Kernel{std::move(blended), std::nullopt, false});
    }
    state.m = m0;
    state.phi = state.m;
    return state;
}

void append_trace_row(std::vector<TraceRow>& trace, const ChainState& state,
                      const StepParams& params, const Grid& y, const Grid* truth) {
    TraceRow row;
    row.k = state.k;
    row.rho_x = params.rho_x;
    row.rho_phi = params.rho_phi;
    row.residual = l2_norm_diff(convolve_circular(state.x, state.phi.grid), y);
    if (truth != nullptr) row.psnr = psnr(state.x, *truth, 1.0);
    trace.push_back(std::move(row));
}

std::string trace_csv_text(const std::vector<TraceRow>& trace) {
    std::ostringstream out;
    out << "k,rho_x,rho_phi,residual,psnr\n";
    for (const TraceRow& row : trace) {
        out << row.k << ',' << format_f64(row.rho_x) << ',' << format_f64(row.rho_phi) << ','
            << format_f64(row.residual) << ',';
        if (row.psnr) out << format_f64(*row.psnr);
        out << '\n';
    }
    return out.str();
}

std::vector<TraceRow> parse_trace_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace: " + path.string());
    std::vector<TraceRow> trace;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trace file: " + path.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        size_t start = 0;
        for (int i = 0; i < 4; ++i) {
            size_t comma = line.find(',', start);
            if (comma == std::string::npos) throw IoError("malformed trace row: " + line);
            fields.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        fields.push_back(line.substr(start));
        TraceRow row;
        row.k = static_cast<int>(std::stol(fields[0]));
        row.rho_x = std::strtod(fields[1].c_str(), nullptr);
        row.rho_phi = std::strtod(fields[2].c_str(), nullptr);
        row.residual = std::strtod(fields[3].c_str(), nullptr);
        if (!fields[4].empty()) row.psnr = std::strtod(fields[4].c_str(), nullptr);
        trace.push_back(row);
    }
    return trace;
}

void set_kernel_meta(Manifest& m, const std::string& prefix, const Kernel& k) {
    m.set_i64(prefix + "_support", k.support ? *k.support : -1);
    m.set_i64(prefix + "_normalized", k.normalized ? 1 : 0);
}

Kernel load_kernel(const fs::path& dir, const Manifest& m, const std::string& prefix) {
    Kernel k{read_pgrd(dir / (prefix + ".pgrd")), std::nullopt, false};
    int64_t support = m.get_i64(prefix + "_support");
    if (support >= 0) k.support = static_cast<int>(support);
    k.normalized = m.get_i64(prefix + "_normalized") != 0;
    return k;
}

} // namespace

void save_checkpoint(const fs::path& dir, const Checkpoint& checkpoint) {
    std::error_code ec;
    fs::create_directories(dir, ec);

    write_pgrd(dir / "x.pgrd", checkpoint.state.x);
    write_pgrd(dir / "z.pgrd", checkpoint.state.z);
    write_pgrd(dir / "phi.pgrd", checkpoint.state.phi.grid);
    write_pgrd(dir / "m.pgrd", checkpoint.state.m.grid);
    write_pgrd(dir / "init_x.pgrd", checkpoint.init_x);
    write_pgrd(dir / "init_m.pgrd", checkpoint.init_m.grid);
    for (size_t i = 0; i < checkpoint.samples.size(); ++i) {
        const auto& [sx, sphi] = checkpoint.samples[i];
        write_pgrd(dir / ("sample_" + std::to_string(i) + "_x.pgrd"), sx);
        write_pgrd(dir / ("sample_" + std::to_string(i) + "_phi.pgrd"), sphi.grid);
    }
    write_trace_csv(dir / "trace.csv", checkpoint.trace);

    Manifest m;
    m.set_i64("k", checkpoint.state.k);
    m.set("rng", checkpoint.state.rng.serialize());
    m.set_u64("config_hash", checkpoint.config_hash);
    m.set_u64("sample_count", checkpoint.samples.size());
    set_kernel_meta(m, "phi", checkpoint.state.phi);
    set_kernel_meta(m, "m", checkpoint.state.m);
    set_kernel_meta(m, "init_m", checkpoint.init_m);
    for (size_t i = 0; i < checkpoint.samples.size(); ++i) {
        set_kernel_meta(m, "sample_" + std::to_string(i) + "_phi", checkpoint.samples[i].second);
    }
    // Manifest written last: its presence marks the checkpoint complete.
    m.save(dir / "chain.manifest");
}

Checkpoint load_checkpoint(const fs::path& dir) {
    Manifest m = Manifest::load(dir / "chain.manifest");
    Checkpoint cp{ChainState{Grid(1, 1), Grid(1, 1), Kernel::delta(1, 1), Kernel::delta(1, 1), 0,
                             RngState(0)},
                  {},
                  {},
                  Grid(1, 1),
                  Kernel::delta(1, 1),
                  0};
    cp.state.x = read_pgrd(dir / "x.pgrd");
    cp.state.z = read_pgrd(dir / "z.pgrd");
    cp.state.phi = load_kernel(dir, m, "phi");
    cp.state.m = load_kernel(dir, m, "m");
    cp.state.k = static_cast<int>(m.get_i64("k"));
    cp.state.rng = RngState::deserialize(m.get("rng"));
    cp.init_x = read_pgrd(dir / "init_x.pgrd");
    cp.init_m = load_kernel(dir, m, "init_m");
    cp.config_hash = m.get_u64("config_hash");
    uint64_t count = m.get_u64("sample_count");
    cp.samples.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        std::string tag = "sample_" + std::to_string(i);
        Grid sx = read_pgrd(dir / (tag + "_x.pgrd"));
        Kernel sphi = load_kernel(dir, m, tag + "_phi");
        cp.samples.emplace_back(std::move(sx), std::move(sphi));
    }
    cp.trace = parse_trace_csv(dir / "trace.csv");
    return cp;
}

void write_trace_csv(const fs::path& path, const std::vector<TraceRow>& trace) {
    const std::string text = trace_csv_text(trace);
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

ChainResult run_chain(const ChainConfig& config, const PrismOperators& ops, const Grid& y,
                      const RunOptions& options) {
    config.validate();
    require_operators(ops);
    if (!y.all_finite()) throw Error("measurement has non-finite entries");

    AnnealingSchedule rho_x_schedule(config.rho_x_max, config.rho_x_min, config.iterations);
    AnnealingSchedule rho_phi_schedule(config.rho_phi_max, config.rho_phi_min, config.iterations);

    ChainState state{Grid(1, 1), Grid(1, 1), Kernel::delta(1, 1), Kernel::delta(1, 1), 0,
                     RngState(config.seed)};
    std::vector<std::pair<Grid, Kernel>> samples;
    std::vector<TraceRow> trace;
    Grid init_x(1, 1);
    Kernel init_m = Kernel::delta(1, 1);

    if (options.resume_from) {
        Checkpoint cp = load_checkpoint(*options.resume_from);
        if (cp.config_hash != config.config_hash()) {
            throw ConfigError("checkpoint was produced by a different chain configuration");
        }
        if (!same_shape(cp.state.x, y)) {
            throw ShapeMismatch("checkpoint state does not match measurement shape");
        }
        state = std::move(cp.state);
        samples = std::move(cp.samples);
        trace = std::move(cp.trace);
        init_x = std::move(cp.init_x);
        init_m = std::move(cp.init_m);
    } else {
        state = make_initial_state(config, ops, y);
        init_x = state.x;
        init_m = state.m;
    }

    const int burn_in = config.effective_burn_in();
    auto checkpoint_now = [&]() {
        Checkpoint cp{state, samples, trace, init_x, init_m, config.config_hash()};
        save_checkpoint(config.checkpoint_dir, cp);
    };

    bool completed = true;
    try {
        while (state.k < config.iterations) {
            int k = state.k + 1;
            StepParams params{rho_x_schedule.at(k), rho_phi_schedule.at(k),
                              config.project_kernel};
            prism_step(state, params, ops);
            append_trace_row(trace, state, params, y, options.truth_x);

            if (config.mode == EstimationMode::kPosteriorMean && state.k > burn_in &&
                (state.k - burn_in - 1) % config.thin == 0 &&
                static_cast<int>(samples.size()) < config.sample_count) {
                samples.emplace_back(state.x, state.phi);
            }

            if (!config.checkpoint_dir.empty() && config.checkpoint_every > 0 &&
                state.k % config.checkpoint_every == 0 && state.k < config.iterations) {
                checkpoint_now();
            }
            if (config.halt_after > 0 && state.k >= config.halt_after &&
                state.k < config.iterations) {
                checkpoint_now();
                completed = false;
                log_info("chain halted at iteration " + std::to_string(state.k));
                break;
            }
        }
    } catch (...) {
        // Leave a resumable checkpoint behind before propagating.
        if (!config.checkpoint_dir.empty()) {
            try {
                checkpoint_now();
            } catch (const std::exception& e) {
                log_error(std::string("checkpoint on failure also failed: ") + e.what());
            }
        }
        throw;
    }

    ChainResult result{state.x, state.phi, std::move(samples), std::move(trace),
                       std::move(init_x), std::move(init_m), completed};
    if (completed && config.mode == EstimationMode::kSingleSample) {
        result.samples.clear();
        result.samples.emplace_back(result.x, result.phi);
    }
    return result;
}

std::pair<Grid, Kernel> estimate(const std::vector<std::pair<Grid, Kernel>>& samples,
                                 EstimationMode mode) {
    if (samples.empty()) throw EmptySampleSet("no retained samples to estimate from");
    if (mode == EstimationMode::kSingleSample) return samples.back();

    const Grid& first_x = samples.front().first;
    const Kernel& first_phi = samples.front().second;
    Grid mean_x(first_x.height(), first_x.width());
    Grid mean_phi(first_phi.grid.height(), first_phi.grid.width());
    bool all_normalized = true;
    for (const auto& [sx, sphi] : samples) {
        require_same_shape(first_x, sx, "estimate");
        require_same_shape(first_phi.grid, sphi.grid, "estimate");
        for (int i = 0; i < mean_x.size(); ++i) mean_x.data()[i] += sx.data()[i];
        for (int i = 0; i < mean_phi.size(); ++i) mean_phi.data()[i] += sphi.grid.data()[i];
        all_normalized = all_normalized && sphi.normalized;
    }
    double inv = 1.0 / static_cast<double>(samples.size());
    for (double& v : mean_x.data()) v *= inv;
    for (double& v : mean_phi.data()) v *= inv;
    return {std::move(mean_x),
            Kernel{std::move(mean_phi), first_phi.support, all_normalized}};
}

} // namespace prism
