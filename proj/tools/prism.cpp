#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "prism/analysis.hpp"
#include "prism/bridge.hpp"
#include "prism/datagen.hpp"
#include "prism/errors.hpp"
#include "prism/grid_io.hpp"
#include "prism/log.hpp"
#include "prism/manifest.hpp"
#include "prism/png_io.hpp"
#include "prism/prior.hpp"
#include "prism/sampler.hpp"
#include "prism/version.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInvalid = 2;

struct SimulateArgs {
    int size = 64;
    int kernel_support = 31;
    double intensity = 0.5;
    double sigma = 0.05;
    double slope = 2.0;
    uint64_t seed = 0;
    std::string out;
    std::string image;
    bool per_channel = false;
};

struct RunArgs {
    std::string instance;
    int iters = 1000;
    double rho_x_max = 1.0, rho_x_min = 0.01;
    double rho_phi_max = 1.0, rho_phi_min = 0.01;
    std::string mode = "single";
    int burn_in = -1;
    int thin = 1;
    std::string prior = "analytic";
    std::string kernel_prior = "analytic";
    std::string project = "on";
    std::string recentre = "on";
    uint64_t seed = 0;
    std::string out;
    std::string resume;
    int trials = 1;
    int checkpoint_every = 50;
    int halt_after = 0;
    double image_prior_sd = 0.16;
    double image_prior_slope = 2.0;
    double kernel_prior_sd = 0.02;
    double bridge_timeout = 10.0;
    bool png = false;
};

struct MetricsArgs {
    std::string recon;
    std::string truth;
    std::string out;
};

void export_png_if(bool enabled, const fs::path& path, const prism::Grid& g, bool autoscale) {
    if (enabled) prism::write_png_gray(path, g, autoscale);
}

prism::EstimationMode parse_mode(const std::string& text, int& sample_count) {
    if (text == "single") return prism::EstimationMode::kSingleSample;
    if (text.rfind("mean:", 0) == 0) {
        sample_count = std::stoi(text.substr(5));
        return prism::EstimationMode::kPosteriorMean;
    }
    if (text == "mean") return prism::EstimationMode::kPosteriorMean;
    throw prism::ConfigError("mode must be 'single' or 'mean:<count>', got '" + text + "'");
}

bool parse_switch(const std::string& text, const char* name) {
    if (text == "on") return true;
    if (text == "off") return false;
    throw prism::ConfigError(std::string(name) + " must be 'on' or 'off', got '" + text + "'");
}

// Centered Gaussian blob on the full grid, normalized: the generic
// (unconditioned) kernel prior mean.
prism::Grid blob_kernel_mean(int height, int width, double sigma_px) {
    prism::Grid g(height, width);
    double inv2s2 = 1.0 / (2.0 * sigma_px * sigma_px);
    for (int r = 0; r < height; ++r) {
        double dr = std::min(r, height - r);
        for (int c = 0; c < width; ++c) {
            double dc = std::min(c, width - c);
            g(r, c) = std::exp(-(dr * dr + dc * dc) * inv2s2);
        }
    }
    double total = prism::grid_sum(g);
    for (double& v : g.data()) v /= total;
    return g;
}

struct TrialOutcome {
    double psnr_final = 0.0;
    double ssim_final = 0.0;
    double kernel_rmse_final = 0.0;
    std::optional<double> nll;
    std::optional<double> coverage;
    std::string mode_tag;
};

int cmd_simulate(const SimulateArgs& args) {
    prism::InstanceSpec spec;
    spec.height = args.size;
    spec.width = args.size;
    spec.kernel_support = args.kernel_support;
    spec.kernel_intensity = args.intensity;
    spec.noise_sigma = args.sigma;
    spec.image_slope = args.slope;
    spec.seed = args.seed;
    if (!args.image.empty()) {
        prism::Grid img = prism::read_png_gray(args.image);
        spec.height = img.height();
        spec.width = img.width();
        spec.image = std::move(img);
    }
    prism::ProblemInstance instance = prism::make_instance(spec);
    prism::save_instance(args.out, instance);
    std::cout << "instance " << args.out << ": " << spec.height << "x" << spec.width
              << " seed=" << spec.seed << " sigma=" << spec.noise_sigma
              << " kernel_support=" << spec.kernel_support
              << " intensity=" << spec.kernel_intensity << "\n";
    return kExitOk;
}

struct PriorBundle {
    std::unique_ptr<prism::DenoisingPosteriorSampler> image;
    std::unique_ptr<prism::MeasurementConditionedSampler> kernel;
};

PriorBundle build_priors(const RunArgs& args, const prism::ProblemInstance& instance) {
    PriorBundle bundle;

    if (args.prior == "analytic") {
        prism::Grid mean(instance.y.height(), instance.y.width(), 0.5);
        auto prior = prism::GaussianPrior::power_law(std::move(mean), args.image_prior_slope,
                                                     args.image_prior_sd);
        bundle.image = std::make_unique<prism::GaussianDenoiser>(std::move(prior));
    } else if (args.prior.rfind("bridge:", 0) == 0) {
        prism::BridgeConfig cfg;
        cfg.timeout_seconds = args.bridge_timeout;
        bundle.image =
            std::make_unique<prism::BridgeSampler>(fs::path(args.prior.substr(7)), cfg);
    } else {
        throw prism::ConfigError("--prior must be 'analytic' or 'bridge:<dir>'");
    }

    if (args.kernel_prior == "analytic") {
        int support = instance.truth_kernel.support.value_or(0);
        double blob_sigma = support > 0 ? std::max(1.0, support / 4.0) : 2.0;
        auto base = prism::GaussianPrior::white(
            blob_kernel_mean(instance.y.height(), instance.y.width(), blob_sigma),
            args.kernel_prior_sd);
        prism::ConditionedKernelConfig cfg;
        cfg.recentre = parse_switch(args.recentre, "--recentre");
        if (support > 0) cfg.support_hint = support;
        bundle.kernel =
            prism::conditioned_kernel_sampler(instance.y, std::move(base), std::move(cfg));
    } else if (args.kernel_prior.rfind("bridge:", 0) == 0) {
        prism::BridgeConfig cfg;
        cfg.timeout_seconds = args.bridge_timeout;
        bundle.kernel = std::make_unique<prism::BridgeSampler>(
            fs::path(args.kernel_prior.substr(7)), cfg, instance.y);
    } else {
        throw prism::ConfigError("--kernel-prior must be 'analytic' or 'bridge:<dir>'");
    }
    return bundle;
}

TrialOutcome run_one_trial(const RunArgs& args, const prism::ProblemInstance& instance,
                           const fs::path& out_dir, uint64_t seed,
                           const std::optional<fs::path>& resume) {
    fs::create_directories(out_dir);

    prism::ChainConfig config;
    config.iterations = args.iters;
    config.rho_x_max = args.rho_x_max;
    config.rho_x_min = args.rho_x_min;
    config.rho_phi_max = args.rho_phi_max;
    config.rho_phi_min = args.rho_phi_min;
    config.mode = parse_mode(args.mode, config.sample_count);
    config.burn_in = args.burn_in;
    config.thin = args.thin;
    config.seed = seed;
    config.project_kernel = parse_switch(args.project, "--project-kernel");
    config.checkpoint_every = args.checkpoint_every;
    config.checkpoint_dir = out_dir / "checkpoint";
    config.halt_after = args.halt_after;

    PriorBundle priors = build_priors(args, instance);
    prism::SpectralLikelihood likelihood(instance.y,
                                         instance.noise_sigma > 0.0 ? instance.noise_sigma
                                                                    : 1e-3);
    prism::PrismOperators ops{priors.kernel.get(), priors.image.get(), &likelihood};

    prism::RunOptions options;
    options.truth_x = &instance.truth_x;
    if (resume) options.resume_from = *resume;

    prism::ChainResult result = prism::run_chain(config, ops, instance.y, options);
    prism::write_trace_csv(out_dir / "trace.csv", result.trace);

    TrialOutcome outcome;
    if (!result.completed) {
        std::cout << "halted at iteration " << result.trace.size() << "; checkpoint in "
                  << (out_dir / "checkpoint").string() << "\n";
        outcome.mode_tag = "halted";
        return outcome;
    }

    auto [est_x, est_phi] = prism::estimate(result.samples, config.mode);
    prism::write_pgrd(out_dir / "recon_x.pgrd", est_x);
    prism::write_pgrd(out_dir / "recon_phi.pgrd", est_phi.grid);
    prism::write_pgrd(out_dir / "init_x.pgrd", result.init_x);
    prism::write_pgrd(out_dir / "init_phi.pgrd", result.init_m.grid);
    export_png_if(args.png, out_dir / "recon_x.png", est_x, false);
    export_png_if(args.png, out_dir / "recon_phi.png", est_phi.grid, true);

    outcome.psnr_final = prism::psnr(est_x, instance.truth_x, 1.0);
    outcome.ssim_final = prism::ssim(est_x, instance.truth_x, 1.0);
    outcome.kernel_rmse_final = prism::kernel_rmse(est_phi, instance.truth_kernel);
    outcome.mode_tag = config.mode == prism::EstimationMode::kSingleSample
                           ? "single"
                           : "mean" + std::to_string(config.sample_count);

    if (config.mode == prism::EstimationMode::kPosteriorMean && result.samples.size() >= 2) {
        prism::StatsAccumulator acc(est_x.height(), est_x.width());
        for (const auto& [sx, sphi] : result.samples) acc.add(sx);
        prism::PosteriorStats stats = acc.finalize(instance.truth_x);
        prism::write_pgrd(out_dir / "mean.pgrd", stats.mean);
        prism::write_pgrd(out_dir / "sd.pgrd", stats.sd);
        prism::write_pgrd(out_dir / "outlier_mask.pgrd", stats.outlier_mask);
        prism::write_pgrd(out_dir / "error_to_sd.pgrd",
                          prism::error_to_sd_map(stats, instance.truth_x));
        prism::Grid abs_err(est_x.height(), est_x.width());
        for (int i = 0; i < abs_err.size(); ++i) {
            abs_err.data()[i] = std::abs(instance.truth_x.data()[i] - stats.mean.data()[i]);
        }
        prism::write_pgrd(out_dir / "abs_error.pgrd", abs_err);
        export_png_if(args.png, out_dir / "sd.png", stats.sd, true);
        export_png_if(args.png, out_dir / "abs_error.png", abs_err, true);
        export_png_if(args.png, out_dir / "error_to_sd.png",
                      prism::error_to_sd_map(stats, instance.truth_x), true);
        export_png_if(args.png, out_dir / "outlier_mask.png", stats.outlier_mask, false);
        outcome.nll = stats.nll;
        outcome.coverage = stats.coverage3sd;
    }

    prism::Manifest manifest;
    manifest.set("version", prism::kVersion);
    manifest.set("instance", args.instance);
    manifest.set_u64("seed", seed);
    manifest.set_u64("config_hash", config.config_hash());
    manifest.set("mode", outcome.mode_tag);
    manifest.set("prior", args.prior);
    manifest.set("kernel_prior", args.kernel_prior);
    manifest.set("recentre", args.recentre);
    manifest.set("project_kernel", args.project);
    manifest.set_i64("iterations", config.iterations);
    manifest.set_f64("rho_x_max", config.rho_x_max);
    manifest.set_f64("rho_x_min", config.rho_x_min);
    manifest.set_f64("rho_phi_max", config.rho_phi_max);
    manifest.set_f64("rho_phi_min", config.rho_phi_min);
    manifest.set_i64("burn_in", config.burn_in);
    manifest.set_i64("thin", config.thin);
    manifest.set_f64("noise_sigma", instance.noise_sigma);
    manifest.set_f64("psnr", outcome.psnr_final);
    manifest.set_f64("ssim", outcome.ssim_final);
    manifest.set_f64("kernel_rmse", outcome.kernel_rmse_final);
    if (outcome.nll) manifest.set_f64("nll", *outcome.nll);
    if (outcome.coverage) manifest.set_f64("coverage3sd", *outcome.coverage);
    manifest.save(out_dir / "run.manifest");
    return outcome;
}

void write_metrics_csv(const fs::path& path, const std::vector<std::string>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw prism::IoError("cannot open for writing: " + path.string());
    out << "run_id,noise_sigma,mode,psnr,ssim,kernel_rmse,nll,coverage3sd\n";
    for (const std::string& row : rows) out << row << "\n";
}

std::string metrics_row(const std::string& run_id, double noise_sigma,
                        const std::string& mode, double psnr_v, double ssim_v, double rmse_v,
                        const std::optional<double>& nll, const std::optional<double>& cov) {
    std::ostringstream row;
    row << run_id << ',' << prism::format_f64(noise_sigma) << ',' << mode << ','
        << prism::format_f64(psnr_v) << ',' << prism::format_f64(ssim_v) << ','
        << prism::format_f64(rmse_v) << ',';
    if (nll) row << prism::format_f64(*nll);
    row << ',';
    if (cov) row << prism::format_f64(*cov);
    return row.str();
}

int cmd_run(const RunArgs& args) {
    if (args.out.empty()) throw prism::ConfigError("--out is required");
    if (args.trials < 1) throw prism::ConfigError("--trials must be >= 1");
    prism::ProblemInstance instance = prism::load_instance(args.instance);
    fs::path out_root(args.out);
    fs::create_directories(out_root);

    std::optional<fs::path> resume;
    if (!args.resume.empty()) resume = fs::path(args.resume);
    if (resume && args.trials != 1) {
        throw prism::ConfigError("--resume only applies to single-trial runs");
    }

    std::vector<TrialOutcome> outcomes(static_cast<size_t>(args.trials));
    if (args.trials == 1) {
        outcomes[0] = run_one_trial(args, instance, out_root, args.seed, resume);
    } else {
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> failures(static_cast<size_t>(args.trials));
        for (int t = 0; t < args.trials; ++t) {
            workers.emplace_back([&, t] {
                try {
                    fs::path dir = out_root / ("trial_" + std::to_string(t));
                    outcomes[static_cast<size_t>(t)] = run_one_trial(
                        args, instance, dir, args.seed + static_cast<uint64_t>(t),
                        std::nullopt);
                } catch (...) {
                    failures[static_cast<size_t>(t)] = std::current_exception();
                }
            });
        }
        for (auto& w : workers) w.join();
        for (auto& f : failures) {
            if (f) std::rethrow_exception(f);
        }
    }

    std::vector<std::string> rows;
    for (int t = 0; t < args.trials; ++t) {
        const TrialOutcome& o = outcomes[static_cast<size_t>(t)];
        if (o.mode_tag == "halted") continue;
        std::string run_id =
            args.trials == 1 ? out_root.filename().string() : "trial_" + std::to_string(t);
        rows.push_back(metrics_row(run_id, instance.noise_sigma, o.mode_tag, o.psnr_final,
                                   o.ssim_final, o.kernel_rmse_final, o.nll, o.coverage));
    }
    if (!rows.empty()) {
        write_metrics_csv(out_root / "metrics.csv", rows);
        for (const TrialOutcome& o : outcomes) {
            if (o.mode_tag == "halted") continue;
            std::cout << "psnr=" << o.psnr_final << " ssim=" << o.ssim_final
                      << " kernel_rmse=" << o.kernel_rmse_final;
            if (o.nll) std::cout << " nll=" << *o.nll;
            if (o.coverage) std::cout << " coverage3sd=" << *o.coverage;
            std::cout << "\n";
        }
    }
    return kExitOk;
}

int cmd_metrics(const MetricsArgs& args) {
    fs::path recon_root(args.recon);
    fs::path truth_root(args.truth);
    if (!fs::exists(recon_root)) throw prism::ConfigError("recon path does not exist");
    if (!fs::exists(truth_root)) throw prism::ConfigError("truth path does not exist");

    // Either a single run directory or a directory of run directories.
    std::vector<std::pair<fs::path, fs::path>> pairs;
    if (fs::exists(recon_root / "recon_x.pgrd")) {
        pairs.emplace_back(recon_root, truth_root);
    } else {
        for (const auto& entry : fs::directory_iterator(recon_root)) {
            if (!entry.is_directory()) continue;
            fs::path run_dir = entry.path();
            if (!fs::exists(run_dir / "recon_x.pgrd")) continue;
            fs::path truth_dir = truth_root / run_dir.filename();
            if (!fs::exists(truth_dir)) truth_dir = truth_root;
            pairs.emplace_back(run_dir, truth_dir);
        }
        std::sort(pairs.begin(), pairs.end());
    }
    if (pairs.empty()) throw prism::ConfigError("no reconstructions found under " + args.recon);

    std::vector<std::string> rows;
    int failures = 0;
    double sum_psnr = 0.0, sum_ssim = 0.0, sum_rmse = 0.0, sum_nll = 0.0, sum_cov = 0.0;
    int nll_count = 0;
    for (const auto& [run_dir, truth_dir] : pairs) {
        try {
            prism::ProblemInstance instance = prism::load_instance(truth_dir);
            prism::Grid recon_x = prism::read_pgrd(run_dir / "recon_x.pgrd");
            prism::Kernel recon_phi{prism::read_pgrd(run_dir / "recon_phi.pgrd"), std::nullopt,
                                    false};
            double psnr_v = prism::psnr(recon_x, instance.truth_x, 1.0);
            double ssim_v = prism::ssim(recon_x, instance.truth_x, 1.0);
            double rmse_v = prism::kernel_rmse(recon_phi, instance.truth_kernel);
            std::optional<double> nll, cov;
            if (fs::exists(run_dir / "mean.pgrd") && fs::exists(run_dir / "sd.pgrd")) {
                prism::Grid mean = prism::read_pgrd(run_dir / "mean.pgrd");
                prism::Grid sd = prism::read_pgrd(run_dir / "sd.pgrd");
                nll = prism::nll_from_maps(mean, sd, instance.truth_x);
                cov = prism::coverage_from_maps(mean, sd, instance.truth_x);
            }
            std::string mode = "single";
            if (fs::exists(run_dir / "run.manifest")) {
                mode = prism::Manifest::load(run_dir / "run.manifest").get_or("mode", mode);
            }
            rows.push_back(metrics_row(run_dir.filename().string(), instance.noise_sigma, mode,
                                       psnr_v, ssim_v, rmse_v, nll, cov));
            sum_psnr += psnr_v;
            sum_ssim += ssim_v;
            sum_rmse += rmse_v;
            if (nll) {
                sum_nll += *nll;
                sum_cov += *cov;
                ++nll_count;
            }
        } catch (const prism::Error& e) {
            prism::log_error(std::string("skipping ") + run_dir.string() + ": " + e.what());
            ++failures;
        }
    }
    if (rows.empty()) throw prism::ConfigError("all reconstructions failed metric evaluation");

    double n = static_cast<double>(rows.size());
    std::ostringstream summary;
    summary << "summary_count=" << rows.size() << ",," << ','
            << prism::format_f64(sum_psnr / n) << ',' << prism::format_f64(sum_ssim / n) << ','
            << prism::format_f64(sum_rmse / n) << ',';
    if (nll_count > 0) summary << prism::format_f64(sum_nll / nll_count);
    summary << ',';
    if (nll_count > 0) summary << prism::format_f64(sum_cov / nll_count);
    rows.push_back(summary.str());

    write_metrics_csv(args.out.empty() ? recon_root / "metrics.csv" : fs::path(args.out), rows);
    std::cout << "wrote metrics for " << (rows.size() - 1) << " run(s)\n";
    return failures == 0 ? kExitOk : kExitRuntime;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PRISM: split Gibbs sampling for blind deconvolution"};
    app.require_subcommand(1);
    app.set_config("--config", "", "UTF-8 key=value config file (flags override)");

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic problem instance");
    simulate->add_option("--size", sim.size, "square image size in pixels");
    simulate->add_option("--kernel-support", sim.kernel_support, "odd nominal kernel support");
    simulate->add_option("--intensity", sim.intensity, "motion wildness in [0,1]");
    simulate->add_option("--sigma", sim.sigma, "measurement noise SD");
    simulate->add_option("--slope", sim.slope, "texture spectral slope in [0,4]");
    simulate->add_option("--seed", sim.seed, "instance seed");
    simulate->add_option("--out", sim.out, "output instance directory")->required();
    simulate->add_option("--image", sim.image, "PNG image to use as ground truth");

    RunArgs run;
    CLI::App* runc = app.add_subcommand("run", "run the sampler on an instance");
    runc->add_option("--instance", run.instance, "instance directory")->required();
    runc->add_option("--iters", run.iters, "chain iterations");
    runc->add_option("--rho-x-max", run.rho_x_max, "image coupling schedule start");
    runc->add_option("--rho-x-min", run.rho_x_min, "image coupling schedule end");
    runc->add_option("--rho-phi-max", run.rho_phi_max, "kernel coupling schedule start");
    runc->add_option("--rho-phi-min", run.rho_phi_min, "kernel coupling schedule end");
    runc->add_option("--mode", run.mode, "estimation mode: single or mean:<count>");
    runc->add_option("--burn-in", run.burn_in, "burn-in iterations (-1 = auto)");
    runc->add_option("--thin", run.thin, "thinning stride");
    runc->add_option("--prior", run.prior, "image prior: analytic or bridge:<dir>");
    runc->add_option("--kernel-prior", run.kernel_prior,
                     "kernel prior: analytic or bridge:<dir>");
    runc->add_option("--project-kernel", run.project, "kernel physicality projection: on|off");
    runc->add_option("--recentre", run.recentre, "measurement-conditioned recentring: on|off");
    runc->add_option("--seed", run.seed, "chain seed (trial t uses seed+t)");
    runc->add_option("--out", run.out, "output directory")->required();
    runc->add_option("--resume", run.resume, "checkpoint directory to resume from");
    runc->add_option("--trials", run.trials, "number of parallel seeded trials");
    runc->add_option("--checkpoint-every", run.checkpoint_every,
                     "checkpoint period in iterations (0 = off)");
    runc->add_option("--halt-after", run.halt_after,
                     "stop after this iteration with a checkpoint (testing aid)");
    runc->add_option("--image-prior-sd", run.image_prior_sd, "analytic image prior pixel SD");
    runc->add_option("--image-prior-slope", run.image_prior_slope,
                     "analytic image prior spectral slope");
    runc->add_option("--kernel-prior-sd", run.kernel_prior_sd, "analytic kernel prior SD");
    runc->add_option("--bridge-timeout", run.bridge_timeout, "bridge response timeout seconds");
    runc->add_flag("--png", run.png, "export 8-bit PNG previews");

    MetricsArgs met;
    CLI::App* metrics = app.add_subcommand("metrics", "compute metrics for reconstructions");
    metrics->add_option("--recon", met.recon, "run directory or directory of runs")->required();
    metrics->add_option("--truth", met.truth, "matching instance directory root")->required();
    metrics->add_option("--out", met.out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim);
        if (runc->parsed()) return cmd_run(run);
        if (metrics->parsed()) return cmd_metrics(met);
        std::cerr << "no subcommand selected\n";
        return kExitInvalid;
    } catch (const prism::ConfigError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const prism::BadSupport& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
