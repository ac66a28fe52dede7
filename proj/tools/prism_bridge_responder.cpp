#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "prism/bridge.hpp"
#include "prism/prior.hpp"
#include "prism/rng.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void handle_signal(int) { g_stop = 1; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PRISM bridge responder: serves denoising requests from an exchange directory"};

    std::string endpoint;
    std::string mode = "echo";
    double sd = 0.25;
    double slope = 2.0;
    uint64_t seed = 0;
    double poll_ms = 2.0;
    bool once = false;
    app.add_option("--endpoint", endpoint, "exchange directory")->required();
    app.add_option("--mode", mode, "echo | gaussian")->check(CLI::IsMember({"echo", "gaussian"}));
    app.add_option("--sd", sd, "gaussian prior pixel SD");
    app.add_option("--slope", slope, "gaussian prior spectral slope");
    app.add_option("--seed", seed, "responder RNG seed");
    app.add_option("--poll-ms", poll_ms, "poll interval in milliseconds");
    app.add_flag("--once", once, "serve pending requests once and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        prism::RngState rng(seed);
        prism::BridgeResponder::Handler handler;
        if (mode == "echo") {
            handler = [](const prism::Grid& v, double, const std::optional<prism::Grid>&) {
                return v;
            };
        } else {
            handler = [&rng, sd, slope](const prism::Grid& v, double rho,
                                        const std::optional<prism::Grid>&) {
                prism::Grid mean(v.height(), v.width(), 0.5);
                auto prior = prism::GaussianPrior::power_law(std::move(mean), slope, sd);
                return prism::gaussian_denoise_sample(prior, v, rho, rng);
            };
        }

        prism::BridgeResponder responder(endpoint, std::move(handler));
        if (once) {
            int served = responder.serve_pending();
            std::cout << "served " << served << " request(s)\n";
            return 0;
        }
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        responder.start(poll_ms);
        std::cout << "serving " << endpoint << " (" << mode << "); Ctrl-C to stop\n";
        while (g_stop == 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
        responder.stop();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
