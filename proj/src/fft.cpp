#include "prism/fft.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <sstream>
#include <vector>

#include <fftw3.h>

#include "prism/errors.hpp"

namespace prism {

namespace {

// fftw plan creation is not thread-safe; executions via fftw_execute_dft are.
// Plans are created once per (shape, direction) with FFTW_UNALIGNED so they
// can run on any buffer, and cached for the process lifetime.
class PlanCache {
  public:
    fftw_plan get(int height, int width, int sign) {
        std::scoped_lock lock(mutex_);
        auto key = std::tuple(height, width, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> scratch(static_cast<size_t>(height) * width);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft_2d(height, width, buf, buf, sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan == nullptr) throw Error("fftw plan creation failed");
        plans_.emplace(key, plan);
        return plan;
    }

  private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

void execute(fftw_plan plan, std::vector<std::complex<double>>& buf) {
    auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_execute_dft(plan, raw, raw);
}

} // namespace

SpectralGrid fft2(const Grid& g) {
    int h = g.height(), w = g.width();
    std::vector<std::complex<double>> buf(static_cast<size_t>(h) * w);
    for (int i = 0; i < g.size(); ++i) buf[i] = {g.data()[i], 0.0};
    execute(plan_cache().get(h, w, FFTW_FORWARD), buf);
    double scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
    for (auto& c : buf) c *= scale;
    return SpectralGrid::from_data(h, w, std::move(buf));
}

Grid ifft2(const SpectralGrid& s) {
    int h = s.height(), w = s.width();
    std::vector<std::complex<double>> buf(s.coefficients());
    execute(plan_cache().get(h, w, FFTW_BACKWARD), buf);
    double scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
    double max_mag = 0.0, max_imag = 0.0;
    for (auto& c : buf) {
        c *= scale;
        max_mag = std::max(max_mag, std::abs(c));
        max_imag = std::max(max_imag, std::abs(c.imag()));
    }
    if (max_imag > kIfftSymmetryTolerance * std::max(1.0, max_mag)) {
        std::ostringstream msg;
        msg << "inverse transform of non-Hermitian spectrum: residual imaginary part "
            << max_imag << " exceeds tolerance";
        throw SymmetryViolation(msg.str());
    }
    Grid out(h, w);
    for (int i = 0; i < out.size(); ++i) out.data()[i] = buf[i].real();
    return out;
}

} // namespace prism
