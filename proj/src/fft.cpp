#include "ghostdiff/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace ghostdiff::fft {
namespace {

// Plans are created once per transform size with FFTW_ESTIMATE so the
// chosen algorithm never depends on runtime timing, and FFTW_UNALIGNED so
// one plan serves every caller buffer. Creation is serialized; execution
// through the new-array interface is thread safe.
struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

std::mutex plan_mutex;
std::unordered_map<std::size_t, PlanPair>& plan_cache() {
    static std::unordered_map<std::size_t, PlanPair> cache;
    return cache;
}

PlanPair plans_for(std::size_t n) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto& cache = plan_cache();
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (buf == nullptr) throw std::bad_alloc();
    PlanPair p;
    p.fwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.bwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (p.fwd == nullptr || p.bwd == nullptr)
        throw std::runtime_error("fft: plan creation failed");
    cache.emplace(n, p);
    return p;
}

void execute(std::vector<std::complex<double>>& v, bool forward) {
    if (v.empty()) throw std::invalid_argument("fft: empty input");
    PlanPair p = plans_for(v.size());
    auto* data = reinterpret_cast<fftw_complex*>(v.data());
    fftw_execute_dft(forward ? p.fwd : p.bwd, data, data);
}

}  // namespace

void forward_raw(std::vector<std::complex<double>>& v) { execute(v, true); }

void forward_unitary(std::vector<std::complex<double>>& v) {
    execute(v, true);
    double s = 1.0 / std::sqrt(static_cast<double>(v.size()));
    for (auto& z : v) z *= s;
}

void inverse_unitary(std::vector<std::complex<double>>& v) {
    execute(v, false);
    double s = 1.0 / std::sqrt(static_cast<double>(v.size()));
    for (auto& z : v) z *= s;
}

}  // namespace ghostdiff::fft
