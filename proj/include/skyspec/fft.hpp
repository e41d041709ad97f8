#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace skyspec::fft {

using cplx = std::complex<double>;

namespace detail {

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// FFTW's planner is not thread-safe, so plans are cached per thread.
inline fftw_plan plan_for(std::size_t n, int sign)
{
    thread_local std::map<std::pair<std::size_t, int>, PlanPtr> cache;
    auto key = std::make_pair(n, sign);
    auto it = cache.find(key);
    if (it == cache.end()) {
        std::vector<cplx> scratch_in(n), scratch_out(n);
        fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(scratch_in.data()),
                                       reinterpret_cast<fftw_complex*>(scratch_out.data()), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (p == nullptr) {
            throw std::runtime_error("fftw: plan creation failed");
        }
        it = cache.emplace(key, PlanPtr(p)).first;
    }
    return it->second.get();
}

inline std::vector<cplx> transform(std::span<const cplx> in, int sign)
{
    const std::size_t n = in.size();
    std::vector<cplx> src(in.begin(), in.end());
    std::vector<cplx> out(n);
    if (n == 0) {
        return out;
    }
    fftw_execute_dft(plan_for(n, sign), reinterpret_cast<fftw_complex*>(src.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& v : out) {
        v *= scale;
    }
    return out;
}

} // namespace detail

/// Unitary DFT (1/sqrt(N) scaling), so sum |x|^2 == sum |X|^2.
inline std::vector<cplx> forward(std::span<const cplx> time) { return detail::transform(time, FFTW_FORWARD); }

/// Inverse of forward().
inline std::vector<cplx> inverse(std::span<const cplx> freq) { return detail::transform(freq, FFTW_BACKWARD); }

/// Hann window scaled to unit mean power, so white noise keeps its per-bin variance.
inline std::vector<double> hann_window(std::size_t n)
{
    std::vector<double> w(n);
    if (n == 0) {
        return w;
    }
    double power = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n));
        power += w[i] * w[i];
    }
    const double norm = std::sqrt(static_cast<double>(n) / power);
    for (auto& v : w) {
        v *= norm;
    }
    return w;
}

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

} // namespace skyspec::fft
