#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace csmaq::detail {

/// Real FFT of a fixed size backed by FFTW. Each instance owns aligned
/// buffers, so execution is thread-safe across instances; plan creation and
/// destruction serialize on the global planner mutex internally.
class RealFft {
public:
    explicit RealFft(std::size_t n);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const { return n_; }
    std::size_t bins() const { return n_ / 2 + 1; }

    /// in: n samples; out: n/2+1 complex bins.
    void forward(const double* in, std::complex<double>* out);
    /// in: n/2+1 bins; out: n samples, scaled by 1/n (round-trip identity).
    void inverse(const std::complex<double>* in, double* out);

private:
    std::size_t n_;
    void* fwd_plan_;
    void* inv_plan_;
    double* real_buf_;
    void* cplx_buf_;
};

std::size_t next_pow2(std::size_t n);

}  // namespace csmaq::detail
