#include "fft.hpp"

#include <cstring>
#include <mutex>

#include <fftw3.h>

namespace csmaq::detail {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
    real_buf_ = fftw_alloc_real(n_);
    auto* cplx = fftw_alloc_complex(bins());
    cplx_buf_ = cplx;
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), real_buf_, cplx, FFTW_ESTIMATE);
    inv_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), cplx, real_buf_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_plan_));
    fftw_destroy_plan(static_cast<fftw_plan>(inv_plan_));
    fftw_free(real_buf_);
    fftw_free(static_cast<fftw_complex*>(cplx_buf_));
}

void RealFft::forward(const double* in, std::complex<double>* out) {
    std::memcpy(real_buf_, in, n_ * sizeof(double));
    fftw_execute(static_cast<fftw_plan>(fwd_plan_));
    std::memcpy(out, cplx_buf_, bins() * sizeof(std::complex<double>));
}

void RealFft::inverse(const std::complex<double>* in, double* out) {
    std::memcpy(cplx_buf_, in, bins() * sizeof(std::complex<double>));
    fftw_execute(static_cast<fftw_plan>(inv_plan_));
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = real_buf_[i] * scale;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace csmaq::detail
