#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace ldlab::fft {

/// FFTW's planner is not reentrant; every plan creation/destruction goes through this lock.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

/// Smallest n' >= n whose prime factors are all in {2, 3, 5, 7}.
inline int good_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int r = m;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

/**
 * Real-to-complex transform pair on a fixed 2-D or 3-D box, with owned,
 * FFTW-aligned buffers. Plans use FFTW_ESTIMATE so the algorithm choice and
 * therefore every result bit is identical from run to run.
 */
class RealTransform {
public:
    RealTransform(int dim, std::array<int, 3> dims) : dim_(dim), dims_(dims) {
        if (dim == 2) dims_[2] = 1;
        real_size_ = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
        const int last = dim == 3 ? dims_[2] : dims_[1];
        complex_size_ = real_size_ / last * (last / 2 + 1);
        std::lock_guard lock(planner_mutex());
        real_ = fftw_alloc_real(real_size_);
        spec_ = fftw_alloc_complex(complex_size_);
        if (!real_ || !spec_) throw std::bad_alloc();
        if (dim == 3) {
            forward_ = fftw_plan_dft_r2c_3d(dims_[0], dims_[1], dims_[2], real_, spec_, FFTW_ESTIMATE);
            backward_ = fftw_plan_dft_c2r_3d(dims_[0], dims_[1], dims_[2], spec_, real_, FFTW_ESTIMATE);
        } else {
            forward_ = fftw_plan_dft_r2c_2d(dims_[0], dims_[1], real_, spec_, FFTW_ESTIMATE);
            backward_ = fftw_plan_dft_c2r_2d(dims_[0], dims_[1], spec_, real_, FFTW_ESTIMATE);
        }
    }

    RealTransform(const RealTransform&) = delete;
    RealTransform& operator=(const RealTransform&) = delete;

    ~RealTransform() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    const std::array<int, 3>& dims() const { return dims_; }
    std::size_t real_size() const { return real_size_; }
    std::size_t complex_size() const { return complex_size_; }

    double* real() { return real_; }
    std::complex<double>* spectrum() { return reinterpret_cast<std::complex<double>*>(spec_); }

    /// real() -> spectrum()
    void forward() { fftw_execute(forward_); }
    /// spectrum() -> real(), unnormalized (scaled by real_size()).
    void backward() { fftw_execute(backward_); }

private:
    int dim_;
    std::array<int, 3> dims_;
    std::size_t real_size_ = 0;
    std::size_t complex_size_ = 0;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

} // namespace ldlab::fft
