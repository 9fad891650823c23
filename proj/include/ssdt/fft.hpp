#pragma once
// Thin RAII wrapper around FFTW's real 2-D transform pair. Plans are created
// with FFTW_ESTIMATE only: measured planning picks algorithms by timing, which
// would make results differ between runs. The FFTW planner is not thread-safe,
// so plan creation and destruction are serialized; executing distinct
// transform objects concurrently is fine.
#include <complex>
#include <cstring>
#include <mutex>

#include <fftw3.h>

#include "errors.hpp"

namespace ssdt::fft {

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class R2C {
public:
    R2C(int width, int height)
        : width_(width), height_(height), spec_width_(width / 2 + 1) {
        if (width < 1 || height < 1)
            throw DimensionError("fft: empty grid");
        std::size_t n = static_cast<std::size_t>(width) * height;
        real_ = fftw_alloc_real(n);
        spec_ = fftw_alloc_complex(static_cast<std::size_t>(spec_width_) * height);
        if (!real_ || !spec_) {
            release_buffers();
            throw Error("fft: buffer allocation failed");
        }
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            forward_ = fftw_plan_dft_r2c_2d(height, width, real_, spec_,
                                            FFTW_ESTIMATE);
            backward_ = fftw_plan_dft_c2r_2d(height, width, spec_, real_,
                                             FFTW_ESTIMATE);
        }
        if (!forward_ || !backward_) {
            release_all();
            throw Error("fft: plan creation failed");
        }
        scale_ = 1.0 / static_cast<double>(n);
    }

    R2C(const R2C&) = delete;
    R2C& operator=(const R2C&) = delete;

    ~R2C() { release_all(); }

    int width() const { return width_; }
    int height() const { return height_; }
    // Column count of the half spectrum (Hermitian symmetry folds the rest).
    int spec_width() const { return spec_width_; }
    std::size_t spec_size() const {
        return static_cast<std::size_t>(spec_width_) * height_;
    }

    void forward(const double* src) {
        std::memcpy(real_, src, sizeof(double) * width_ * height_);
        fftw_execute(forward_);
    }

    // fftw_complex and std::complex<double> are layout compatible.
    std::complex<double>* spectrum() {
        return reinterpret_cast<std::complex<double>*>(spec_);
    }
    const std::complex<double>* spectrum() const {
        return reinterpret_cast<const std::complex<double>*>(spec_);
    }

    // Consumes the spectrum buffer (c2r transforms destroy their input) and
    // writes the normalized inverse transform to dst.
    void backward(double* dst) {
        fftw_execute(backward_);
        std::size_t n = static_cast<std::size_t>(width_) * height_;
        for (std::size_t i = 0; i < n; ++i)
            dst[i] = real_[i] * scale_;
    }

private:
    void release_buffers() {
        if (real_) fftw_free(real_);
        if (spec_) fftw_free(spec_);
        real_ = nullptr;
        spec_ = nullptr;
    }
    void release_all() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (forward_) fftw_destroy_plan(forward_);
        if (backward_) fftw_destroy_plan(backward_);
        forward_ = nullptr;
        backward_ = nullptr;
        if (real_) fftw_free(real_);
        if (spec_) fftw_free(spec_);
        real_ = nullptr;
        spec_ = nullptr;
    }

    int width_ = 0;
    int height_ = 0;
    int spec_width_ = 0;
    double scale_ = 1.0;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

} // namespace ssdt::fft
