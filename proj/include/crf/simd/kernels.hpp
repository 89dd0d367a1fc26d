#pragma once

// Data-parallel inner loops used by the autoencoder and the curve metrics.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2+FMA
// variant. The variant is picked once at first use from the CPU feature
// bits; CRF_KERNELS=scalar in the environment forces the reference path.
// Variants differ from the reference only in summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace crf::simd {

enum class Isa { scalar, avx2 };

struct KernelSet {
    Isa isa;
    std::string_view name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
    // out = a * b elementwise
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
};

const KernelSet& scalar_kernels() noexcept;

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelSet* avx2_kernels() noexcept;

bool cpu_supports_avx2() noexcept;

/// The kernel set used by the library.
const KernelSet& active() noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
    return active().sum_sq_diff(a.data(), b.data(), a.size());
}

inline void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    active().mul(a.data(), b.data(), out.data(), a.size());
}

inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }

}  // namespace crf::simd
