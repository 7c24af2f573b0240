#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace spreadlab {

/// Lengths above this use the FFT path; at or below it the direct O(n^2) sums.
inline constexpr std::size_t kFastTransformThreshold = 512;

// Cyclic convolution: out[n] = sum_k a[(n - k) mod N] * b[k].
std::vector<double> cyclic_convolve(std::span<const double> a, std::span<const double> b);
std::vector<double> cyclic_convolve_direct(std::span<const double> a, std::span<const double> b);
std::vector<double> cyclic_convolve_fft(std::span<const double> a, std::span<const double> b);

// Cyclic cross-correlation: out[k] = sum_n w[n] * a[(n - k) mod N].
std::vector<double> cyclic_correlate(std::span<const double> w, std::span<const double> a);
std::vector<double> cyclic_correlate_direct(std::span<const double> w, std::span<const double> a);
std::vector<double> cyclic_correlate_fft(std::span<const double> w, std::span<const double> a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

} // namespace spreadlab
