#pragma once

#include "spreadlab/channel.hpp"
#include "spreadlab/signals.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace spreadlab {

/// x * v where x is the circulant matrix with columns X^0 .. X^{K_c-1}.
/// Equivalent to the cyclic convolution of X and v.
std::vector<double> circulant_apply(const SpreadSignal& x, std::span<const double> v);
std::vector<double> circulant_apply_direct(const SpreadSignal& x, std::span<const double> v);

/// x^T w, i.e. out[k] = <X^k, w>.
std::vector<double> circulant_transpose_apply(const SpreadSignal& x, std::span<const double> w);

/// Column k of x, the shifted copy X^k.
inline std::vector<double> circulant_column(const SpreadSignal& x, std::size_t k)
{
    return cyclic_shift(x, static_cast<std::int64_t>(k));
}

/// One coherence period: Y = sqrt(snr) x H + Z.
struct LinkObservation {
    SpreadSignal x;
    ChannelRealization h;
    double snr = 0.0;
    std::vector<double> z;
    std::vector<double> y;
};

/// Standard normal noise of length kc drawn from noise_seed.
std::vector<double> draw_noise(std::size_t kc, std::uint64_t noise_seed);

LinkObservation transmit(const SpreadSignal& x, const ChannelRealization& h, double snr, std::uint64_t noise_seed);

/// Same as transmit with a caller-supplied noise vector (Z = 0 makes the link noiseless).
LinkObservation transmit_with_noise(const SpreadSignal& x, const ChannelRealization& h, double snr,
                                    std::vector<double> z);

} // namespace spreadlab
