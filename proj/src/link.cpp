#include "spreadlab/link.hpp"

#include "spreadlab/cyclic.hpp"
#include "spreadlab/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spreadlab {

namespace {

void require_length(const SpreadSignal& x, std::span<const double> v, const char* what)
{
    if (v.size() != x.kc())
        throw std::invalid_argument(std::string(what) + ": vector length " + std::to_string(v.size())
                                    + " does not match K_c=" + std::to_string(x.kc()));
}

} // namespace

std::vector<double> circulant_apply(const SpreadSignal& x, std::span<const double> v)
{
    require_length(x, v, "circulant_apply");
    return cyclic_convolve(x.samples(), v);
}

std::vector<double> circulant_apply_direct(const SpreadSignal& x, std::span<const double> v)
{
    require_length(x, v, "circulant_apply_direct");
    const std::size_t n = x.kc();
    std::vector<double> out(n, 0.0);
    for (std::size_t row = 0; row < n; ++row) {
        double acc = 0.0;
        for (std::size_t col = 0; col < n; ++col)
            acc += x[(row + n - col) % n] * v[col];
        out[row] = acc;
    }
    return out;
}

std::vector<double> circulant_transpose_apply(const SpreadSignal& x, std::span<const double> w)
{
    require_length(x, w, "circulant_transpose_apply");
    return cyclic_correlate(w, x.samples());
}

std::vector<double> draw_noise(std::size_t kc, std::uint64_t noise_seed)
{
    Engine rng(noise_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> z(kc);
    for (auto& v : z)
        v = gauss(rng);
    return z;
}

LinkObservation transmit_with_noise(const SpreadSignal& x, const ChannelRealization& h, double snr,
                                    std::vector<double> z)
{
    if (!(snr >= 0.0))
        throw std::invalid_argument("transmit: snr must be nonnegative");
    if (h.kc != x.kc())
        throw std::invalid_argument("transmit: signal and channel disagree on K_c");
    require_length(x, z, "transmit");

    const auto xh = circulant_apply(x, h.dense());
    const double amp = std::sqrt(snr);
    std::vector<double> y(x.kc());
    for (std::size_t n = 0; n < y.size(); ++n)
        y[n] = amp * xh[n] + z[n];
    return LinkObservation{x, h, snr, std::move(z), std::move(y)};
}

LinkObservation transmit(const SpreadSignal& x, const ChannelRealization& h, double snr, std::uint64_t noise_seed)
{
    return transmit_with_noise(x, h, snr, draw_noise(x.kc(), noise_seed));
}

} // namespace spreadlab
