#include "spreadlab/signals.hpp"

#include "spreadlab/cyclic.hpp"
#include "spreadlab/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spreadlab {

std::string_view to_string(SignalKind kind)
{
    switch (kind) {
    case SignalKind::iid_binary:
        return "iid_binary";
    case SignalKind::iid_gaussian:
        return "iid_gaussian";
    case SignalKind::ppm:
        return "ppm";
    case SignalKind::custom:
        return "custom";
    }
    return "?";
}

SignalKind signal_kind_from_string(std::string_view name)
{
    if (name == "iid_binary")
        return SignalKind::iid_binary;
    if (name == "iid_gaussian")
        return SignalKind::iid_gaussian;
    if (name == "ppm")
        return SignalKind::ppm;
    throw std::invalid_argument("unknown signal kind '" + std::string(name) + "'");
}

SpreadSignal::SpreadSignal(SignalKind kind, std::vector<double> samples)
    : kind_(kind), samples_(std::move(samples)), energy_(norm2(samples_))
{
    if (samples_.size() < 2)
        throw std::invalid_argument("SpreadSignal: K_c must be at least 2");
}

SpreadSignal SpreadSignal::from_samples(std::vector<double> samples)
{
    return SpreadSignal(SignalKind::custom, std::move(samples));
}

SpreadSignal gen_signal(SignalKind kind, std::size_t kc, const SignalParams& params, std::uint64_t seed)
{
    if (kc < 2)
        throw std::invalid_argument("gen_signal: K_c must be at least 2, got " + std::to_string(kc));

    Engine rng(seed);
    std::vector<double> x(kc, 0.0);
    switch (kind) {
    case SignalKind::iid_binary: {
        std::bernoulli_distribution coin(0.5);
        for (auto& v : x)
            v = coin(rng) ? 1.0 : -1.0;
        break;
    }
    case SignalKind::iid_gaussian: {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (auto& v : x)
            v = gauss(rng);
        break;
    }
    case SignalKind::ppm: {
        const std::size_t frame = params.ppm_frame;
        if (frame == 0 || kc % frame != 0)
            throw std::invalid_argument("gen_signal: PPM frame " + std::to_string(frame) + " does not divide K_c="
                                        + std::to_string(kc));
        const double amplitude = std::sqrt(static_cast<double>(frame));
        std::uniform_int_distribution<std::size_t> slot(0, frame - 1);
        for (std::size_t start = 0; start < kc; start += frame)
            x[start + slot(rng)] = amplitude;
        break;
    }
    case SignalKind::custom:
        throw std::invalid_argument("gen_signal: custom signals are built with SpreadSignal::from_samples");
    }
    return SpreadSignal(kind, std::move(x));
}

std::vector<double> cyclic_shift(const SpreadSignal& x, std::int64_t shift)
{
    const auto n = static_cast<std::int64_t>(x.kc());
    const std::int64_t s = ((shift % n) + n) % n;
    std::vector<double> out(x.kc());
    for (std::int64_t m = 0; m < n; ++m)
        out[static_cast<std::size_t>((m + s) % n)] = x[static_cast<std::size_t>(m)];
    return out;
}

std::vector<double> empirical_autocorr_direct(const SpreadSignal& x)
{
    // r[l] = sum_n X[n] X[n - l] is the cyclic correlation of X with itself.
    return cyclic_correlate_direct(x.samples(), x.samples());
}

std::vector<double> empirical_autocorr_fft(const SpreadSignal& x)
{
    return cyclic_correlate_fft(x.samples(), x.samples());
}

std::vector<double> empirical_autocorr(const SpreadSignal& x)
{
    return x.kc() > kFastTransformThreshold ? empirical_autocorr_fft(x) : empirical_autocorr_direct(x);
}

SpreadingCheck check_spreading(const SpreadSignal& x, double b4)
{
    if (!(b4 > 0.0))
        throw std::invalid_argument("check_spreading: B4 must be positive");
    const auto r = empirical_autocorr(x);
    SpreadingCheck out;
    out.bound = b4 * std::sqrt(static_cast<double>(x.kc()));
    for (std::size_t l = 1; l < r.size(); ++l) {
        const double v = std::abs(r[l]);
        out.max_offpeak = std::max(out.max_offpeak, v);
        if (v > out.bound)
            out.offending_lags.push_back(l);
    }
    out.ok = out.offending_lags.empty();
    return out;
}

} // namespace spreadlab
