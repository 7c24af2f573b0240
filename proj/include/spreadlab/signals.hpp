#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace spreadlab {

enum class SignalKind { iid_binary, iid_gaussian, ppm, custom };

std::string_view to_string(SignalKind kind);
SignalKind signal_kind_from_string(std::string_view name);

struct SignalParams {
    /// PPM frame length F; must divide K_c. Each frame carries one pulse of amplitude sqrt(F).
    std::size_t ppm_frame = 4;
};

/// One coherence period of transmitted samples, K_c = samples().size().
class SpreadSignal {
public:
    SpreadSignal(SignalKind kind, std::vector<double> samples);

    /// Wraps caller-provided samples (kind = custom).
    static SpreadSignal from_samples(std::vector<double> samples);

    SignalKind kind() const noexcept { return kind_; }
    std::size_t kc() const noexcept { return samples_.size(); }
    std::span<const double> samples() const noexcept { return samples_; }
    double operator[](std::size_t n) const noexcept { return samples_[n]; }
    double energy() const noexcept { return energy_; }

private:
    SignalKind kind_;
    std::vector<double> samples_;
    double energy_;
};

/// Deterministic in (kind, kc, params, seed). Throws std::invalid_argument for
/// kc < 2 or a PPM frame that does not divide kc.
SpreadSignal gen_signal(SignalKind kind, std::size_t kc, const SignalParams& params, std::uint64_t seed);

/// out[n] = X[(n - shift) mod K_c]; any integer shift.
std::vector<double> cyclic_shift(const SpreadSignal& x, std::int64_t shift);

/// r[l] = <X^0, X^l> for l = 0..K_c-1, so <X^i, X^j> = r[(j - i) mod K_c].
/// Uses the FFT path above kFastTransformThreshold.
std::vector<double> empirical_autocorr(const SpreadSignal& x);
std::vector<double> empirical_autocorr_direct(const SpreadSignal& x);
std::vector<double> empirical_autocorr_fft(const SpreadSignal& x);

/// <X^i, X^j> read from a precomputed autocorrelation.
inline double shifted_inner(std::span<const double> autocorr, std::size_t i, std::size_t j) noexcept
{
    const std::size_t n = autocorr.size();
    return autocorr[(j + n - i % n) % n];
}

struct SpreadingCheck {
    bool ok = true;
    double max_offpeak = 0.0;          // max_{l != 0} |r[l]|
    double bound = 0.0;                // B4 * sqrt(K_c)
    std::vector<std::size_t> offending_lags;
};

/// Tests max_{l != 0} |r[l]| <= b4 * sqrt(K_c).
SpreadingCheck check_spreading(const SpreadSignal& x, double b4);

inline constexpr double kDefaultB4 = 6.0;

} // namespace spreadlab
