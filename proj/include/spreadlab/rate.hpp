#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace spreadlab {

/// mmse(snr) sampled on an increasing grid that starts at 0.
struct MmseCurve {
    std::vector<double> snr_grid;
    std::vector<double> values;
    std::vector<double> stderrs;

    /// Throws std::invalid_argument unless the grid starts at 0, increases strictly,
    /// and values/stderrs are nonnegative and of matching length.
    void validate() const;
};

struct InfoEstimate {
    double nats = 0.0;
    double error_bound = 0.0; // sum_k w_k * stderr_k (no independence assumed)
};

/// Trapezoid weights on grid[0..] truncated at target (linear interpolation inside
/// the last panel): integral ~ sum_k w[k] f(grid[k]).
std::vector<double> trapezoid_weights(std::span<const double> grid, double target);

/// I(Y; H | x) = 1/2 * integral_0^target mmse(s) ds.
InfoEstimate mutual_info_immse(const MmseCurve& curve, double snr_target);

struct RateSummary {
    double i_cond_raw_nats = 0.0; // I-MMSE integral
    double i_cond_nats = 0.0;     // min(raw, entropy cap)
    double penalty_ratio = 0.0;   // raw / (K_c snr / 2)
    double rate_upper_nats = 0.0; // max(0, K_c snr / 2 - raw)
    double entropy_cap_nats = 0.0;
    double error_bound = 0.0;     // propagated bound on the raw integral
};

RateSummary penalty_and_rate(const MmseCurve& curve, double snr_target, std::size_t kc, double entropy_cap_nats);

/// ln(K_c / L) / (K_c / L).
double threshold_snr(std::size_t kc, std::size_t l);

/// 0 followed by points-1 geometric points from target/1000 up to target.
std::vector<double> default_snr_grid(double target, std::size_t points = 33);

std::vector<double> uniform_snr_grid(double target, std::size_t points);

/// Scalar reference channel y = sqrt(s) h + z with h = +/-1 equiprobable:
/// mmse(s) = E[(h - tanh(sqrt(s) y))^2], evaluated by composite Simpson quadrature
/// over the Gaussian noise.
double scalar_binary_mmse(double snr);

inline constexpr double kNatsPerBit = 0.69314718055994530942;

} // namespace spreadlab
