#pragma once

#include "spreadlab/rng.hpp"
#include "spreadlab/signals.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace spreadlab {

enum class GainModel { rademacher, bounded_uniform };

std::string_view to_string(GainModel model);
GainModel gain_model_from_string(std::string_view name);

/// Magnitude law of the bounded_uniform model: |g| ~ U[b1, b2] / sqrt(L), with
/// b2 the root of (b1^2 + b1 b2 + b2^2) / 3 = 1 so that E[g^2] = 1/L.
struct BoundedUniformLaw {
    static constexpr double b1 = 0.5;
    static double b2();
};

/// Number of magnitude levels the posterior uses for bounded_uniform gains.
inline constexpr std::size_t kGainGridLevels = 9;

/// Finite gain alphabet the posterior enumerates / samples over.
///   rademacher:      {-1/sqrt(L), +1/sqrt(L)}
///   bounded_uniform: +/- the midpoints of kGainGridLevels equal bins on [b1, b2] / sqrt(L)
std::vector<double> gain_alphabet(GainModel model, std::size_t l);

/// Lower bound B1 on sqrt(L) |g| for the model (1 for rademacher).
double gain_floor(GainModel model);

/// L-sparse channel impulse response over one coherence period.
struct ChannelRealization {
    std::size_t kc = 0;
    std::vector<std::size_t> support; // sorted, distinct, in [0, kc)
    std::vector<double> gains;        // gains[a] sits at support[a]
    GainModel model = GainModel::rademacher;

    std::size_t paths() const noexcept { return support.size(); }
    std::vector<double> dense() const;
    double energy() const noexcept;
};

/// Validates and sorts; throws std::invalid_argument on structural violations.
ChannelRealization make_channel(std::size_t kc, std::vector<std::size_t> support, std::vector<double> gains,
                                GainModel model = GainModel::rademacher);

ChannelRealization sample_channel(std::size_t kc, std::size_t l, GainModel model, std::uint64_t seed);

/// Uniformly random L-subset of [0, kc), sorted (Floyd's algorithm).
std::vector<std::size_t> sample_support(std::size_t kc, std::size_t l, Engine& rng);

/// K_c grid with L(K_c) = ceil(K_c^alpha).
struct ScalingSchedule {
    std::vector<std::size_t> kc_grid;
    double alpha = 0.5;

    std::size_t paths(std::size_t kc) const;
    /// L increasing and L/K_c strictly decreasing along the grid, with 1 <= L < K_c.
    bool is_sublinear() const;
};

/// Indices i with |sum_{j != i} H_j <X^i, X^j>| <= b3 * sqrt(K_c).
std::vector<std::size_t> check_condition7(const SpreadSignal& x, const ChannelRealization& h, double b3);

/// Same test with a precomputed autocorrelation of X.
std::vector<std::size_t> check_condition7(std::span<const double> autocorr, const ChannelRealization& h, double b3);

/// |sum_{j != i} H_j <X^i, X^j>| for every i.
std::vector<double> cross_correlation_sums(std::span<const double> autocorr, const ChannelRealization& h);

/// Entropy of the channel law in nats:
///   rademacher:      ln C(K_c, L) + L ln 2
///   bounded_uniform: ln C(K_c, L) + L ln(2 * kGainGridLevels), i.e. the entropy of the
///                    discretized prior the posterior actually uses.
double channel_entropy_nats(std::size_t kc, std::size_t l, GainModel model);

/// ln C(n, k) via log-gamma.
double log_binomial(std::size_t n, std::size_t k);

inline constexpr double kDefaultB3 = 6.0;

} // namespace spreadlab
