#pragma once

#include "spreadlab/channel.hpp"
#include "spreadlab/posterior.hpp"
#include "spreadlab/signals.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spreadlab {

/// The quadratic form -1/2 |Y - sqrt(snr) x H^{i->k}|^2 split into eight lines.
/// With V = H^{i->k} - I(H_i, k) (H with position i cleared) and I = I(H_i, k):
///   t[0] = -1/2 |Y|^2
///   t[1] = -1/2 |sqrt(snr) x V|^2
///   t[2] = -1/2 |sqrt(snr) x I|^2
///   t[3] = -<sqrt(snr) x V, sqrt(snr) x I>
///   t[4] =  <sqrt(snr) x H~, sqrt(snr) x V>
///   t[5] =  <sqrt(snr) x H~, sqrt(snr) x I>
///   t[6] =  <Z, sqrt(snr) x V>
///   t[7] =  <Z, sqrt(snr) x I>
struct ExponentDecomposition {
    std::array<double, 8> terms{};
    double total = 0.0;
};

/// A fixed (X, H~, Z, snr) instance with Y = sqrt(snr) x H~ + Z.
struct ProofInstance {
    SpreadSignal x;
    ChannelRealization truth;
    std::vector<double> z;
    double snr = 0.0;

    std::vector<double> received() const;
};

/// H with the value at position i moved to position k (k = i returns H).
Hypothesis swap_tap(const Hypothesis& h, std::size_t i, std::size_t k);

/// Throws std::invalid_argument unless H has a tap at i and k is i or empty in H.
void require_swap_pair(const Hypothesis& h, std::size_t kc, std::size_t i, std::size_t k);

/// Evaluates every line literally with circulant products and inner products.
ExponentDecomposition decompose_exponent(const ProofInstance& inst, const Hypothesis& h, std::size_t i,
                                         std::size_t k);

struct AbcTerms {
    double a = 0.0; // -snr H_i sum_{j != k} H^{i->k}_j <X^j, X^k>   (line 4)
    double b = 0.0; //  snr H_i sum_j H~_j <X^j, X^k>                  (line 6)
    double c = 0.0; //  <Z, sqrt(snr) x I(H_i, k)>                    (line 8)
};

/// The a/b/c terms through the autocorrelation route (independent of the
/// circulant products used by decompose_exponent).
AbcTerms ab_c_terms(const ProofInstance& inst, std::span<const double> autocorr, const Hypothesis& h,
                    std::size_t i, std::size_t k);
AbcTerms ab_c_terms(const ProofInstance& inst, const Hypothesis& h, std::size_t i, std::size_t k);

inline constexpr double kEulerGamma = 0.57721566490153286061;

/// Asymptotic mean of the maximum of M IID N(0, sigma^2):
///   sigma (sqrt(2 ln M) - (ln ln M + ln 4 pi - 2 C) / (2 sqrt(2 ln M)))
double order_stat_mean(std::size_t m, double sigma);

/// The same expansion with ln 2 pi in place of ln 4 pi. Kept for comparison;
/// it sits ln 2 / (2 sqrt(2 ln M)) sigma above order_stat_mean.
double order_stat_mean_ln2pi(std::size_t m, double sigma);

/// pi^2 sigma^2 / (12 ln M).
double order_stat_var(std::size_t m, double sigma);

/// A swap group A(H): the anchor (a support holding a tap at i) and the supports
/// H^{i->k} assigned to it. Supports are sorted index lists.
struct SwapGroup {
    std::vector<std::size_t> anchor;
    std::vector<std::vector<std::size_t>> members; // members[0] == anchor
    std::vector<std::size_t> k_set;                // k_set[n] is the k of members[n]; k_set[0] == i

    std::size_t others() const noexcept { return members.size() - 1; }
};

struct SwapPartition {
    std::size_t kc = 0;
    std::size_t l = 0;
    std::size_t pivot = 0; // the index i
    std::vector<SwapGroup> groups;
    std::size_t relocations = 0;

    /// (K_c - L) / L
    double nominal_size() const noexcept;
};

inline constexpr double kPartitionBudget = 1e6;

/// Partitions all L-subsets of [0, K_c) into swap groups around position i.
/// Supports without a tap at i pick one of their taps uniformly and move it to i;
/// the result names the anchor they join. A balancing pass then relocates members
/// between compatible groups (those reachable by a different choice of tap)
/// while any group has more than 2x or fewer than 1/2x the nominal number of
/// other members, always moving to the smallest compatible group, and only when
/// the move strictly narrows the size gap.
SwapPartition build_swap_partition(std::size_t kc, std::size_t l, std::size_t i, std::uint64_t seed);

struct PartitionCheck {
    bool disjoint = true;
    bool covering = true;
    bool anchors_hold_pivot = true;
    bool members_differ_in_two = true;
    bool sizes_balanced = true;
    std::size_t supports_seen = 0;
    double mean_others = 0.0;
    std::size_t min_others = 0;
    std::size_t max_others = 0;

    bool ok() const noexcept
    {
        return disjoint && covering && anchors_hold_pivot && members_differ_in_two && sizes_balanced;
    }
};

/// Exhaustive structural verification of a partition.
PartitionCheck verify_partition(const SwapPartition& p);

/// Samples K(H) as the swap construction does for one anchor: i is always in the
/// set and each empty position k of H joins with probability 1/L (the chance that
/// H^{i->k} picks its tap at k when choosing which tap to move to i).
std::vector<std::size_t> sample_k_set(std::size_t kc, const Hypothesis& anchor, std::size_t i, std::uint64_t seed);

struct JRatio {
    double log_abs_j = 0.0;       // ln|J|
    double j = 0.0;               // may underflow to 0; use log_abs_j
    double log_nominator = 0.0;   // ln|H_i| - 1/2 |Y - sqrt(snr) x H|^2
    double log_denominator = 0.0; // ln sum_k exp(-1/2 |Y - sqrt(snr) x H^{i->k}|^2)
    double c_kstar = 0.0;         // max_k c_k
    std::size_t k_star = 0;       // argmax (lowest index wins ties)
    std::size_t group_size = 0;   // |K(H)|
};

/// J(H) = H_i e^{E_i} / sum_{k in K(H)} e^{E_k},  E_k = -1/2 |Y - sqrt(snr) x H^{i->k}|^2,
/// evaluated in the log domain.
JRatio j_ratio(const ProofInstance& inst, const Hypothesis& anchor, std::size_t i,
               std::span<const std::size_t> k_set);

} // namespace spreadlab
