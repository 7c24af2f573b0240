#pragma once

#include "spreadlab/channel.hpp"
#include "spreadlab/rng.hpp"
#include "spreadlab/signals.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace spreadlab {

/// A candidate channel: L taps at distinct positions with gains from the model's alphabet.
struct Hypothesis {
    std::vector<std::size_t> support;
    std::vector<double> gains;

    std::vector<double> dense(std::size_t kc) const;
};

/// Gaussian log-likelihood ln f(Y | x, H) for Y = sqrt(snr) x H + Z, evaluated in
/// the reduced form
///
///   -K/2 ln(2 pi) - 1/2 |Y|^2 + sqrt(snr) <x^T Y, H> - snr/2 H^T (x^T x) H,
///
/// where x^T x is circulant with first row r (the autocorrelation of X). Costs
/// O(L^2) per hypothesis after an O(K^2) (or FFT) setup.
class GaussianLikelihood {
public:
    GaussianLikelihood(std::span<const double> y, const SpreadSignal& x, double snr);

    /// Setup from precomputed pieces: xty = x^T Y, y_norm2 = |Y|^2.
    GaussianLikelihood(std::vector<double> autocorr, std::vector<double> xty, double y_norm2, double snr);

    std::size_t kc() const noexcept { return autocorr_.size(); }
    double snr() const noexcept { return snr_; }
    double sqrt_snr() const noexcept { return sqrt_snr_; }
    std::span<const double> autocorr() const noexcept { return autocorr_; }
    std::span<const double> xty() const noexcept { return xty_; }

    double log_likelihood(std::span<const std::size_t> support, std::span<const double> gains) const;
    double log_likelihood(const Hypothesis& h) const { return log_likelihood(h.support, h.gains); }

    /// <Y - sqrt(snr) x H, X^m>, the residual's correlation with column m.
    double residual_correlation(std::size_t m, std::span<const std::size_t> support,
                                std::span<const double> gains) const;

private:
    std::vector<double> autocorr_;
    std::vector<double> xty_;
    double y_norm2_;
    double snr_;
    double sqrt_snr_;
    double log_norm_;
};

enum class PosteriorMode { exact, mcmc };

std::string_view to_string(PosteriorMode mode);

struct WeightedHypothesis {
    Hypothesis hypothesis;
    double weight = 0.0;
};

struct PosteriorSummary {
    std::vector<double> hhat; // posterior mean E[H | Y, x], length K_c
    PosteriorMode mode = PosteriorMode::exact;

    // exact mode
    double log_evidence = std::numeric_limits<double>::quiet_NaN(); // ln p(Y | x)
    double hypotheses = 0.0;
    std::vector<WeightedHypothesis> weights; // filled only when requested

    // mcmc mode
    double ess = std::numeric_limits<double>::quiet_NaN();
    double acceptance_rate = std::numeric_limits<double>::quiet_NaN();
    double max_chain_gap = std::numeric_limits<double>::quiet_NaN();
    bool converged = true;
    std::size_t samples = 0; // pooled post-burn-in states
};

/// Number of hypotheses C(K_c, L) |alphabet|^L, as a double.
double hypothesis_count(std::size_t kc, std::size_t l, GainModel model);

inline constexpr double kExactBudget = 1e7;

struct ExactOptions {
    double budget = kExactBudget;
    bool keep_weights = false;
};

/// Posterior mean by full enumeration under the uniform prior. Throws
/// std::length_error when the hypothesis count exceeds the budget (use
/// mcmc_posterior instead).
PosteriorSummary exact_posterior(std::span<const double> y, const SpreadSignal& x, double snr, std::size_t l,
                                 GainModel model, const ExactOptions& options = {});
PosteriorSummary exact_posterior(const GaussianLikelihood& lik, std::size_t l, GainModel model,
                                 const ExactOptions& options = {});

/// exp(v - logsumexp(v)), computed with max subtraction.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);
double log_sum_exp(std::span<const double> v);

struct McmcOptions {
    std::size_t chains = 4;
    std::size_t burnin = 0;           // per chain; 0 means 10 * K_c
    std::size_t samples = 5000;       // post-burn-in states per chain
    std::uint64_t seed = 0;
    double gap_tolerance = 0.05;      // largest tolerated cross-chain gap of a coordinate mean
    double refresh_rate = 0.1;        // fraction of steps that redraw one tap from its full conditional
};

/// Metropolis-Hastings over hypotheses. Two symmetric proposals, each chosen
/// with probability 1/2:
///   - tap move: pick an occupied position j and an empty position k uniformly
///     and move the tap (gain unchanged) from j to k;
///   - gain move: pick a tap uniformly and replace its gain by a different
///     alphabet value chosen uniformly (a sign flip for rademacher gains).
/// Acceptance uses the exact likelihood ratio; chains start from prior draws.
///
/// With refresh_rate > 0 that fraction of steps instead redraws one tap's
/// (position, gain) from its conditional given the other taps, a Gibbs update
/// over every empty position. The uniform moves alone need on the order of
/// L * K_c proposals to find the last missing path at high snr.
class TapSampler {
public:
    TapSampler(const GaussianLikelihood& lik, std::size_t l, std::vector<double> alphabet,
               double refresh_rate = 0.0);

    void reset(const Hypothesis& h);
    void randomize(Engine& rng);

    /// One proposal; returns true when accepted.
    bool step(Engine& rng);

    std::span<const std::size_t> positions() const noexcept { return pos_; }
    std::span<const double> gains() const noexcept { return gain_; }
    double log_likelihood() const noexcept { return ll_; }

    /// Current state with taps in sorted order.
    Hypothesis state() const;

    /// What the last accepted proposal replaced.
    struct Change {
        std::size_t tap = 0;
        std::size_t old_position = 0;
        double old_gain = 0.0;
    };
    const Change& last_change() const noexcept { return last_; }

private:
    bool propose_move(Engine& rng);
    bool propose_gain(Engine& rng);
    bool refresh(Engine& rng);
    bool accept(double delta, Engine& rng);
    void apply(std::size_t tap, std::size_t position, std::size_t gain_index, double delta);

    const GaussianLikelihood* lik_;
    std::size_t l_;
    std::vector<double> alphabet_;
    std::vector<std::size_t> pos_;
    std::vector<double> gain_;
    std::vector<std::size_t> gain_index_;
    std::vector<char> occupied_;
    std::vector<double> resid_;
    std::vector<double> scratch_;
    double refresh_rate_;
    double ll_ = 0.0;
    Change last_;
};

PosteriorSummary mcmc_posterior(std::span<const double> y, const SpreadSignal& x, double snr, std::size_t l,
                                GainModel model, const McmcOptions& options);
PosteriorSummary mcmc_posterior(const GaussianLikelihood& lik, std::size_t l, GainModel model,
                                const McmcOptions& options);

enum class PosteriorChoice { automatic, exact, mcmc };

struct MmseOptions {
    std::size_t l = 1;
    GainModel model = GainModel::rademacher;
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    PosteriorChoice choice = PosteriorChoice::automatic;
    ExactOptions exact;
    McmcOptions mcmc;
    unsigned workers = 1;
};

/// Squared errors |x H - x Hhat(Y; snr)|^2 for every (trial, snr) pair. Each
/// trial draws one (H, Z) and reuses it across the whole snr grid.
struct MmseTrialSet {
    std::vector<double> snr_grid;
    std::vector<std::vector<double>> errors;        // [trial][grid point]
    std::vector<std::vector<double>> info_density;  // exact mode: ln f(Y|x,H) - ln p(Y|x)
    PosteriorMode mode = PosteriorMode::exact;
    std::size_t nonconverged = 0;                   // mcmc posteriors that missed gap_tolerance
};

/// Trial t draws H from derive_seed(seed, t, 0), Z from derive_seed(seed, t, 1) and
/// seeds the sampler at grid point p with derive_seed(seed, t, 2 + p).
MmseTrialSet mmse_trials(const SpreadSignal& x, std::span<const double> snr_grid, const MmseOptions& options);

struct MmseEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

MmseEstimate mmse_at(const SpreadSignal& x, double snr, const MmseOptions& options);

/// Which posterior mmse_trials would use for (K_c, L, model).
PosteriorMode resolve_mode(std::size_t kc, std::size_t l, GainModel model, const MmseOptions& options);

} // namespace spreadlab
