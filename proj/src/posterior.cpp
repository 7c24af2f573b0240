#include "spreadlab/posterior.hpp"

#include "spreadlab/cyclic.hpp"
#include "spreadlab/link.hpp"
#include "spreadlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spreadlab {

std::vector<double> Hypothesis::dense(std::size_t kc) const
{
    std::vector<double> h(kc, 0.0);
    for (std::size_t a = 0; a < support.size(); ++a)
        h[support[a]] = gains[a];
    return h;
}

std::string_view to_string(PosteriorMode mode)
{
    return mode == PosteriorMode::exact ? "exact" : "mcmc";
}

GaussianLikelihood::GaussianLikelihood(std::span<const double> y, const SpreadSignal& x, double snr)
    : GaussianLikelihood(empirical_autocorr(x), circulant_transpose_apply(x, y), norm2(y), snr)
{
}

GaussianLikelihood::GaussianLikelihood(std::vector<double> autocorr, std::vector<double> xty, double y_norm2,
                                       double snr)
    : autocorr_(std::move(autocorr)), xty_(std::move(xty)), y_norm2_(y_norm2), snr_(snr),
      sqrt_snr_(std::sqrt(snr))
{
    if (autocorr_.size() != xty_.size())
        throw std::invalid_argument("GaussianLikelihood: autocorrelation and x^T Y differ in length");
    if (!(snr >= 0.0))
        throw std::invalid_argument("GaussianLikelihood: snr must be nonnegative");
    log_norm_ = -0.5 * static_cast<double>(kc()) * std::log(2.0 * std::numbers::pi) - 0.5 * y_norm2_;
}

double GaussianLikelihood::log_likelihood(std::span<const std::size_t> support, std::span<const double> gains) const
{
    double linear = 0.0;
    double quadratic = 0.0;
    for (std::size_t a = 0; a < support.size(); ++a) {
        linear += gains[a] * xty_[support[a]];
        double row = 0.0;
        for (std::size_t b = 0; b < support.size(); ++b)
            row += gains[b] * shifted_inner(autocorr_, support[a], support[b]);
        quadratic += gains[a] * row;
    }
    return log_norm_ + sqrt_snr_ * linear - 0.5 * snr_ * quadratic;
}

double GaussianLikelihood::residual_correlation(std::size_t m, std::span<const std::size_t> support,
                                                std::span<const double> gains) const
{
    double acc = 0.0;
    for (std::size_t b = 0; b < support.size(); ++b)
        acc += gains[b] * shifted_inner(autocorr_, support[b], m);
    return xty_[m] - sqrt_snr_ * acc;
}

double hypothesis_count(std::size_t kc, std::size_t l, GainModel model)
{
    const auto alphabet = static_cast<double>(gain_alphabet(model, l).size());
    return std::exp(log_binomial(kc, l)) * std::pow(alphabet, static_cast<double>(l));
}

double log_sum_exp(std::span<const double> v)
{
    if (v.empty())
        return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m))
        return m;
    double acc = 0.0;
    for (double e : v)
        acc += std::exp(e - m);
    return m + std::log(acc);
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights)
{
    const double lse = log_sum_exp(log_weights);
    std::vector<double> w(log_weights.size());
    for (std::size_t n = 0; n < w.size(); ++n)
        w[n] = std::exp(log_weights[n] - lse);
    return w;
}

namespace {

bool next_combination(std::vector<std::size_t>& c, std::size_t n)
{
    const std::size_t k = c.size();
    for (std::size_t a = k; a-- > 0;) {
        if (c[a] < n - k + a) {
            ++c[a];
            for (std::size_t b = a + 1; b < k; ++b)
                c[b] = c[b - 1] + 1;
            return true;
        }
    }
    return false;
}

bool next_digits(std::vector<std::size_t>& d, std::size_t base)
{
    for (auto& v : d) {
        if (++v < base)
            return true;
        v = 0;
    }
    return false;
}

} // namespace

PosteriorSummary exact_posterior(const GaussianLikelihood& lik, std::size_t l, GainModel model,
                                 const ExactOptions& options)
{
    const std::size_t kc = lik.kc();
    if (l < 1 || l >= kc)
        throw std::invalid_argument("exact_posterior: need 1 <= L < K_c");
    const double count = hypothesis_count(kc, l, model);
    if (count > options.budget)
        throw std::length_error("exact_posterior: " + std::to_string(count) + " hypotheses exceed the budget of "
                                + std::to_string(options.budget) + "; use mcmc_posterior");

    const auto alphabet = gain_alphabet(model, l);
    PosteriorSummary out;
    out.mode = PosteriorMode::exact;
    out.hypotheses = count;

    // Streaming log-sum-exp: weighted sums are kept relative to the running max.
    double running_max = -std::numeric_limits<double>::infinity();
    double total = 0.0;
    std::vector<double> weighted(kc, 0.0);
    std::vector<double> kept_ll;

    std::vector<std::size_t> support(l);
    std::iota(support.begin(), support.end(), 0);
    std::vector<std::size_t> digits(l, 0);
    std::vector<double> gains(l);
    do {
        std::fill(digits.begin(), digits.end(), 0);
        do {
            for (std::size_t a = 0; a < l; ++a)
                gains[a] = alphabet[digits[a]];
            const double ll = lik.log_likelihood(support, gains);
            if (ll > running_max) {
                const double rescale = std::exp(running_max - ll);
                total *= rescale;
                for (auto& v : weighted)
                    v *= rescale;
                running_max = ll;
            }
            const double w = std::exp(ll - running_max);
            total += w;
            for (std::size_t a = 0; a < l; ++a)
                weighted[support[a]] += w * gains[a];
            if (options.keep_weights) {
                out.weights.push_back({Hypothesis{support, gains}, 0.0});
                kept_ll.push_back(ll);
            }
        } while (next_digits(digits, alphabet.size()));
    } while (next_combination(support, kc));

    out.hhat.resize(kc);
    for (std::size_t m = 0; m < kc; ++m)
        out.hhat[m] = weighted[m] / total;
    out.log_evidence = running_max + std::log(total) - std::log(count);

    if (options.keep_weights) {
        const auto w = normalize_log_weights(kept_ll);
        for (std::size_t n = 0; n < w.size(); ++n)
            out.weights[n].weight = w[n];
    }
    return out;
}

PosteriorSummary exact_posterior(std::span<const double> y, const SpreadSignal& x, double snr, std::size_t l,
                                 GainModel model, const ExactOptions& options)
{
    if (y.size() != x.kc())
        throw std::invalid_argument("exact_posterior: Y length does not match K_c");
    return exact_posterior(GaussianLikelihood(y, x, snr), l, model, options);
}

TapSampler::TapSampler(const GaussianLikelihood& lik, std::size_t l, std::vector<double> alphabet,
                       double refresh_rate)
    : lik_(&lik), l_(l), alphabet_(std::move(alphabet)), occupied_(lik.kc(), 0), refresh_rate_(refresh_rate)
{
    if (!(refresh_rate >= 0.0 && refresh_rate <= 1.0))
        throw std::invalid_argument("TapSampler: refresh_rate must lie in [0, 1]");
    if (l < 1 || l >= lik.kc())
        throw std::invalid_argument("TapSampler: need 1 <= L < K_c");
    if (alphabet_.size() < 2)
        throw std::invalid_argument("TapSampler: gain alphabet needs at least two values");
}

void TapSampler::reset(const Hypothesis& h)
{
    if (h.support.size() != l_ || h.gains.size() != l_)
        throw std::invalid_argument("TapSampler::reset: hypothesis has the wrong number of taps");
    std::fill(occupied_.begin(), occupied_.end(), 0);
    pos_ = h.support;
    gain_.assign(l_, 0.0);
    gain_index_.assign(l_, 0);
    for (std::size_t a = 0; a < l_; ++a) {
        if (pos_[a] >= occupied_.size() || occupied_[pos_[a]])
            throw std::invalid_argument("TapSampler::reset: invalid support");
        occupied_[pos_[a]] = 1;
        const auto nearest = std::min_element(alphabet_.begin(), alphabet_.end(), [&](double u, double v) {
            return std::abs(u - h.gains[a]) < std::abs(v - h.gains[a]);
        });
        gain_index_[a] = static_cast<std::size_t>(nearest - alphabet_.begin());
        gain_[a] = *nearest;
    }
    ll_ = lik_->log_likelihood(pos_, gain_);
}

void TapSampler::randomize(Engine& rng)
{
    Hypothesis h;
    h.support = sample_support(lik_->kc(), l_, rng);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet_.size() - 1);
    for (std::size_t a = 0; a < l_; ++a)
        h.gains.push_back(alphabet_[pick(rng)]);
    reset(h);
}

Hypothesis TapSampler::state() const
{
    std::vector<std::size_t> order(l_);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pos_[a] < pos_[b]; });
    Hypothesis h;
    for (auto a : order) {
        h.support.push_back(pos_[a]);
        h.gains.push_back(gain_[a]);
    }
    return h;
}

bool TapSampler::accept(double delta, Engine& rng)
{
    if (delta >= 0.0)
        return true;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return unit(rng) < std::exp(delta);
}

void TapSampler::apply(std::size_t a, std::size_t k, std::size_t gi, double delta)
{
    last_ = Change{a, pos_[a], gain_[a]};
    occupied_[pos_[a]] = 0;
    occupied_[k] = 1;
    pos_[a] = k;
    gain_[a] = alphabet_[gi];
    gain_index_[a] = gi;
    ll_ += delta;
}

bool TapSampler::propose_move(Engine& rng)
{
    const std::size_t kc = lik_->kc();
    std::uniform_int_distribution<std::size_t> pick_tap(0, l_ - 1);
    std::uniform_int_distribution<std::size_t> pick_pos(0, kc - 1);
    const std::size_t a = pick_tap(rng);
    std::size_t k = pick_pos(rng);
    while (occupied_[k])
        k = pick_pos(rng);

    const std::size_t j = pos_[a];
    const double g = gain_[a];
    const auto r = lik_->autocorr();
    const double uk = lik_->residual_correlation(k, pos_, gain_);
    const double uj = lik_->residual_correlation(j, pos_, gain_);
    const double delta = lik_->sqrt_snr() * g * (uk - uj) - lik_->snr() * g * g * (r[0] - shifted_inner(r, j, k));
    if (!accept(delta, rng))
        return false;
    apply(a, k, gain_index_[a], delta);
    return true;
}

bool TapSampler::propose_gain(Engine& rng)
{
    std::uniform_int_distribution<std::size_t> pick_tap(0, l_ - 1);
    std::uniform_int_distribution<std::size_t> pick_other(0, alphabet_.size() - 2);
    const std::size_t a = pick_tap(rng);
    std::size_t idx = pick_other(rng);
    if (idx >= gain_index_[a])
        ++idx;

    const std::size_t j = pos_[a];
    const double dg = alphabet_[idx] - gain_[a];
    const double uj = lik_->residual_correlation(j, pos_, gain_);
    const double delta = lik_->sqrt_snr() * dg * uj - 0.5 * lik_->snr() * dg * dg * lik_->autocorr()[0];
    if (!accept(delta, rng))
        return false;
    apply(a, j, idx, delta);
    return true;
}

bool TapSampler::refresh(Engine& rng)
{
    std::uniform_int_distribution<std::size_t> pick_tap(0, l_ - 1);
    const std::size_t a = pick_tap(rng);
    const std::size_t j = pos_[a];
    const double g = gain_[a];
    const auto r = lik_->autocorr();
    const double rs = lik_->sqrt_snr();
    const double half_s_r0 = 0.5 * lik_->snr() * r[0];
    const std::size_t kc = lik_->kc();
    const std::size_t na = alphabet_.size();

    // Residual correlation with every column, tap a removed.
    const auto q = lik_->xty();
    resid_.assign(q.begin(), q.end());
    for (std::size_t b = 0; b < l_; ++b) {
        if (b == a)
            continue;
        const double w = rs * gain_[b];
        const std::size_t p = pos_[b];
        for (std::size_t m = p; m < kc; ++m)
            resid_[m] -= w * r[m - p];
        for (std::size_t m = 0; m < p; ++m)
            resid_[m] -= w * r[m + kc - p];
    }

    // Log-likelihood of "tap a at (m, g')" relative to "tap a removed".
    scratch_.assign(kc * na, -std::numeric_limits<double>::infinity());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < kc; ++m) {
        if (occupied_[m] && m != j)
            continue;
        const double u = resid_[m];
        for (std::size_t gi = 0; gi < na; ++gi) {
            const double gg = alphabet_[gi];
            const double v = rs * gg * u - half_s_r0 * gg * gg;
            scratch_[m * na + gi] = v;
            best = std::max(best, v);
        }
    }
    double total = 0.0;
    for (auto& v : scratch_) {
        v = std::exp(v - best);
        total += v;
    }
    std::uniform_real_distribution<double> unit(0.0, total);
    double target = unit(rng);
    std::size_t pick = 0;
    for (; pick + 1 < scratch_.size(); ++pick) {
        target -= scratch_[pick];
        if (target < 0.0)
            break;
    }
    while (scratch_[pick] == 0.0)  // rounding can run past the last live cell
        --pick;

    const std::size_t k = pick / na;
    const std::size_t gi = pick % na;
    if (k == j && gi == gain_index_[a])
        return false;
    const double old_rel = rs * g * resid_[j] - half_s_r0 * g * g;
    const double gk = alphabet_[gi];
    apply(a, k, gi, rs * gk * resid_[k] - half_s_r0 * gk * gk - old_rel);
    return true;
}

bool TapSampler::step(Engine& rng)
{
    if (pos_.empty())
        throw std::logic_error("TapSampler::step called before reset/randomize");
    if (refresh_rate_ > 0.0) {
        std::bernoulli_distribution use_refresh(refresh_rate_);
        if (use_refresh(rng))
            return refresh(rng);
    }
    std::bernoulli_distribution coin(0.5);
    return coin(rng) ? propose_move(rng) : propose_gain(rng);
}

namespace {

// Effective sample size of a scalar trace by non-overlapping batch means.
double batch_means_ess(std::span<const double> trace)
{
    const std::size_t n = trace.size();
    if (n < 4)
        return static_cast<double>(n);
    const double mean = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : trace)
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    if (var <= 1e-24 * (1.0 + mean * mean))
        return static_cast<double>(n);

    const auto batch = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    const std::size_t batches = n / batch;
    double bvar = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
        const double bm = std::accumulate(trace.begin() + static_cast<std::ptrdiff_t>(b * batch),
                                          trace.begin() + static_cast<std::ptrdiff_t>((b + 1) * batch), 0.0)
                          / static_cast<double>(batch);
        bvar += (bm - mean) * (bm - mean);
    }
    bvar /= static_cast<double>(batches - 1);
    if (bvar <= 0.0)
        return static_cast<double>(n);
    return std::min(static_cast<double>(n), static_cast<double>(n) * var / (static_cast<double>(batch) * bvar));
}

} // namespace

PosteriorSummary mcmc_posterior(const GaussianLikelihood& lik, std::size_t l, GainModel model,
                                const McmcOptions& options)
{
    if (options.chains < 2)
        throw std::invalid_argument("mcmc_posterior: at least two chains are required");
    if (options.samples < 1)
        throw std::invalid_argument("mcmc_posterior: samples must be positive");
    const std::size_t kc = lik.kc();
    const std::size_t burnin = options.burnin > 0 ? options.burnin : 10 * kc;
    const std::size_t n = options.samples;

    std::vector<std::vector<double>> chain_means(options.chains, std::vector<double>(kc, 0.0));
    std::size_t accepted = 0;
    double ess = 0.0;
    std::vector<double> trace(n);
    std::vector<std::size_t> since(l);

    for (std::size_t c = 0; c < options.chains; ++c) {
        Engine rng(derive_seed(options.seed, c));
        TapSampler sampler(lik, l, gain_alphabet(model, l), options.refresh_rate);
        sampler.randomize(rng);
        for (std::size_t t = 0; t < burnin; ++t)
            sampler.step(rng);

        // Each tap's gain is credited to its position for as long as it stays there.
        auto& sum = chain_means[c];
        std::fill(since.begin(), since.end(), 0);
        for (std::size_t t = 0; t < n; ++t) {
            if (sampler.step(rng)) {
                const auto& ch = sampler.last_change();
                sum[ch.old_position] += ch.old_gain * static_cast<double>(t - since[ch.tap]);
                since[ch.tap] = t;
                ++accepted;
            }
            trace[t] = sampler.log_likelihood();
        }
        for (std::size_t a = 0; a < l; ++a)
            sum[sampler.positions()[a]] += sampler.gains()[a] * static_cast<double>(n - since[a]);
        for (auto& v : sum)
            v /= static_cast<double>(n);
        ess += batch_means_ess(trace);
    }

    PosteriorSummary out;
    out.mode = PosteriorMode::mcmc;
    out.hhat.assign(kc, 0.0);
    double gap = 0.0;
    for (std::size_t m = 0; m < kc; ++m) {
        double lo = chain_means[0][m];
        double hi = lo;
        double acc = 0.0;
        for (const auto& cm : chain_means) {
            acc += cm[m];
            lo = std::min(lo, cm[m]);
            hi = std::max(hi, cm[m]);
        }
        out.hhat[m] = acc / static_cast<double>(options.chains);
        gap = std::max(gap, hi - lo);
    }
    out.samples = n * options.chains;
    out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(out.samples);
    out.ess = ess;
    out.max_chain_gap = gap;
    out.converged = gap <= options.gap_tolerance;
    return out;
}

PosteriorSummary mcmc_posterior(std::span<const double> y, const SpreadSignal& x, double snr, std::size_t l,
                                GainModel model, const McmcOptions& options)
{
    if (y.size() != x.kc())
        throw std::invalid_argument("mcmc_posterior: Y length does not match K_c");
    return mcmc_posterior(GaussianLikelihood(y, x, snr), l, model, options);
}

PosteriorMode resolve_mode(std::size_t kc, std::size_t l, GainModel model, const MmseOptions& options)
{
    switch (options.choice) {
    case PosteriorChoice::exact:
        return PosteriorMode::exact;
    case PosteriorChoice::mcmc:
        return PosteriorMode::mcmc;
    case PosteriorChoice::automatic:
        break;
    }
    return hypothesis_count(kc, l, model) <= options.exact.budget ? PosteriorMode::exact : PosteriorMode::mcmc;
}

MmseTrialSet mmse_trials(const SpreadSignal& x, std::span<const double> snr_grid, const MmseOptions& options)
{
    if (options.trials < 1)
        throw std::invalid_argument("mmse: trials must be at least 1");
    for (double s : snr_grid)
        if (!(s >= 0.0))
            throw std::invalid_argument("mmse: snr values must be nonnegative");

    const std::size_t kc = x.kc();
    const std::size_t l = options.l;
    if (l < 1 || l >= kc)
        throw std::invalid_argument("mmse: need 1 <= L < K_c");

    MmseTrialSet out;
    out.snr_grid.assign(snr_grid.begin(), snr_grid.end());
    out.mode = resolve_mode(kc, l, options.model, options);
    out.errors.assign(options.trials, std::vector<double>(snr_grid.size(), 0.0));
    if (out.mode == PosteriorMode::exact)
        out.info_density.assign(options.trials, std::vector<double>(snr_grid.size(), 0.0));
    std::vector<std::size_t> nonconverged(options.trials, 0);

    const auto autocorr = empirical_autocorr(x);

    parallel_for(options.trials, options.workers, [&](std::size_t t) {
        const auto h = sample_channel(kc, l, options.model, derive_seed(options.seed, t, 0));
        const auto z = draw_noise(kc, derive_seed(options.seed, t, 1));
        const auto hd = h.dense();
        const auto xh = circulant_apply(x, hd);
        const auto xtz = circulant_transpose_apply(x, z);
        const auto xtxh = circulant_transpose_apply(x, xh);
        const double zz = norm2(z);
        const double hh = norm2(xh);
        const double hz = dot(xh, z);

        for (std::size_t p = 0; p < snr_grid.size(); ++p) {
            const double s = snr_grid[p];
            const double a = std::sqrt(s);
            std::vector<double> xty(kc);
            for (std::size_t m = 0; m < kc; ++m)
                xty[m] = a * xtxh[m] + xtz[m];
            const GaussianLikelihood lik(autocorr, std::move(xty), s * hh + 2.0 * a * hz + zz, s);

            PosteriorSummary post;
            if (out.mode == PosteriorMode::exact) {
                post = exact_posterior(lik, l, options.model, options.exact);
                out.info_density[t][p] = lik.log_likelihood(h.support, h.gains) - post.log_evidence;
            } else {
                auto mc = options.mcmc;
                mc.seed = derive_seed(options.seed, t, 2 + p);
                post = mcmc_posterior(lik, l, options.model, mc);
                if (!post.converged)
                    ++nonconverged[t];
            }

            std::vector<double> diff(kc);
            for (std::size_t m = 0; m < kc; ++m)
                diff[m] = hd[m] - post.hhat[m];
            out.errors[t][p] = norm2(circulant_apply(x, diff));
        }
    });

    out.nonconverged = std::accumulate(nonconverged.begin(), nonconverged.end(), std::size_t{0});
    return out;
}

MmseEstimate mmse_at(const SpreadSignal& x, double snr, const MmseOptions& options)
{
    const double grid[] = {snr};
    const auto set = mmse_trials(x, grid, options);
    const auto n = static_cast<double>(set.errors.size());
    double mean = 0.0;
    for (const auto& row : set.errors)
        mean += row[0];
    mean /= n;
    double var = 0.0;
    for (const auto& row : set.errors)
        var += (row[0] - mean) * (row[0] - mean);
    MmseEstimate est;
    est.mean = mean;
    est.std_error = set.errors.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
    return est;
}

} // namespace spreadlab
