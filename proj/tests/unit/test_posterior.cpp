#include "spreadlab/cyclic.hpp"
#include "spreadlab/link.hpp"
#include "spreadlab/posterior.hpp"

#include "doctest.h"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <map>
#include <numbers>
#include <queue>
#include <set>

using namespace spreadlab;

namespace {

// Independent oracle: enumerate every hypothesis, form Y - sqrt(s) x H by
// explicit column sums, and weight by exp(-|.|^2 / 2).
struct BruteForce {
    std::vector<double> mean;
    double log_evidence = 0.0;
    std::map<std::pair<std::vector<std::size_t>, std::vector<double>>, double> weights;
};

BruteForce brute_force(const std::vector<double>& y, const SpreadSignal& x, double snr, std::size_t l,
                       const std::vector<double>& alphabet)
{
    const std::size_t kc = x.kc();
    std::vector<std::pair<std::pair<std::vector<std::size_t>, std::vector<double>>, double>> all;
    std::vector<std::size_t> idx(l);
    std::function<void(std::size_t, std::size_t)> supports = [&](std::size_t depth, std::size_t from) {
        if (depth == l) {
            std::vector<std::size_t> digits(l, 0);
            while (true) {
                std::vector<double> g(l);
                for (std::size_t a = 0; a < l; ++a)
                    g[a] = alphabet[digits[a]];
                std::vector<double> res = y;
                for (std::size_t a = 0; a < l; ++a) {
                    const auto col = cyclic_shift(x, std::int64_t(idx[a]));
                    for (std::size_t n = 0; n < kc; ++n)
                        res[n] -= std::sqrt(snr) * g[a] * col[n];
                }
                double rr = 0.0;
                for (double v : res)
                    rr += v * v;
                all.push_back({{idx, g}, -0.5 * rr});
                std::size_t a = 0;
                while (a < l && ++digits[a] == alphabet.size())
                    digits[a++] = 0;
                if (a == l)
                    break;
            }
            return;
        }
        for (std::size_t p = from; p < kc; ++p) {
            idx[depth] = p;
            supports(depth + 1, p + 1);
        }
    };
    supports(0, 0);

    double mx = -1e300;
    for (const auto& e : all)
        mx = std::max(mx, e.second);
    double total = 0.0;
    for (const auto& e : all)
        total += std::exp(e.second - mx);
    BruteForce out;
    out.mean.assign(kc, 0.0);
    for (const auto& e : all) {
        const double w = std::exp(e.second - mx) / total;
        out.weights[e.first] = w;
        for (std::size_t a = 0; a < l; ++a)
            out.mean[e.first.first[a]] += w * e.first.second[a];
    }
    out.log_evidence = mx + std::log(total) - std::log(double(all.size()))
                       - 0.5 * double(kc) * std::log(2.0 * std::numbers::pi);
    return out;
}

LinkObservation observe(std::size_t kc, std::size_t l, GainModel model, double snr, std::uint64_t seed)
{
    const auto x = gen_signal(SignalKind::iid_binary, kc, {}, seed);
    const auto h = sample_channel(kc, l, model, seed + 1);
    return transmit(x, h, snr, seed + 2);
}

} // namespace

TEST_CASE("log-likelihood matches the Gaussian density of the residual")
{
    const auto obs = observe(12, 3, GainModel::bounded_uniform, 1.7, 4);
    const GaussianLikelihood lik(obs.y, obs.x, obs.snr);
    const auto h = sample_channel(12, 3, GainModel::bounded_uniform, 99);
    const auto xh = circulant_apply(obs.x, h.dense());
    double rr = 0.0;
    for (std::size_t n = 0; n < 12; ++n)
        rr += std::pow(obs.y[n] - std::sqrt(obs.snr) * xh[n], 2);
    const double expected = -6.0 * std::log(2.0 * std::numbers::pi) - 0.5 * rr;
    CHECK(lik.log_likelihood(h.support, h.gains) == doctest::Approx(expected).epsilon(1e-12));

    // residual correlation is <Y - sqrt(s) x H, X^m>
    std::vector<double> res(12);
    for (std::size_t n = 0; n < 12; ++n)
        res[n] = obs.y[n] - std::sqrt(obs.snr) * xh[n];
    for (std::size_t m = 0; m < 12; ++m)
        CHECK(lik.residual_correlation(m, h.support, h.gains)
              == doctest::Approx(dot(res, circulant_column(obs.x, m))).epsilon(1e-12));
}

TEST_CASE("exact posterior agrees with brute-force enumeration")
{
    for (auto model : {GainModel::rademacher, GainModel::bounded_uniform}) {
        const std::size_t kc = model == GainModel::rademacher ? 10 : 7;
        const auto obs = observe(kc, 2, model, 0.8, 17);
        ExactOptions opts;
        opts.keep_weights = true;
        const auto post = exact_posterior(obs.y, obs.x, obs.snr, 2, model, opts);
        const auto oracle = brute_force(obs.y, obs.x, obs.snr, 2, gain_alphabet(model, 2));

        CHECK(post.mode == PosteriorMode::exact);
        CHECK(post.hypotheses == doctest::Approx(hypothesis_count(kc, 2, model)));
        CHECK(post.log_evidence == doctest::Approx(oracle.log_evidence).epsilon(1e-10));
        for (std::size_t m = 0; m < kc; ++m)
            CHECK(post.hhat[m] == doctest::Approx(oracle.mean[m]).epsilon(1e-10).scale(1.0));

        REQUIRE(post.weights.size() == oracle.weights.size());
        double sum = 0.0;
        for (const auto& wh : post.weights) {
            const auto it = oracle.weights.find({wh.hypothesis.support, wh.hypothesis.gains});
            REQUIRE(it != oracle.weights.end());
            CHECK(wh.weight == doctest::Approx(it->second).epsilon(1e-9).scale(1e-3));
            sum += wh.weight;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("snr = 0 posterior mean is zero and evidence equals the noise density")
{
    const auto obs = observe(8, 2, GainModel::rademacher, 0.0, 3);
    const auto post = exact_posterior(obs.y, obs.x, 0.0, 2, GainModel::rademacher);
    for (double v : post.hhat)
        CHECK(std::abs(v) < 1e-14);
    CHECK(post.log_evidence
          == doctest::Approx(-4.0 * std::log(2.0 * std::numbers::pi) - 0.5 * norm2(obs.y)).epsilon(1e-12));
}

TEST_CASE("exact posterior refuses hypothesis spaces over budget")
{
    const auto obs = observe(64, 8, GainModel::rademacher, 1.0, 3);
    CHECK(hypothesis_count(64, 8, GainModel::rademacher) > kExactBudget);
    CHECK_THROWS_AS(exact_posterior(obs.y, obs.x, 1.0, 8, GainModel::rademacher), std::length_error);
    ExactOptions tiny;
    tiny.budget = 10;
    const auto small = observe(8, 2, GainModel::rademacher, 1.0, 3);
    CHECK_THROWS_AS(exact_posterior(small.y, small.x, 1.0, 2, GainModel::rademacher, tiny), std::length_error);
}

TEST_CASE("weight normalization is shift invariant")
{
    const std::vector<double> lw{-3.0, 0.5, 2.0, -1e3};
    auto shifted = lw;
    for (auto& v : shifted)
        v += 812.25;
    const auto a = normalize_log_weights(lw);
    const auto b = normalize_log_weights(shifted);
    double sum = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        CHECK(a[n] == doctest::Approx(b[n]).epsilon(1e-12));
        sum += a[n];
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK(log_sum_exp(shifted) == doctest::Approx(log_sum_exp(lw) + 812.25).epsilon(1e-14));
    CHECK(log_sum_exp(std::vector<double>{0.0, 0.0}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("orthogonality principle: the estimation error is uncorrelated with the estimate")
{
    // E[(H - Hhat)^T Hhat] = 0 for the conditional mean.
    const auto x = gen_signal(SignalKind::iid_binary, 8, {}, 5);
    const std::size_t n = 3000;
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const auto h = sample_channel(8, 2, GainModel::rademacher, 1000 + t);
        const auto obs = transmit(x, h, 1.0, 50000 + t);
        const auto post = exact_posterior(obs.y, x, 1.0, 2, GainModel::rademacher);
        const auto hd = h.dense();
        double v = 0.0;
        for (std::size_t m = 0; m < 8; ++m)
            v += (hd[m] - post.hhat[m]) * post.hhat[m];
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / double(n);
    const double se = std::sqrt((sum2 / double(n) - mean * mean) / double(n));
    CHECK(std::abs(mean) < 4.0 * se);
}

TEST_CASE("tap-move graph on K_c=12, L=2 is connected with L(K_c - L) neighbours per support")
{
    const std::size_t kc = 12;
    std::set<std::vector<std::size_t>> seen;
    std::queue<std::vector<std::size_t>> todo;
    todo.push({0, 1});
    seen.insert({0, 1});
    while (!todo.empty()) {
        const auto s = todo.front();
        todo.pop();
        std::size_t neighbours = 0;
        for (std::size_t a = 0; a < 2; ++a) {
            for (std::size_t k = 0; k < kc; ++k) {
                if (k == s[0] || k == s[1])
                    continue;
                auto t = s;
                t[a] = k;
                std::sort(t.begin(), t.end());
                ++neighbours;
                if (seen.insert(t).second)
                    todo.push(t);
            }
        }
        CHECK(neighbours == 2 * (kc - 2));
    }
    CHECK(seen.size() == 66);
}

TEST_CASE("sampler leaves the exact posterior invariant")
{
    // Long single chains on K_c=6, L=2: empirical state frequencies against the
    // enumerated posterior, for the pure MH kernel and the mixed kernel.
    const auto obs = observe(6, 2, GainModel::rademacher, 0.7, 8);
    const GaussianLikelihood lik(obs.y, obs.x, obs.snr);
    const auto oracle = brute_force(obs.y, obs.x, obs.snr, 2, gain_alphabet(GainModel::rademacher, 2));

    for (double refresh : {0.0, 0.3}) {
        Engine rng(derive_seed(42, std::uint64_t(refresh * 10)));
        TapSampler sampler(lik, 2, gain_alphabet(GainModel::rademacher, 2), refresh);
        sampler.randomize(rng);
        std::map<std::pair<std::vector<std::size_t>, std::vector<double>>, double> freq;
        const std::size_t steps = 400000;
        for (std::size_t t = 0; t < 2000; ++t)
            sampler.step(rng);
        for (std::size_t t = 0; t < steps; ++t) {
            sampler.step(rng);
            const auto s = sampler.state();
            freq[{s.support, s.gains}] += 1.0 / double(steps);
            if (t % 5000 == 0)
                CHECK(sampler.log_likelihood() == doctest::Approx(lik.log_likelihood(s)).epsilon(1e-9));
        }
        double tv = 0.0;
        for (const auto& [key, w] : oracle.weights)
            tv += std::abs(w - (freq.count(key) ? freq[key] : 0.0));
        CHECK(0.5 * tv < 0.02);
    }
}

TEST_CASE("MCMC posterior mean tracks the exact one on a small problem")
{
    const auto obs = observe(12, 2, GainModel::rademacher, 1.0, 21);
    const auto exact = exact_posterior(obs.y, obs.x, 1.0, 2, GainModel::rademacher);
    McmcOptions opts;
    opts.samples = 20000;
    opts.seed = 5;
    const auto mc = mcmc_posterior(obs.y, obs.x, 1.0, 2, GainModel::rademacher, opts);
    CHECK(mc.mode == PosteriorMode::mcmc);
    CHECK(mc.samples == 4 * 20000);
    CHECK(mc.acceptance_rate > 0.0);
    CHECK(mc.acceptance_rate <= 1.0);
    CHECK(mc.ess > 100.0);
    double worst = 0.0;
    for (std::size_t m = 0; m < 12; ++m)
        worst = std::max(worst, std::abs(mc.hhat[m] - exact.hhat[m]));
    CHECK(worst < 0.03);
    CHECK(mc.converged == (mc.max_chain_gap <= opts.gap_tolerance));
}

TEST_CASE("mcmc options are validated")
{
    const auto obs = observe(12, 2, GainModel::rademacher, 1.0, 21);
    McmcOptions one;
    one.chains = 1;
    CHECK_THROWS_AS(mcmc_posterior(obs.y, obs.x, 1.0, 2, GainModel::rademacher, one), std::invalid_argument);
    const GaussianLikelihood lik(obs.y, obs.x, 1.0);
    CHECK_THROWS_AS(TapSampler(lik, 2, gain_alphabet(GainModel::rademacher, 2), 1.5), std::invalid_argument);
    TapSampler idle(lik, 2, gain_alphabet(GainModel::rademacher, 2));
    Engine rng(1);
    CHECK_THROWS_AS(idle.step(rng), std::logic_error);
}

TEST_CASE("mmse at snr = 0 is E[H^T R H] = K_c for binary signals")
{
    const auto x = gen_signal(SignalKind::iid_binary, 16, {}, 2);
    MmseOptions opts;
    opts.l = 2;
    opts.trials = 400;
    opts.seed = 3;
    const auto est = mmse_at(x, 0.0, opts);
    CHECK(std::abs(est.mean - 16.0) < 3.0 * est.std_error + 1e-9);
}

TEST_CASE("mmse decreases along the snr grid under common random numbers")
{
    const auto x = gen_signal(SignalKind::iid_binary, 16, {}, 2);
    MmseOptions opts;
    opts.l = 2;
    opts.trials = 300;
    opts.seed = 4;
    const std::vector<double> grid{0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
    const auto set = mmse_trials(x, grid, opts);
    CHECK(set.mode == PosteriorMode::exact);
    std::vector<double> mean(grid.size(), 0.0);
    for (const auto& row : set.errors)
        for (std::size_t p = 0; p < grid.size(); ++p)
            mean[p] += row[p] / double(opts.trials);
    for (std::size_t p = 1; p < grid.size(); ++p)
        CHECK(mean[p] < mean[p - 1]);
}

TEST_CASE("mmse trials are reproducible and independent of the worker count")
{
    const auto x = gen_signal(SignalKind::iid_binary, 32, {}, 2);
    MmseOptions opts;
    opts.l = 3;
    opts.trials = 6;
    opts.seed = 9;
    opts.choice = PosteriorChoice::mcmc;
    opts.mcmc.samples = 500;
    const std::vector<double> grid{0.0, 0.5};
    const auto a = mmse_trials(x, grid, opts);
    opts.workers = 3;
    const auto b = mmse_trials(x, grid, opts);
    CHECK(a.mode == PosteriorMode::mcmc);
    CHECK(a.errors == b.errors);
    CHECK(a.info_density.empty());
}

TEST_CASE("automatic posterior choice follows the enumeration budget")
{
    MmseOptions opts;
    opts.l = 2;
    CHECK(resolve_mode(16, 2, GainModel::rademacher, opts) == PosteriorMode::exact);
    opts.l = 16;
    CHECK(resolve_mode(256, 16, GainModel::rademacher, opts) == PosteriorMode::mcmc);
    opts.choice = PosteriorChoice::exact;
    CHECK(resolve_mode(256, 16, GainModel::rademacher, opts) == PosteriorMode::exact);
}
