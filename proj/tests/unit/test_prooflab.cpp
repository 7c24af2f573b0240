#include "spreadlab/cyclic.hpp"
#include "spreadlab/link.hpp"
#include "spreadlab/prooflab.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <numbers>
#include <random>

using namespace spreadlab;

namespace {

ProofInstance make_instance(std::size_t kc, std::size_t l, double snr, std::uint64_t seed)
{
    ProofInstance inst{gen_signal(SignalKind::iid_binary, kc, {}, derive_seed(seed, 0)),
                       sample_channel(kc, l, GainModel::rademacher, derive_seed(seed, 1)),
                       draw_noise(kc, derive_seed(seed, 2)), snr};
    return inst;
}

Hypothesis random_hypothesis(std::size_t kc, std::size_t l, std::uint64_t seed)
{
    const auto h = sample_channel(kc, l, GainModel::bounded_uniform, seed);
    return Hypothesis{h.support, h.gains};
}

// -1/2 |Y - sqrt(s) x H^{i->k}|^2 built from explicit columns.
double direct_exponent(const ProofInstance& inst, const Hypothesis& h, std::size_t i, std::size_t k)
{
    const auto moved = swap_tap(h, i, k);
    auto res = inst.received();
    for (std::size_t a = 0; a < moved.support.size(); ++a) {
        const auto col = circulant_column(inst.x, moved.support[a]);
        for (std::size_t n = 0; n < res.size(); ++n)
            res[n] -= std::sqrt(inst.snr) * moved.gains[a] * col[n];
    }
    return -0.5 * norm2(res);
}

std::size_t empty_position(const Hypothesis& h, std::size_t kc, std::mt19937_64& rng)
{
    std::uniform_int_distribution<std::size_t> pick(0, kc - 1);
    std::size_t k = pick(rng);
    while (std::find(h.support.begin(), h.support.end(), k) != h.support.end())
        k = pick(rng);
    return k;
}

} // namespace

TEST_CASE("swap_tap relocates one tap and keeps the support sorted")
{
    const Hypothesis h{{1, 4, 7}, {0.1, -0.2, 0.3}};
    const auto s = swap_tap(h, 4, 9);
    CHECK(s.support == std::vector<std::size_t>{1, 7, 9});
    CHECK(s.gains == std::vector<double>{0.1, 0.3, -0.2});
    CHECK(swap_tap(h, 4, 4).support == h.support);
    CHECK_THROWS_AS(swap_tap(h, 5, 9), std::invalid_argument);
    CHECK_THROWS_AS(require_swap_pair(h, 10, 4, 7), std::invalid_argument);
    CHECK_THROWS_AS(require_swap_pair(h, 10, 4, 10), std::invalid_argument);
    CHECK_NOTHROW(require_swap_pair(h, 10, 4, 0));
}

TEST_CASE("decomposition lines sum to the direct exponent")
{
    std::mt19937_64 rng(3);
    for (std::uint64_t t = 0; t < 200; ++t) {
        const auto inst = make_instance(32, 3, 0.05 + 0.01 * double(t), t);
        const auto h = random_hypothesis(32, 3, 1000 + t);
        const std::size_t i = h.support[t % 3];
        const std::size_t k = empty_position(h, 32, rng);
        const auto d = decompose_exponent(inst, h, i, k);
        double sum = 0.0;
        for (double v : d.terms)
            sum += v;
        CHECK(d.total == doctest::Approx(sum).epsilon(1e-14));
        CHECK(d.total == doctest::Approx(direct_exponent(inst, h, i, k)).epsilon(1e-10));
    }
}

TEST_CASE("at snr = 0 only the |Y|^2 line survives")
{
    const auto inst = make_instance(16, 2, 0.0, 1);
    const auto h = random_hypothesis(16, 2, 2);
    std::mt19937_64 rng(1);
    const auto d = decompose_exponent(inst, h, h.support[0], empty_position(h, 16, rng));
    CHECK(d.terms[0] == doctest::Approx(-0.5 * norm2(inst.z)));
    for (std::size_t n = 1; n < 8; ++n)
        CHECK(d.terms[n] == 0.0);
}

TEST_CASE("a, b, c from the autocorrelation match the vector-form lines")
{
    std::mt19937_64 rng(5);
    for (std::uint64_t t = 0; t < 100; ++t) {
        const auto inst = make_instance(40, 4, 0.3, 50 + t);
        const auto h = random_hypothesis(40, 4, 500 + t);
        const std::size_t i = h.support[t % 4];
        const std::size_t k = empty_position(h, 40, rng);
        const auto d = decompose_exponent(inst, h, i, k);
        const auto abc = ab_c_terms(inst, h, i, k);
        CHECK(abc.a == doctest::Approx(d.terms[3]).epsilon(1e-10).scale(1.0));
        CHECK(abc.b == doctest::Approx(d.terms[5]).epsilon(1e-10).scale(1.0));
        CHECK(abc.c == doctest::Approx(d.terms[7]).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("c_k has variance snr H_i^2 |X|^2")
{
    const auto x = gen_signal(SignalKind::iid_binary, 64, {}, 7);
    const auto truth = sample_channel(64, 4, GainModel::rademacher, 8);
    const Hypothesis h{truth.support, truth.gains};
    const double s = 0.4;
    const std::size_t i = h.support[0];
    const std::size_t k = (i + 1) % 64 == h.support[1] ? (i + 5) % 64 : (i + 1) % 64;
    double m2 = 0.0;
    const int n = 20000;
    for (int t = 0; t < n; ++t) {
        ProofInstance inst{x, truth, draw_noise(64, std::uint64_t(t)), s};
        const double c = ab_c_terms(inst, h, i, k).c;
        m2 += c * c;
    }
    const double expected = s * h.gains[0] * h.gains[0] * x.energy();
    CHECK(m2 / n == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("order-statistic formulas")
{
    // Linear in sigma, increasing in M, variance shrinking like 1/ln M.
    CHECK(order_stat_mean(1000, 2.0) == doctest::Approx(2.0 * order_stat_mean(1000, 1.0)));
    CHECK(order_stat_mean(10000, 1.0) > order_stat_mean(100, 1.0));
    CHECK(order_stat_var(10000, 1.0) < order_stat_var(100, 1.0));
    CHECK(order_stat_var(100, 3.0) == doctest::Approx(9.0 * order_stat_var(100, 1.0)));
    // the two centring constants differ by ln 2 / (2 sqrt(2 ln M))
    const double root = std::sqrt(2.0 * std::log(500.0));
    CHECK(order_stat_mean_ln2pi(500, 1.0) - order_stat_mean(500, 1.0)
          == doctest::Approx(std::log(2.0) / (2.0 * root)));
    CHECK_THROWS_AS(order_stat_mean(1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(order_stat_var(0, 1.0), std::invalid_argument);
}

TEST_CASE("order-statistic mean against simulated maxima")
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    const std::size_t m = 2000;
    const int reps = 3000;
    double sum = 0.0;
    double sum2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        double mx = -1e300;
        for (std::size_t n = 0; n < m; ++n)
            mx = std::max(mx, g(rng));
        sum += mx;
        sum2 += mx * mx;
    }
    const double mean = sum / reps;
    const double var = sum2 / reps - mean * mean;
    CHECK(std::abs(mean - order_stat_mean(m, 1.0)) < 0.05);
    CHECK(var == doctest::Approx(order_stat_var(m, 1.0)).epsilon(0.25));
}

TEST_CASE("swap partition at K_c=12, L=2 is a verified disjoint cover for every pivot")
{
    for (std::size_t i = 0; i < 12; ++i) {
        const auto p = build_swap_partition(12, 2, i, 100 + i);
        CHECK(p.groups.size() == 11); // supports through i: C(11, 1)
        const auto chk = verify_partition(p);
        CHECK(chk.ok());
        CHECK(chk.supports_seen == 66);
        CHECK(chk.mean_others == doctest::Approx(55.0 / 11.0));
    }
}

TEST_CASE("swap partition on larger cases")
{
    for (auto [kc, l] : {std::pair<std::size_t, std::size_t>{10, 3}, {16, 4}, {20, 2}}) {
        const auto p = build_swap_partition(kc, l, 1, 7);
        const auto chk = verify_partition(p);
        CHECK(chk.disjoint);
        CHECK(chk.covering);
        CHECK(chk.anchors_hold_pivot);
        CHECK(chk.members_differ_in_two);
        CHECK(chk.sizes_balanced);
        CHECK(double(chk.supports_seen) == doctest::Approx(std::exp(log_binomial(kc, l))));
    }
    CHECK_THROWS_AS(build_swap_partition(64, 8, 0, 1), std::length_error);
    CHECK_THROWS_AS(build_swap_partition(12, 2, 12, 1), std::invalid_argument);
}

TEST_CASE("partition verifier catches tampering")
{
    auto p = build_swap_partition(12, 2, 0, 1);
    auto dup = p;
    dup.groups[1].members.push_back(dup.groups[0].members.back());
    dup.groups[1].k_set.push_back(dup.groups[0].k_set.back());
    const auto c1 = verify_partition(dup);
    CHECK_FALSE(c1.disjoint);
    CHECK_FALSE(c1.members_differ_in_two);

    auto lost = p;
    lost.groups[2].members.pop_back();
    lost.groups[2].k_set.pop_back();
    CHECK_FALSE(verify_partition(lost).covering);
}

TEST_CASE("K(H) sampling always holds i and only empty positions")
{
    const Hypothesis h{{2, 5, 9, 11}, {0.5, -0.5, 0.5, 0.5}};
    double total = 0.0;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        const auto ks = sample_k_set(64, h, 5, s);
        REQUIRE(!ks.empty());
        CHECK(ks[0] == 5);
        for (std::size_t n = 1; n < ks.size(); ++n)
            CHECK(std::find(h.support.begin(), h.support.end(), ks[n]) == h.support.end());
        total += double(ks.size() - 1);
    }
    // Bernoulli(1/L) over K_c - L empty positions
    CHECK(total / 2000.0 == doctest::Approx(60.0 / 4.0).epsilon(0.03));
}

TEST_CASE("J ratio against the direct exponents")
{
    const auto inst = make_instance(48, 4, 0.2, 9);
    const Hypothesis h{inst.truth.support, inst.truth.gains};
    const std::size_t i = h.support[1];
    const auto ks = sample_k_set(48, h, i, 4);
    const auto j = j_ratio(inst, h, i, ks);

    std::vector<double> e;
    for (std::size_t k : ks)
        e.push_back(direct_exponent(inst, h, i, k));
    double mx = *std::max_element(e.begin(), e.end());
    double acc = 0.0;
    for (double v : e)
        acc += std::exp(v - mx);
    const double log_den = mx + std::log(acc);
    const double log_num = std::log(std::abs(h.gains[1])) + direct_exponent(inst, h, i, i);
    CHECK(j.log_denominator == doctest::Approx(log_den).epsilon(1e-10));
    CHECK(j.log_nominator == doctest::Approx(log_num).epsilon(1e-10));
    CHECK(j.log_abs_j == doctest::Approx(log_num - log_den).epsilon(1e-9).scale(1.0));
    CHECK(j.log_abs_j <= std::log(std::abs(h.gains[1])) + 1e-12);
    CHECK(j.group_size == ks.size());
    CHECK(std::signbit(j.j) == std::signbit(h.gains[1]));

    // c_kstar is the largest c_k over the set
    double best = -1e300;
    for (std::size_t k : ks)
        best = std::max(best, ab_c_terms(inst, h, i, k).c);
    CHECK(j.c_kstar == doctest::Approx(best).epsilon(1e-10));

    CHECK_THROWS_AS(j_ratio(inst, h, i, std::vector<std::size_t>{}), std::invalid_argument);
}

TEST_CASE("J at snr = 0 is H_i / |K(H)|")
{
    const auto inst = make_instance(32, 2, 0.0, 3);
    const Hypothesis h{inst.truth.support, inst.truth.gains};
    const auto ks = sample_k_set(32, h, h.support[0], 8);
    const auto j = j_ratio(inst, h, h.support[0], ks);
    CHECK(j.j == doctest::Approx(h.gains[0] / double(ks.size())));
}

TEST_CASE("orthogonal shifts, k = i: a_i = 0 and b_i = snr H_i H~_i |X|^2")
{
    std::vector<double> pulse(16, 0.0);
    pulse[0] = 4.0; // r[l] = 0 for every l != 0
    const auto x = SpreadSignal::from_samples(pulse);
    const auto truth = make_channel(16, {2, 7, 11}, {0.5, -0.5, 0.5});
    const ProofInstance inst{x, truth, draw_noise(16, 1), 0.6};
    const Hypothesis h{{2, 5, 11}, {-0.5, 0.5, 0.5}};
    for (std::size_t i : {2u, 11u}) {
        const auto abc = ab_c_terms(inst, h, i, i);
        const double hi = i == 2 ? -0.5 : 0.5;
        const double ht = 0.5;
        CHECK(abc.a == doctest::Approx(0.0));
        CHECK(abc.b == doctest::Approx(0.6 * hi * ht * 16.0));
    }
}
