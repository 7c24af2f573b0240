#include "spreadlab/cyclic.hpp"
#include "spreadlab/signals.hpp"

#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <random>

using namespace spreadlab;

namespace {

// Brute-force inner product of two explicitly shifted copies.
double explicit_inner(const SpreadSignal& x, std::int64_t i, std::int64_t j)
{
    const auto a = cyclic_shift(x, i);
    const auto b = cyclic_shift(x, j);
    double acc = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n)
        acc += a[n] * b[n];
    return acc;
}

} // namespace

TEST_CASE("iid_binary samples are +-1 with energy K_c")
{
    const auto x = gen_signal(SignalKind::iid_binary, 64, {}, 11);
    CHECK(x.kc() == 64);
    CHECK(x.energy() == doctest::Approx(64.0));
    for (double v : x.samples())
        CHECK(std::abs(v) == 1.0);
}

TEST_CASE("iid_gaussian energy concentrates at K_c")
{
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed)
        total += gen_signal(SignalKind::iid_gaussian, 128, {}, seed).energy();
    // mean 128, sd of the mean sqrt(2 * 128 / 200) = 1.13
    CHECK(total / 200.0 == doctest::Approx(128.0).epsilon(0.04));
}

TEST_CASE("ppm frames carry one pulse of height sqrt(F)")
{
    const auto x = gen_signal(SignalKind::ppm, 8, SignalParams{4}, 3);
    CHECK(x.energy() == doctest::Approx(8.0));
    int pulses = 0;
    for (std::size_t f = 0; f < 2; ++f) {
        int in_frame = 0;
        for (std::size_t n = 4 * f; n < 4 * f + 4; ++n) {
            if (x[n] != 0.0) {
                CHECK(x[n] == doctest::Approx(2.0));
                ++in_frame;
            }
        }
        CHECK(in_frame == 1);
        pulses += in_frame;
    }
    CHECK(pulses == 2);
    CHECK_THROWS_AS(gen_signal(SignalKind::ppm, 10, SignalParams{4}, 3), std::invalid_argument);
}

TEST_CASE("generation is a pure function of the seed")
{
    const auto a = gen_signal(SignalKind::iid_gaussian, 32, {}, 5);
    const auto b = gen_signal(SignalKind::iid_gaussian, 32, {}, 5);
    const auto c = gen_signal(SignalKind::iid_gaussian, 32, {}, 6);
    CHECK(std::equal(a.samples().begin(), a.samples().end(), b.samples().begin()));
    CHECK_FALSE(std::equal(a.samples().begin(), a.samples().end(), c.samples().begin()));
}

TEST_CASE("invalid signal requests are rejected")
{
    CHECK_THROWS_AS(gen_signal(SignalKind::iid_binary, 1, {}, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_signal(SignalKind::custom, 8, {}, 0), std::invalid_argument);
    CHECK_THROWS_AS(SpreadSignal::from_samples({1.0}), std::invalid_argument);
    CHECK_THROWS_AS(signal_kind_from_string("chirp"), std::invalid_argument);
    CHECK(signal_kind_from_string("ppm") == SignalKind::ppm);
    CHECK(to_string(SignalKind::iid_gaussian) == "iid_gaussian");
}

TEST_CASE("cyclic_shift moves samples to the right")
{
    const auto x = SpreadSignal::from_samples({1, 2, 3, 4});
    CHECK(cyclic_shift(x, 1) == std::vector<double>{4, 1, 2, 3});
    CHECK(cyclic_shift(x, -1) == std::vector<double>{2, 3, 4, 1});
    CHECK(cyclic_shift(x, 4) == std::vector<double>{1, 2, 3, 4});
    CHECK(cyclic_shift(x, 9) == cyclic_shift(x, 1));
}

TEST_CASE("shift composition: X^{a+b} = (X^a)^b")
{
    const auto x = gen_signal(SignalKind::iid_gaussian, 37, {}, 9);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::int64_t> pick(-100, 100);
    for (int rep = 0; rep < 50; ++rep) {
        const auto a = pick(rng);
        const auto b = pick(rng);
        const auto once = cyclic_shift(x, a + b);
        const auto twice = cyclic_shift(SpreadSignal::from_samples(cyclic_shift(x, a)), b);
        CHECK(once == twice);
    }
}

TEST_CASE("autocorrelation: known sequences")
{
    const auto alt = SpreadSignal::from_samples({1, -1, 1, -1});
    CHECK(empirical_autocorr(alt) == std::vector<double>{4, -4, 4, -4});

    const auto delta = SpreadSignal::from_samples({0, 3, 0, 0, 0});
    const auto r = empirical_autocorr(delta);
    CHECK(r[0] == doctest::Approx(9.0));
    for (std::size_t l = 1; l < 5; ++l)
        CHECK(r[l] == doctest::Approx(0.0));
}

TEST_CASE("autocorrelation: transform and direct routes agree, r is even, r[0] is the energy")
{
    for (std::size_t kc : {16u, 513u, 1024u}) {
        const auto x = gen_signal(SignalKind::iid_gaussian, kc, {}, kc);
        const auto d = empirical_autocorr_direct(x);
        const auto f = empirical_autocorr_fft(x);
        REQUIRE(d.size() == kc);
        REQUIRE(f.size() == kc);
        for (std::size_t l = 0; l < kc; ++l) {
            CHECK(f[l] == doctest::Approx(d[l]).epsilon(1e-9).scale(std::sqrt(double(kc))));
            CHECK(d[l] == doctest::Approx(d[(kc - l) % kc]).epsilon(1e-12));
        }
        CHECK(d[0] == doctest::Approx(x.energy()));
    }
}

TEST_CASE("circulant reduction: <X^i, X^j> = r[(j - i) mod K_c] for random i, j")
{
    for (auto kind : {SignalKind::iid_binary, SignalKind::iid_gaussian, SignalKind::ppm}) {
        const auto x = gen_signal(kind, 48, SignalParams{4}, 21);
        const auto r = empirical_autocorr(x);
        std::mt19937_64 rng(2);
        std::uniform_int_distribution<std::size_t> pick(0, 47);
        for (int rep = 0; rep < 200; ++rep) {
            const auto i = pick(rng);
            const auto j = pick(rng);
            CHECK(shifted_inner(r, i, j)
                  == doctest::Approx(explicit_inner(x, std::int64_t(i), std::int64_t(j))).epsilon(1e-12));
        }
    }
}

TEST_CASE("spreading check")
{
    const auto ones = SpreadSignal::from_samples(std::vector<double>(16, 1.0));
    const auto bad = check_spreading(ones, 1.0);
    CHECK_FALSE(bad.ok);
    CHECK(bad.max_offpeak == doctest::Approx(16.0));
    CHECK(bad.bound == doctest::Approx(4.0));
    CHECK(bad.offending_lags.size() == 15);

    const auto x = gen_signal(SignalKind::iid_binary, 1024, {}, 4);
    const auto good = check_spreading(x, kDefaultB4);
    CHECK(good.ok);
    CHECK(good.offending_lags.empty());
    CHECK_THROWS_AS(check_spreading(x, 0.0), std::invalid_argument);
}

TEST_CASE("off-peak autocorrelation of iid_binary grows like sqrt(K_c)")
{
    // max |r[l]| / sqrt(K_c) stays O(sqrt(log K_c)); a fixed B4 covers the range.
    for (std::size_t kc = 64; kc <= 4096; kc *= 4) {
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed)
            worst = std::max(worst, check_spreading(gen_signal(SignalKind::iid_binary, kc, {}, seed), kDefaultB4)
                                        .max_offpeak);
        CHECK(worst / std::sqrt(double(kc)) < kDefaultB4);
        CHECK(worst / std::sqrt(double(kc)) > 1.0);
    }
}
