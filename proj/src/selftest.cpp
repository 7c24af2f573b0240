#include "spreadlab/selftest.hpp"

#include "spreadlab/channel.hpp"
#include "spreadlab/cyclic.hpp"
#include "spreadlab/link.hpp"
#include "spreadlab/posterior.hpp"
#include "spreadlab/prooflab.hpp"
#include "spreadlab/rate.hpp"
#include "spreadlab/rng.hpp"
#include "spreadlab/signals.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace spreadlab {

namespace {

bool close(double a, double b, double tol)
{
    return std::abs(a - b) <= tol;
}

bool all_close(std::span<const double> a, std::span<const double> b, double tol)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t n = 0; n < a.size(); ++n)
        if (!close(a[n], b[n], tol))
            return false;
    return true;
}

std::string fmt(double v)
{
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

template <typename Fn>
void check(std::vector<CheckResult>& out, std::string name, Fn&& fn)
{
    CheckResult r;
    r.name = std::move(name);
    try {
        r.passed = fn(r.detail);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("threw: ") + e.what();
    }
    out.push_back(std::move(r));
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

std::vector<CheckResult> run_selftest()
{
    std::vector<CheckResult> out;

    check(out, "signals: iid_binary energy equals K_c", [](std::string&) {
        return gen_signal(SignalKind::iid_binary, 8, {}, 3).energy() == 8.0;
    });
    check(out, "signals: ppm K_c=8 F=4 has two pulses of height 2", [](std::string&) {
        const auto x = gen_signal(SignalKind::ppm, 8, {4}, 3);
        return std::count(x.samples().begin(), x.samples().end(), 2.0) == 2 && x.energy() == 8.0;
    });
    check(out, "signals: cyclic_shift((1,2,3,4), 1) = (4,1,2,3)", [](std::string&) {
        const auto x = SpreadSignal::from_samples({1, 2, 3, 4});
        return cyclic_shift(x, 1) == std::vector<double>{4, 1, 2, 3} && cyclic_shift(x, 4) == std::vector<double>{1, 2, 3, 4};
    });
    check(out, "signals: autocorr of (1,-1,1,-1) is (4,-4,4,-4)", [](std::string&) {
        return empirical_autocorr(SpreadSignal::from_samples({1, -1, 1, -1})) == std::vector<double>{4, -4, 4, -4};
    });
    check(out, "signals: all-ones K_c=16 fails spreading at B4=1", [](std::string&) {
        const auto c = check_spreading(SpreadSignal::from_samples(std::vector<double>(16, 1.0)), 1.0);
        return !c.ok && c.offending_lags.size() == 15;
    });
    check(out, "signals: FFT and direct autocorrelation agree", [](std::string& d) {
        const auto x = gen_signal(SignalKind::iid_gaussian, 600, {}, 5);
        const auto a = empirical_autocorr_direct(x);
        const auto b = empirical_autocorr_fft(x);
        double worst = 0.0;
        for (std::size_t n = 0; n < a.size(); ++n)
            worst = std::max(worst, std::abs(a[n] - b[n]));
        d = "max diff " + fmt(worst);
        return worst <= 1e-6;
    });
    check(out, "channel: rademacher K_c=4 L=2 has unit energy", [](std::string&) {
        return close(sample_channel(4, 2, GainModel::rademacher, 9).energy(), 1.0, 1e-15);
    });
    check(out, "channel: entropy(K_c=2, L=1) = 2 ln 2", [](std::string&) {
        return close(channel_entropy_nats(2, 1, GainModel::rademacher), 2.0 * std::log(2.0), 1e-12);
    });
    check(out, "channel: entropy(K_c=16, L=2) = ln 120 + 2 ln 2", [](std::string&) {
        return close(channel_entropy_nats(16, 2, GainModel::rademacher), std::log(120.0) + 2.0 * std::log(2.0), 1e-9);
    });
    check(out, "channel: bounded_uniform second moment is 1/L", [](std::string& d) {
        const double b1 = BoundedUniformLaw::b1;
        const double b2 = BoundedUniformLaw::b2();
        const double m2 = (b1 * b1 + b1 * b2 + b2 * b2) / 3.0;
        d = "b2 = " + fmt(b2);
        return close(m2, 1.0, 1e-12);
    });
    check(out, "link: x e_0 = X and x e_k = X^k", [](std::string&) {
        const auto x = gen_signal(SignalKind::iid_gaussian, 16, {}, 2);
        std::vector<double> e(16, 0.0);
        e[0] = 1.0;
        const bool first = all_close(circulant_apply(x, e), x.samples(), 1e-12);
        e[0] = 0.0;
        e[5] = 1.0;
        return first && all_close(circulant_apply(x, e), cyclic_shift(x, 5), 1e-12);
    });
    check(out, "link: snr = 0 gives Y = Z", [](std::string&) {
        const auto x = gen_signal(SignalKind::iid_binary, 32, {}, 1);
        const auto obs = transmit(x, sample_channel(32, 3, GainModel::rademacher, 2), 0.0, 3);
        return obs.y == obs.z;
    });
    check(out, "link: noiseless single tap at snr 4 gives Y = 2 X", [](std::string&) {
        const auto x = gen_signal(SignalKind::iid_binary, 16, {}, 1);
        const auto h = make_channel(16, {0}, {1.0});
        const auto obs = transmit_with_noise(x, h, 4.0, std::vector<double>(16, 0.0));
        std::vector<double> twice(x.samples().begin(), x.samples().end());
        for (auto& v : twice)
            v *= 2.0;
        return all_close(obs.y, twice, 1e-12);
    });
    check(out, "posterior: snr = 0 gives a zero posterior mean", [](std::string& d) {
        const auto x = gen_signal(SignalKind::iid_binary, 12, {}, 4);
        const auto y = draw_noise(12, 5);
        const auto post = exact_posterior(y, x, 0.0, 2, GainModel::rademacher);
        double worst = 0.0;
        for (double v : post.hhat)
            worst = std::max(worst, std::abs(v));
        d = "max |hhat| " + fmt(worst);
        return worst <= 1e-12;
    });
    check(out, "rate: constant curve K_c integrates to K_c s / 2", [](std::string&) {
        MmseCurve c{{0.0, 0.5, 1.0}, {16.0, 16.0, 16.0}, {0.0, 0.0, 0.0}};
        return close(mutual_info_immse(c, 1.0).nats, 8.0, 1e-12) && close(mutual_info_immse(c, 0.75).nats, 6.0, 1e-12);
    });
    check(out, "rate: threshold(1024, 32) = ln 32 / 32", [](std::string&) {
        return close(threshold_snr(1024, 32), std::log(32.0) / 32.0, 1e-15);
    });
    check(out, "rate: scalar binary mmse(0) = 1", [](std::string&) {
        return close(scalar_binary_mmse(0.0), 1.0, 1e-9);
    });
    check(out, "prooflab: snr = 0 leaves only the first line", [](std::string&) {
        const auto x = gen_signal(SignalKind::iid_binary, 16, {}, 1);
        const auto h = sample_channel(16, 2, GainModel::rademacher, 2);
        ProofInstance inst{x, h, draw_noise(16, 3), 0.0};
        const Hypothesis hyp{h.support, h.gains};
        const auto d = decompose_exponent(inst, hyp, h.support[0], h.support[0]);
        for (std::size_t n = 1; n < 8; ++n)
            if (d.terms[n] != 0.0)
                return false;
        return d.total == d.terms[0];
    });
    check(out, "prooflab: order-statistic mean is linear in sigma", [](std::string&) {
        return close(order_stat_mean(1000, 2.0), 2.0 * order_stat_mean(1000, 1.0), 1e-12)
               && order_stat_var(1000000, 1.0) < order_stat_var(1000, 1.0);
    });
    check(out, "prooflab: K_c=4 L=1 partition is a single group", [](std::string&) {
        const auto p = build_swap_partition(4, 1, 0, 1);
        return p.groups.size() == 1 && p.groups[0].members.size() == 4 && verify_partition(p).ok();
    });
    check(out, "prooflab: J at snr = 0 is H_i / |K(H)|", [](std::string& d) {
        const auto x = gen_signal(SignalKind::iid_binary, 64, {}, 1);
        const auto h = sample_channel(64, 4, GainModel::rademacher, 2);
        ProofInstance inst{x, h, draw_noise(64, 3), 0.0};
        const Hypothesis hyp{h.support, h.gains};
        const auto ks = sample_k_set(64, hyp, h.support[0], 4);
        const auto j = j_ratio(inst, hyp, h.support[0], ks);
        const double expected = h.gains[0] / static_cast<double>(ks.size());
        d = "J = " + fmt(j.j) + ", expected " + fmt(expected);
        return close(j.j, expected, 1e-12);
    });
    return out;
}

std::vector<CheckResult> run_prooflab_battery(const ProoflabParams& p)
{
    std::vector<CheckResult> out;
    if (p.l < 1 || p.l >= p.kc || p.trials < 1 || !(p.rho > 0.0))
        throw std::invalid_argument("prooflab: need 1 <= L < K_c, trials >= 1 and rho > 0");

    const double snr = p.rho * threshold_snr(p.kc, p.l);
    const double b1 = gain_floor(GainModel::rademacher);
    const double a_bound = b1 * p.b3 * snr * std::sqrt(static_cast<double>(p.kc) / static_cast<double>(p.l));

    double worst_identity = 0.0;
    std::size_t a_ok = 0;
    std::size_t a_checked = 0;
    std::vector<double> log_j;
    std::vector<double> kstar_ratio;

    for (std::size_t t = 0; t < p.trials; ++t) {
        const auto x = gen_signal(SignalKind::iid_binary, p.kc, {}, derive_seed(p.seed, t, 0));
        const auto h = sample_channel(p.kc, p.l, GainModel::rademacher, derive_seed(p.seed, t, 1));
        const ProofInstance inst{x, h, draw_noise(p.kc, derive_seed(p.seed, t, 2)), snr};
        const Hypothesis anchor{h.support, h.gains};
        const auto r = empirical_autocorr(x);
        const std::size_t i = h.support[0];

        // Decomposition identity against the direct quadratic form.
        const auto ks = sample_k_set(p.kc, anchor, i, derive_seed(p.seed, t, 3));
        const std::size_t k = ks.size() > 1 ? ks[1] : i;
        const auto dec = decompose_exponent(inst, anchor, i, k);
        const auto moved = swap_tap(anchor, i, k);
        const auto y = inst.received();
        auto xh = circulant_apply_direct(x, moved.dense(p.kc));
        double direct = 0.0;
        for (std::size_t n = 0; n < p.kc; ++n) {
            const double e = y[n] - std::sqrt(snr) * xh[n];
            direct += e * e;
        }
        direct *= -0.5;
        worst_identity = std::max(worst_identity, std::abs(dec.total - direct) / std::max(1.0, std::abs(direct)));

        // a-term bound on support indices that satisfy the cross-correlation condition.
        const auto passing = check_condition7(r, h, p.b3);
        bool trial_ok = true;
        bool any = false;
        for (std::size_t idx : h.support) {
            if (!std::binary_search(passing.begin(), passing.end(), idx))
                continue;
            any = true;
            if (std::abs(ab_c_terms(inst, r, anchor, idx, idx).a) > a_bound)
                trial_ok = false;
        }
        if (any) {
            ++a_checked;
            if (trial_ok)
                ++a_ok;
        }

        const auto jr = j_ratio(inst, anchor, i, ks);
        log_j.push_back(jr.log_abs_j);
        if (ks.size() >= 2) {
            const double sigma = std::abs(h.gains[0]) * std::sqrt(snr * x.energy());
            kstar_ratio.push_back(jr.c_kstar / order_stat_mean(ks.size(), sigma));
        }
    }

    check(out, "decomposition: eight lines sum to the quadratic form", [&](std::string& d) {
        d = "max relative error " + fmt(worst_identity);
        return worst_identity <= 1e-9;
    });
    check(out, "a-term: |a_i| <= B1 B3 snr sqrt(K_c/L) on admissible taps", [&](std::string& d) {
        const double frac = a_checked ? static_cast<double>(a_ok) / static_cast<double>(a_checked) : 1.0;
        d = fmt(frac * 100.0) + "% of " + std::to_string(a_checked) + " trials";
        return frac >= 0.99;
    });
    check(out, "c_k*: mean ratio to the order-statistic mean within 15%", [&](std::string& d) {
        if (kstar_ratio.empty()) {
            d = "no groups with M >= 2";
            return true;
        }
        double mean = 0.0;
        for (double v : kstar_ratio)
            mean += v;
        mean /= static_cast<double>(kstar_ratio.size());
        d = "mean ratio " + fmt(mean);
        return std::abs(mean - 1.0) <= 0.15;
    });
    check(out, "J: median ln|J| is negative", [&](std::string& d) {
        const double m = median(log_j);
        d = "median ln|J| = " + fmt(m);
        return m < 0.0;
    });
    if (std::exp(log_binomial(p.kc, p.l)) <= kPartitionBudget) {
        check(out, "partition: disjoint cover with balanced groups", [&](std::string& d) {
            const auto part = build_swap_partition(p.kc, p.l, 0, p.seed);
            const auto chk = verify_partition(part);
            d = std::to_string(part.groups.size()) + " groups, others in [" + std::to_string(chk.min_others) + ", "
                + std::to_string(chk.max_others) + "], nominal " + fmt(part.nominal_size());
            return chk.ok();
        });
    }
    return out;
}

bool print_checks(std::ostream& out, const std::vector<CheckResult>& checks)
{
    bool all = true;
    for (const auto& c : checks) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.detail.empty())
            out << "  (" << c.detail << ")";
        out << '\n';
        all = all && c.passed;
    }
    return all;
}

} // namespace spreadlab
