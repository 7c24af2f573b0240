#include "spreadlab/prooflab.hpp"

#include "spreadlab/cyclic.hpp"
#include "spreadlab/link.hpp"
#include "spreadlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spreadlab {

std::vector<double> ProofInstance::received() const
{
    return transmit_with_noise(x, truth, snr, z).y;
}

namespace {

std::size_t tap_of(const Hypothesis& h, std::size_t i)
{
    const auto it = std::find(h.support.begin(), h.support.end(), i);
    return it == h.support.end() ? h.support.size() : static_cast<std::size_t>(it - h.support.begin());
}

bool contains(const std::vector<std::size_t>& v, std::size_t x)
{
    return std::find(v.begin(), v.end(), x) != v.end();
}

} // namespace

void require_swap_pair(const Hypothesis& h, std::size_t kc, std::size_t i, std::size_t k)
{
    if (h.support.size() != h.gains.size() || h.support.empty())
        throw std::invalid_argument("swap: malformed hypothesis");
    if (i >= kc || k >= kc)
        throw std::invalid_argument("swap: index out of range");
    if (tap_of(h, i) == h.support.size())
        throw std::invalid_argument("swap: hypothesis has no tap at i=" + std::to_string(i));
    if (k != i && contains(h.support, k))
        throw std::invalid_argument("swap: position k=" + std::to_string(k) + " is already occupied");
}

Hypothesis swap_tap(const Hypothesis& h, std::size_t i, std::size_t k)
{
    const std::size_t a = tap_of(h, i);
    if (a == h.support.size())
        throw std::invalid_argument("swap: hypothesis has no tap at i=" + std::to_string(i));
    Hypothesis out = h;
    out.support[a] = k;
    // keep sorted order
    std::vector<std::size_t> order(out.support.size());
    for (std::size_t n = 0; n < order.size(); ++n)
        order[n] = n;
    std::sort(order.begin(), order.end(), [&](auto u, auto v) { return out.support[u] < out.support[v]; });
    Hypothesis sorted;
    for (auto n : order) {
        sorted.support.push_back(out.support[n]);
        sorted.gains.push_back(out.gains[n]);
    }
    return sorted;
}

ExponentDecomposition decompose_exponent(const ProofInstance& inst, const Hypothesis& h, std::size_t i,
                                         std::size_t k)
{
    const std::size_t kc = inst.x.kc();
    require_swap_pair(h, kc, i, k);
    const double hi = h.gains[tap_of(h, i)];
    const double a = std::sqrt(inst.snr);

    auto v = h.dense(kc);
    v[i] = 0.0;
    std::vector<double> unit(kc, 0.0);
    unit[k] = hi;

    const auto y = inst.received();
    auto xv = circulant_apply(inst.x, v);
    auto xi = circulant_apply(inst.x, unit);
    auto xt = circulant_apply(inst.x, inst.truth.dense());
    for (auto* vec : {&xv, &xi, &xt})
        for (auto& e : *vec)
            e *= a;

    ExponentDecomposition out;
    auto& t = out.terms;
    t[0] = -0.5 * norm2(y);
    t[1] = -0.5 * norm2(xv);
    t[2] = -0.5 * norm2(xi);
    t[3] = -dot(xv, xi);
    t[4] = dot(xt, xv);
    t[5] = dot(xt, xi);
    t[6] = dot(inst.z, xv);
    t[7] = dot(inst.z, xi);
    for (double term : t)
        out.total += term;
    return out;
}

AbcTerms ab_c_terms(const ProofInstance& inst, std::span<const double> autocorr, const Hypothesis& h,
                    std::size_t i, std::size_t k)
{
    const std::size_t kc = inst.x.kc();
    require_swap_pair(h, kc, i, k);
    if (autocorr.size() != kc || inst.z.size() != kc)
        throw std::invalid_argument("ab_c_terms: length mismatch");
    const double hi = h.gains[tap_of(h, i)];
    const double s = inst.snr;

    AbcTerms out;
    const auto moved = swap_tap(h, i, k);
    double cross = 0.0;
    for (std::size_t b = 0; b < moved.support.size(); ++b)
        if (moved.support[b] != k)
            cross += moved.gains[b] * shifted_inner(autocorr, moved.support[b], k);
    out.a = -s * hi * cross;

    double truth = 0.0;
    for (std::size_t b = 0; b < inst.truth.support.size(); ++b)
        truth += inst.truth.gains[b] * shifted_inner(autocorr, inst.truth.support[b], k);
    out.b = s * hi * truth;

    double zx = 0.0;
    for (std::size_t n = 0; n < kc; ++n)
        zx += inst.z[n] * inst.x[(n + kc - k) % kc];
    out.c = std::sqrt(s) * hi * zx;
    return out;
}

AbcTerms ab_c_terms(const ProofInstance& inst, const Hypothesis& h, std::size_t i, std::size_t k)
{
    const auto r = empirical_autocorr(inst.x);
    return ab_c_terms(inst, r, h, i, k);
}

double order_stat_mean(std::size_t m, double sigma)
{
    if (m < 2)
        throw std::invalid_argument("order_stat_mean: M must be at least 2");
    const double lm = std::log(static_cast<double>(m));
    const double root = std::sqrt(2.0 * lm);
    return sigma * (root - (std::log(lm) + std::log(4.0 * std::numbers::pi) - 2.0 * kEulerGamma) / (2.0 * root));
}

double order_stat_mean_ln2pi(std::size_t m, double sigma)
{
    if (m < 2)
        throw std::invalid_argument("order_stat_mean: M must be at least 2");
    const double lm = std::log(static_cast<double>(m));
    const double root = std::sqrt(2.0 * lm);
    return sigma * (root - (std::log(lm) + std::log(2.0 * std::numbers::pi) - 2.0 * kEulerGamma) / (2.0 * root));
}

double order_stat_var(std::size_t m, double sigma)
{
    if (m < 2)
        throw std::invalid_argument("order_stat_var: M must be at least 2");
    return std::numbers::pi * std::numbers::pi * sigma * sigma / (12.0 * std::log(static_cast<double>(m)));
}

double SwapPartition::nominal_size() const noexcept
{
    return static_cast<double>(kc - l) / static_cast<double>(l);
}

namespace {

using Support = std::vector<std::size_t>;

bool next_combination(Support& c, std::size_t n)
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

// G with its tap at j moved to i, sorted.
Support relocate(const Support& g, std::size_t j, std::size_t i)
{
    Support out = g;
    *std::find(out.begin(), out.end(), j) = i;
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

SwapPartition build_swap_partition(std::size_t kc, std::size_t l, std::size_t i, std::uint64_t seed)
{
    if (l < 1 || l >= kc || i >= kc)
        throw std::invalid_argument("build_swap_partition: need 1 <= L < K_c and i < K_c");
    if (std::exp(log_binomial(kc, l)) > kPartitionBudget)
        throw std::length_error("build_swap_partition: C(K_c, L) exceeds the enumeration budget");

    SwapPartition out;
    out.kc = kc;
    out.l = l;
    out.pivot = i;

    std::map<Support, std::size_t> anchor_index;
    std::vector<Support> free_supports;
    Support c(l);
    for (std::size_t a = 0; a < l; ++a)
        c[a] = a;
    do {
        if (contains(c, i)) {
            anchor_index.emplace(c, out.groups.size());
            SwapGroup g;
            g.anchor = c;
            g.members.push_back(c);
            g.k_set.push_back(i);
            out.groups.push_back(std::move(g));
        } else {
            free_supports.push_back(c);
        }
    } while (next_combination(c, kc));

    // Initial random assignment: which tap of G goes to i.
    Engine rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, l - 1);
    std::vector<std::size_t> owner(free_supports.size());
    std::vector<std::size_t> size(out.groups.size(), 0);
    std::vector<std::vector<std::size_t>> compatible(free_supports.size());
    for (std::size_t n = 0; n < free_supports.size(); ++n) {
        const auto& g = free_supports[n];
        for (std::size_t j : g)
            compatible[n].push_back(anchor_index.at(relocate(g, j, i)));
        owner[n] = compatible[n][pick(rng)];
        ++size[owner[n]];
    }

    // Balancing; every move lowers sum(size^2), so the loop terminates.
    const double nominal = out.nominal_size();
    const double upper = 2.0 * nominal;
    const double lower = 0.5 * nominal;
    bool moved = true;
    while (moved) {
        moved = false;
        for (std::size_t n = 0; n < free_supports.size(); ++n) {
            const std::size_t from = owner[n];
            std::size_t best = from;
            for (std::size_t g : compatible[n])
                if (g != from && (best == from || size[g] < size[best] || (size[g] == size[best] && g < best)))
                    best = g;
            if (best == from)
                continue;
            const auto a = static_cast<double>(size[from]);
            const auto b = static_cast<double>(size[best]);
            if (size[from] >= size[best] + 2 && (a > upper || b < lower)) {
                --size[from];
                ++size[best];
                owner[n] = best;
                ++out.relocations;
                moved = true;
            }
        }
    }

    for (std::size_t n = 0; n < free_supports.size(); ++n) {
        auto& grp = out.groups[owner[n]];
        const auto& g = free_supports[n];
        std::size_t k = 0;
        for (std::size_t j : g)
            if (!contains(grp.anchor, j))
                k = j;
        grp.members.push_back(g);
        grp.k_set.push_back(k);
    }
    return out;
}

PartitionCheck verify_partition(const SwapPartition& p)
{
    PartitionCheck chk;
    std::map<Support, int> seen;
    chk.min_others = std::numeric_limits<std::size_t>::max();
    double total_others = 0.0;
    for (const auto& grp : p.groups) {
        if (!contains(grp.anchor, p.pivot))
            chk.anchors_hold_pivot = false;
        if (grp.members.empty() || grp.members.front() != grp.anchor || grp.k_set.size() != grp.members.size()
            || grp.k_set.front() != p.pivot)
            chk.members_differ_in_two = false;
        for (std::size_t n = 0; n < grp.members.size(); ++n) {
            const auto& m = grp.members[n];
            if (++seen[m] > 1)
                chk.disjoint = false;
            if (n == 0)
                continue;
            // m must equal the anchor with its tap at i moved to k_set[n].
            if (contains(grp.anchor, grp.k_set[n]) || relocate(grp.anchor, p.pivot, grp.k_set[n]) != m)
                chk.members_differ_in_two = false;
        }
        chk.min_others = std::min(chk.min_others, grp.others());
        chk.max_others = std::max(chk.max_others, grp.others());
        total_others += static_cast<double>(grp.others());
    }
    chk.supports_seen = seen.size();
    const double expected = std::exp(log_binomial(p.kc, p.l));
    chk.covering = std::abs(static_cast<double>(seen.size()) - expected) < 0.5;
    for (const auto& [support, count] : seen) {
        if (support.size() != p.l || !std::is_sorted(support.begin(), support.end())
            || std::adjacent_find(support.begin(), support.end()) != support.end() || support.back() >= p.kc)
            chk.covering = false;
        (void)count;
    }
    if (p.groups.empty()) {
        chk.min_others = 0;
    } else {
        chk.mean_others = total_others / static_cast<double>(p.groups.size());
        const double nominal = p.nominal_size();
        chk.sizes_balanced = static_cast<double>(chk.min_others) >= 0.5 * nominal
                             && static_cast<double>(chk.max_others) <= 2.0 * nominal;
    }
    return chk;
}

std::vector<std::size_t> sample_k_set(std::size_t kc, const Hypothesis& anchor, std::size_t i, std::uint64_t seed)
{
    require_swap_pair(anchor, kc, i, i);
    Engine rng(seed);
    std::bernoulli_distribution join(1.0 / static_cast<double>(anchor.support.size()));
    std::vector<std::size_t> out{i};
    for (std::size_t k = 0; k < kc; ++k)
        if (!contains(anchor.support, k) && join(rng))
            out.push_back(k);
    return out;
}

JRatio j_ratio(const ProofInstance& inst, const Hypothesis& anchor, std::size_t i,
               std::span<const std::size_t> k_set)
{
    const std::size_t kc = inst.x.kc();
    if (k_set.empty() || std::find(k_set.begin(), k_set.end(), i) == k_set.end())
        throw std::invalid_argument("j_ratio: K(H) must contain i");
    for (std::size_t k : k_set)
        require_swap_pair(anchor, kc, i, k);

    const double hi = anchor.gains[tap_of(anchor, i)];
    const double a = std::sqrt(inst.snr);
    const double r0 = inst.x.energy();

    // E_k = -1/2 |R0 - sqrt(snr) H_i X^k|^2 with R0 = Y - sqrt(snr) x V.
    auto v = anchor.dense(kc);
    v[i] = 0.0;
    const auto xv = circulant_apply(inst.x, v);
    auto r = inst.received();
    for (std::size_t n = 0; n < kc; ++n)
        r[n] -= a * xv[n];
    const double rr = norm2(r);
    const auto rx = circulant_transpose_apply(inst.x, r);
    const auto zx = circulant_transpose_apply(inst.x, inst.z);

    std::vector<double> exponents;
    exponents.reserve(k_set.size());
    JRatio out;
    out.group_size = k_set.size();
    out.c_kstar = -std::numeric_limits<double>::infinity();
    double e_i = 0.0;
    for (std::size_t k : k_set) {
        const double e = -0.5 * (rr - 2.0 * a * hi * rx[k] + inst.snr * hi * hi * r0);
        exponents.push_back(e);
        if (k == i)
            e_i = e;
        const double ck = a * hi * zx[k];
        if (ck > out.c_kstar || (ck == out.c_kstar && k < out.k_star)) {
            out.c_kstar = ck;
            out.k_star = k;
        }
    }
    out.log_nominator = std::log(std::abs(hi)) + e_i;
    out.log_denominator = log_sum_exp(exponents);
    out.log_abs_j = out.log_nominator - out.log_denominator;
    out.j = std::copysign(std::exp(out.log_abs_j), hi);
    return out;
}

} // namespace spreadlab
