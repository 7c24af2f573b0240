#include "spreadlab/channel.hpp"

#include "spreadlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spreadlab {

std::string_view to_string(GainModel model)
{
    return model == GainModel::rademacher ? "rademacher" : "bounded_uniform";
}

GainModel gain_model_from_string(std::string_view name)
{
    if (name == "rademacher")
        return GainModel::rademacher;
    if (name == "bounded_uniform")
        return GainModel::bounded_uniform;
    throw std::invalid_argument("unknown gain model '" + std::string(name) + "'");
}

double BoundedUniformLaw::b2()
{
    // b2^2 + b1 b2 + (b1^2 - 3) = 0
    return 0.5 * (-b1 + std::sqrt(b1 * b1 - 4.0 * (b1 * b1 - 3.0)));
}

std::vector<double> gain_alphabet(GainModel model, std::size_t l)
{
    const double scale = 1.0 / std::sqrt(static_cast<double>(l));
    if (model == GainModel::rademacher)
        return {-scale, scale};

    const double lo = BoundedUniformLaw::b1;
    const double step = (BoundedUniformLaw::b2() - lo) / static_cast<double>(kGainGridLevels);
    std::vector<double> out;
    out.reserve(2 * kGainGridLevels);
    for (std::size_t m = kGainGridLevels; m-- > 0;)
        out.push_back(-(lo + (static_cast<double>(m) + 0.5) * step) * scale);
    for (std::size_t m = 0; m < kGainGridLevels; ++m)
        out.push_back((lo + (static_cast<double>(m) + 0.5) * step) * scale);
    return out;
}

double gain_floor(GainModel model)
{
    return model == GainModel::rademacher ? 1.0 : BoundedUniformLaw::b1;
}

std::vector<double> ChannelRealization::dense() const
{
    std::vector<double> h(kc, 0.0);
    for (std::size_t a = 0; a < support.size(); ++a)
        h[support[a]] = gains[a];
    return h;
}

double ChannelRealization::energy() const noexcept
{
    return std::inner_product(gains.begin(), gains.end(), gains.begin(), 0.0);
}

ChannelRealization make_channel(std::size_t kc, std::vector<std::size_t> support, std::vector<double> gains,
                                GainModel model)
{
    if (support.size() != gains.size())
        throw std::invalid_argument("make_channel: support and gains differ in length");
    if (support.empty() || support.size() >= kc)
        throw std::invalid_argument("make_channel: need 1 <= L < K_c");
    std::vector<std::size_t> order(support.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return support[a] < support[b]; });

    ChannelRealization h;
    h.kc = kc;
    h.model = model;
    for (auto a : order) {
        if (support[a] >= kc)
            throw std::invalid_argument("make_channel: tap index out of range");
        if (!h.support.empty() && h.support.back() == support[a])
            throw std::invalid_argument("make_channel: duplicate tap index");
        h.support.push_back(support[a]);
        h.gains.push_back(gains[a]);
    }
    return h;
}

std::vector<std::size_t> sample_support(std::size_t kc, std::size_t l, Engine& rng)
{
    std::vector<std::size_t> chosen;
    chosen.reserve(l);
    for (std::size_t j = kc - l; j < kc; ++j) {
        std::uniform_int_distribution<std::size_t> pick(0, j);
        const std::size_t t = pick(rng);
        if (std::find(chosen.begin(), chosen.end(), t) == chosen.end())
            chosen.push_back(t);
        else
            chosen.push_back(j);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

ChannelRealization sample_channel(std::size_t kc, std::size_t l, GainModel model, std::uint64_t seed)
{
    if (l < 1 || l >= kc)
        throw std::invalid_argument("sample_channel: need 1 <= L < K_c (K_c=" + std::to_string(kc)
                                    + ", L=" + std::to_string(l) + ")");
    Engine rng(seed);
    ChannelRealization h;
    h.kc = kc;
    h.model = model;
    h.support = sample_support(kc, l, rng);
    h.gains.resize(l);

    const double scale = 1.0 / std::sqrt(static_cast<double>(l));
    std::bernoulli_distribution coin(0.5);
    std::uniform_real_distribution<double> mag(BoundedUniformLaw::b1, BoundedUniformLaw::b2());
    for (auto& g : h.gains) {
        const double sign = coin(rng) ? 1.0 : -1.0;
        g = model == GainModel::rademacher ? sign * scale : sign * mag(rng) * scale;
    }
    return h;
}

std::size_t ScalingSchedule::paths(std::size_t kc) const
{
    // The 1e-9 guard keeps exact powers (sqrt(256) = 16) from rounding up.
    return static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(kc), alpha) - 1e-9));
}

bool ScalingSchedule::is_sublinear() const
{
    for (std::size_t n = 0; n < kc_grid.size(); ++n) {
        const std::size_t l = paths(kc_grid[n]);
        if (l < 1 || l >= kc_grid[n])
            return false;
        if (n == 0)
            continue;
        const std::size_t lp = paths(kc_grid[n - 1]);
        const double ratio = static_cast<double>(l) / static_cast<double>(kc_grid[n]);
        const double ratio_prev = static_cast<double>(lp) / static_cast<double>(kc_grid[n - 1]);
        if (l < lp || !(ratio < ratio_prev))
            return false;
    }
    return true;
}

std::vector<double> cross_correlation_sums(std::span<const double> autocorr, const ChannelRealization& h)
{
    if (autocorr.size() != h.kc)
        throw std::invalid_argument("condition7: signal and channel disagree on K_c");
    std::vector<double> sums(h.kc, 0.0);
    for (std::size_t i = 0; i < h.kc; ++i) {
        double acc = 0.0;
        for (std::size_t a = 0; a < h.support.size(); ++a)
            if (h.support[a] != i)
                acc += h.gains[a] * shifted_inner(autocorr, i, h.support[a]);
        sums[i] = std::abs(acc);
    }
    return sums;
}

std::vector<std::size_t> check_condition7(std::span<const double> autocorr, const ChannelRealization& h, double b3)
{
    const double bound = b3 * std::sqrt(static_cast<double>(h.kc));
    const auto sums = cross_correlation_sums(autocorr, h);
    std::vector<std::size_t> passing;
    for (std::size_t i = 0; i < sums.size(); ++i)
        if (sums[i] <= bound)
            passing.push_back(i);
    return passing;
}

std::vector<std::size_t> check_condition7(const SpreadSignal& x, const ChannelRealization& h, double b3)
{
    if (x.kc() != h.kc)
        throw std::invalid_argument("condition7: signal and channel disagree on K_c");
    const auto r = empirical_autocorr(x);
    return check_condition7(r, h, b3);
}

double log_binomial(std::size_t n, std::size_t k)
{
    if (k > n)
        throw std::invalid_argument("log_binomial: k > n");
    const auto dn = static_cast<double>(n);
    const auto dk = static_cast<double>(k);
    return std::lgamma(dn + 1.0) - std::lgamma(dk + 1.0) - std::lgamma(dn - dk + 1.0);
}

double channel_entropy_nats(std::size_t kc, std::size_t l, GainModel model)
{
    if (l < 1 || l >= kc)
        throw std::invalid_argument("channel_entropy_nats: need 1 <= L < K_c");
    const double per_tap = model == GainModel::rademacher ? std::log(2.0)
                                                          : std::log(2.0 * static_cast<double>(kGainGridLevels));
    return log_binomial(kc, l) + static_cast<double>(l) * per_tap;
}

} // namespace spreadlab
