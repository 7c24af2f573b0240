#include "spreadlab/rate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spreadlab {

void MmseCurve::validate() const
{
    if (snr_grid.empty() || snr_grid.front() != 0.0)
        throw std::invalid_argument("MmseCurve: grid must start at 0");
    if (values.size() != snr_grid.size() || stderrs.size() != snr_grid.size())
        throw std::invalid_argument("MmseCurve: grid, values and stderrs differ in length");
    for (std::size_t k = 1; k < snr_grid.size(); ++k)
        if (!(snr_grid[k] > snr_grid[k - 1]))
            throw std::invalid_argument("MmseCurve: grid must be strictly increasing");
    for (std::size_t k = 0; k < values.size(); ++k)
        if (!(values[k] >= 0.0) || !(stderrs[k] >= 0.0))
            throw std::invalid_argument("MmseCurve: values and stderrs must be nonnegative");
}

std::vector<double> trapezoid_weights(std::span<const double> grid, double target)
{
    if (grid.empty() || !(target >= grid.front()) || target > grid.back())
        throw std::invalid_argument("trapezoid: target " + std::to_string(target) + " lies outside the grid");
    std::vector<double> w(grid.size(), 0.0);
    for (std::size_t k = 1; k < grid.size() && grid[k - 1] < target; ++k) {
        const double lo = grid[k - 1];
        const double hi = grid[k];
        if (target >= hi) {
            w[k - 1] += 0.5 * (hi - lo);
            w[k] += 0.5 * (hi - lo);
            continue;
        }
        // Partial panel [lo, target] with f(target) interpolated linearly.
        const double h = target - lo;
        const double theta = h / (hi - lo);
        w[k - 1] += 0.5 * h * (1.0 + (1.0 - theta));
        w[k] += 0.5 * h * theta;
    }
    return w;
}

InfoEstimate mutual_info_immse(const MmseCurve& curve, double snr_target)
{
    curve.validate();
    const auto w = trapezoid_weights(curve.snr_grid, snr_target);
    InfoEstimate out;
    for (std::size_t k = 0; k < w.size(); ++k) {
        out.nats += 0.5 * w[k] * curve.values[k];
        out.error_bound += 0.5 * w[k] * curve.stderrs[k];
    }
    return out;
}

RateSummary penalty_and_rate(const MmseCurve& curve, double snr_target, std::size_t kc, double entropy_cap_nats)
{
    if (!(snr_target > 0.0))
        throw std::invalid_argument("penalty_and_rate: snr_target must be positive");
    const auto info = mutual_info_immse(curve, snr_target);
    const double coherent = 0.5 * static_cast<double>(kc) * snr_target;
    RateSummary out;
    out.i_cond_raw_nats = info.nats;
    out.i_cond_nats = std::min(info.nats, entropy_cap_nats);
    out.penalty_ratio = info.nats / coherent;
    out.rate_upper_nats = std::max(0.0, coherent - info.nats);
    out.entropy_cap_nats = entropy_cap_nats;
    out.error_bound = info.error_bound;
    return out;
}

double threshold_snr(std::size_t kc, std::size_t l)
{
    if (l < 1 || kc <= l)
        throw std::invalid_argument("threshold_snr: need K_c > L >= 1");
    const double ratio = static_cast<double>(kc) / static_cast<double>(l);
    return std::log(ratio) / ratio;
}

std::vector<double> default_snr_grid(double target, std::size_t points)
{
    if (!(target > 0.0) || points < 3)
        throw std::invalid_argument("default_snr_grid: need target > 0 and at least 3 points");
    std::vector<double> grid{0.0};
    const double start = target / 1000.0;
    const std::size_t n = points - 1;
    for (std::size_t k = 0; k < n; ++k) {
        const double frac = static_cast<double>(k) / static_cast<double>(n - 1);
        grid.push_back(start * std::pow(1000.0, frac));
    }
    grid.back() = target;
    return grid;
}

std::vector<double> uniform_snr_grid(double target, std::size_t points)
{
    if (!(target > 0.0) || points < 2)
        throw std::invalid_argument("uniform_snr_grid: need target > 0 and at least 2 points");
    std::vector<double> grid(points);
    for (std::size_t k = 0; k < points; ++k)
        grid[k] = target * static_cast<double>(k) / static_cast<double>(points - 1);
    grid.back() = target;
    return grid;
}

double scalar_binary_mmse(double snr)
{
    if (!(snr >= 0.0))
        throw std::invalid_argument("scalar_binary_mmse: snr must be nonnegative");
    // By symmetry condition on h = +1: y = sqrt(s) + z, estimate tanh(sqrt(s) y).
    constexpr int intervals = 4000; // even
    constexpr double lo = -12.0;
    constexpr double hi = 12.0;
    const double step = (hi - lo) / intervals;
    const double a = std::sqrt(snr);
    auto integrand = [&](double z) {
        const double err = 1.0 - std::tanh(a * (a + z));
        return err * err * std::exp(-0.5 * z * z);
    };
    double acc = integrand(lo) + integrand(hi);
    for (int k = 1; k < intervals; ++k)
        acc += (k % 2 == 1 ? 4.0 : 2.0) * integrand(lo + k * step);
    return acc * step / 3.0 / std::sqrt(2.0 * std::numbers::pi);
}

} // namespace spreadlab
