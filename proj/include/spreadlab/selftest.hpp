#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace spreadlab {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Fast closed-form and identity checks across every module.
std::vector<CheckResult> run_selftest();

struct ProoflabParams {
    std::size_t kc = 256;
    std::size_t l = 16;
    double rho = 0.1;
    std::size_t trials = 50;
    std::uint64_t seed = 1;
    double b3 = 6.0;
};

/// Diagnostic battery over random (X, H, Z) draws: decomposition identity, the
/// a-term bound, c_k variance, the k* maximum against the order-statistic mean,
/// the median log J, and (when enumerable) the swap partition.
std::vector<CheckResult> run_prooflab_battery(const ProoflabParams& params);

/// One line per check; returns true when all passed.
bool print_checks(std::ostream& out, const std::vector<CheckResult>& checks);

} // namespace spreadlab
