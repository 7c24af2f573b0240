#pragma once

#include "spreadlab/channel.hpp"
#include "spreadlab/posterior.hpp"
#include "spreadlab/rate.hpp"
#include "spreadlab/signals.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace spreadlab {

/// Bad configuration or arguments (CLI exit code 1).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Sweep configuration. File format: one `key = value` per line, `#` starts a
/// comment, lists are comma separated.
///
///   kc_grid         = 64, 128, 256, 512   K_c values
///   l_alpha         = 0.5                 L = ceil(K_c ^ l_alpha)
///   rho_list        = 0.1, 1, 10          snr = rho * ln(K_c/L) / (K_c/L)
///   signal_kind     = iid_binary          iid_binary | iid_gaussian | ppm
///   ppm_frame       = 4                   PPM frame length (ppm only)
///   gain_model      = rademacher          rademacher | bounded_uniform
///   trials          = 200                 (H, Z) draws per cell
///   snr_grid_points = 33                  points of the mmse curve, including 0
///   seed            = 1                   root seed
///   output          = sweep.csv           CSV path; the JSON sidecar is <output>.json
///   posterior       = auto                auto | exact | mcmc
///   mcmc_chains     = 4
///   mcmc_burnin     = 0                   0 means 10 * K_c
///   mcmc_samples    = 5000                post-burn-in states per chain
///   mcmc_refresh_rate = 0.1               fraction of full-conditional tap redraws
///   workers         = 1                   threads per cell
///   record_timing   = true                false writes wall_time_s = 0 (byte-reproducible files)
struct SweepConfig {
    ScalingSchedule schedule{{64, 128, 256, 512}, 0.5};
    std::vector<double> rho_list{0.1, 1.0, 10.0};
    SignalKind signal_kind = SignalKind::iid_binary;
    SignalParams signal_params;
    GainModel gain_model = GainModel::rademacher;
    std::size_t trials = 200;
    std::size_t snr_grid_points = 33;
    std::uint64_t seed = 1;
    std::string output = "sweep.csv";
    PosteriorChoice posterior = PosteriorChoice::automatic;
    McmcOptions mcmc;
    unsigned workers = 1;
    bool record_timing = true;

    /// Throws ConfigError on any violated invariant.
    void validate() const;
    std::size_t cell_count() const noexcept { return schedule.kc_grid.size() * rho_list.size(); }
};

SweepConfig parse_config(std::istream& in, const std::string& origin = "<config>");
SweepConfig parse_config_text(const std::string& text);
/// Throws ConfigError naming the path when it cannot be opened.
SweepConfig load_config(const std::string& path);
std::string format_config(const SweepConfig& config);

/// One CSV row.
struct SweepRecord {
    std::size_t kc = 0;
    std::size_t l = 0;
    double rho = 0.0;
    double snr = 0.0;
    double i_cond_nats = 0.0;
    double i_cond_stderr = 0.0;
    double penalty_ratio = 0.0;
    double penalty_stderr = 0.0;
    double rate_upper_nats = 0.0;
    double entropy_cap_nats = 0.0;
    double threshold_snr = 0.0;
    double wall_time_s = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const SweepRecord&) const = default;
};

inline constexpr const char* kCsvHeader =
    "kc,l,rho,snr,i_cond_nats,i_cond_stderr,penalty_ratio,penalty_stderr,rate_upper_nats,entropy_cap_nats,"
    "threshold_snr,wall_time_s,seed";

std::string format_record(const SweepRecord& r);
SweepRecord parse_record(const std::string& line);
void write_csv(std::ostream& out, const std::vector<SweepRecord>& records);
std::vector<SweepRecord> read_csv(std::istream& in);

struct CellSpec {
    std::size_t index = 0;
    std::size_t kc = 0;
    std::size_t l = 0;
    double rho = 0.0;
};

/// Cells enumerate kc_grid (outer) x rho_list (inner).
CellSpec cell_spec(const SweepConfig& config, std::size_t index);

/// Seed of cell `index`: derive_seed(root, index). The signal uses
/// derive_seed(cell_seed, 0, 1); the mmse trials use derive_seed(cell_seed, 1).
std::uint64_t cell_seed(const SweepConfig& config, std::size_t index);

struct CellResult {
    CellSpec spec;
    SweepRecord record;
    MmseCurve curve;
    PosteriorMode mode = PosteriorMode::exact;
    std::size_t nonconverged = 0;
    std::vector<double> trial_penalties;
};

/// Runs one cell in isolation; identical to the corresponding cell of run_sweep.
CellResult run_cell(const SweepConfig& config, std::size_t index);

struct CellFailure {
    CellSpec spec;
    std::string error;
};

struct SweepResult {
    std::vector<CellResult> cells;
    std::vector<CellFailure> failures;

    std::vector<SweepRecord> records() const;
};

/// Runs every cell, appending each finished row to config.output and rewriting
/// the JSON sidecar after every cell. A failing cell is reported in the sidecar's
/// "errors" array and the sweep moves on. An empty output path skips persistence.
SweepResult run_sweep(const SweepConfig& config, std::ostream* progress = nullptr);

std::string sidecar_path(const std::string& csv_path);
std::string sidecar_json(const SweepConfig& config, const SweepResult& result);

} // namespace spreadlab
