#include "spreadlab/harness.hpp"

#include "spreadlab/rng.hpp"

#include "json.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace spreadlab {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep))
        out.push_back(trim(item));
    return out;
}

double to_double(const std::string& s, const std::string& what)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw ConfigError(what + ": '" + s + "' is not a number");
    return v;
}

std::uint64_t to_u64(const std::string& s, const std::string& what)
{
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw ConfigError(what + ": '" + s + "' is not a nonnegative integer");
    return v;
}

bool to_bool(const std::string& s, const std::string& what)
{
    if (s == "true" || s == "1" || s == "yes")
        return true;
    if (s == "false" || s == "0" || s == "no")
        return false;
    throw ConfigError(what + ": '" + s + "' is not a boolean");
}

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string_view to_string(PosteriorChoice c)
{
    switch (c) {
    case PosteriorChoice::exact:
        return "exact";
    case PosteriorChoice::mcmc:
        return "mcmc";
    case PosteriorChoice::automatic:
        break;
    }
    return "auto";
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& v, Fn fmt)
{
    std::string out;
    for (std::size_t n = 0; n < v.size(); ++n) {
        if (n > 0)
            out += ", ";
        out += fmt(v[n]);
    }
    return out;
}

} // namespace

void SweepConfig::validate() const
{
    if (schedule.kc_grid.empty())
        throw ConfigError("kc_grid must not be empty");
    if (!(schedule.alpha > 0.0 && schedule.alpha < 1.0))
        throw ConfigError("l_alpha must lie in (0, 1)");
    for (std::size_t kc : schedule.kc_grid) {
        const std::size_t l = schedule.paths(kc);
        if (kc < 2 || l < 1 || l >= kc)
            throw ConfigError("K_c=" + std::to_string(kc) + " does not admit 1 <= L < K_c");
        if (signal_kind == SignalKind::ppm && (signal_params.ppm_frame == 0 || kc % signal_params.ppm_frame != 0))
            throw ConfigError("ppm_frame " + std::to_string(signal_params.ppm_frame) + " does not divide K_c="
                              + std::to_string(kc));
    }
    if (rho_list.empty())
        throw ConfigError("rho_list must not be empty");
    for (double rho : rho_list)
        if (!(rho > 0.0) || !std::isfinite(rho))
            throw ConfigError("rho values must be positive");
    if (signal_kind == SignalKind::custom)
        throw ConfigError("signal_kind must be iid_binary, iid_gaussian or ppm");
    if (trials < 1)
        throw ConfigError("trials must be at least 1");
    if (snr_grid_points < 3)
        throw ConfigError("snr_grid_points must be at least 3");
    if (mcmc.chains < 2)
        throw ConfigError("mcmc_chains must be at least 2");
    if (mcmc.samples < 1)
        throw ConfigError("mcmc_samples must be positive");
    if (!(mcmc.refresh_rate >= 0.0 && mcmc.refresh_rate <= 1.0))
        throw ConfigError("mcmc_refresh_rate must lie in [0, 1]");
    if (workers < 1)
        throw ConfigError("workers must be at least 1");
}

SweepConfig parse_config(std::istream& in, const std::string& origin)
{
    SweepConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (seen.contains(key))
            throw ConfigError(where + ": duplicate key '" + key + "'");
        seen[key] = lineno;
        const std::string what = where + " " + key;

        try {
            if (key == "kc_grid") {
                cfg.schedule.kc_grid.clear();
                for (const auto& item : split(value, ','))
                    cfg.schedule.kc_grid.push_back(to_u64(item, what));
            } else if (key == "l_alpha") {
                cfg.schedule.alpha = to_double(value, what);
            } else if (key == "rho_list") {
                cfg.rho_list.clear();
                for (const auto& item : split(value, ','))
                    cfg.rho_list.push_back(to_double(item, what));
            } else if (key == "signal_kind") {
                cfg.signal_kind = signal_kind_from_string(value);
            } else if (key == "ppm_frame") {
                cfg.signal_params.ppm_frame = to_u64(value, what);
            } else if (key == "gain_model") {
                cfg.gain_model = gain_model_from_string(value);
            } else if (key == "trials") {
                cfg.trials = to_u64(value, what);
            } else if (key == "snr_grid_points") {
                cfg.snr_grid_points = to_u64(value, what);
            } else if (key == "seed") {
                cfg.seed = to_u64(value, what);
            } else if (key == "output") {
                cfg.output = value;
            } else if (key == "posterior") {
                if (value == "auto")
                    cfg.posterior = PosteriorChoice::automatic;
                else if (value == "exact")
                    cfg.posterior = PosteriorChoice::exact;
                else if (value == "mcmc")
                    cfg.posterior = PosteriorChoice::mcmc;
                else
                    throw ConfigError(what + ": expected auto, exact or mcmc");
            } else if (key == "mcmc_chains") {
                cfg.mcmc.chains = to_u64(value, what);
            } else if (key == "mcmc_burnin") {
                cfg.mcmc.burnin = to_u64(value, what);
            } else if (key == "mcmc_samples") {
                cfg.mcmc.samples = to_u64(value, what);
            } else if (key == "mcmc_refresh_rate") {
                cfg.mcmc.refresh_rate = to_double(value, what);
            } else if (key == "workers") {
                cfg.workers = static_cast<unsigned>(to_u64(value, what));
            } else if (key == "record_timing") {
                cfg.record_timing = to_bool(value, what);
            } else {
                throw ConfigError(where + ": unknown key '" + key + "'");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw ConfigError(what + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

SweepConfig parse_config_text(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

SweepConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

std::string format_config(const SweepConfig& c)
{
    std::ostringstream out;
    out << "kc_grid = " << join(c.schedule.kc_grid, [](auto v) { return std::to_string(v); }) << '\n'
        << "l_alpha = " << format_double(c.schedule.alpha) << '\n'
        << "rho_list = " << join(c.rho_list, format_double) << '\n'
        << "signal_kind = " << to_string(c.signal_kind) << '\n'
        << "ppm_frame = " << c.signal_params.ppm_frame << '\n'
        << "gain_model = " << to_string(c.gain_model) << '\n'
        << "trials = " << c.trials << '\n'
        << "snr_grid_points = " << c.snr_grid_points << '\n'
        << "seed = " << c.seed << '\n'
        << "output = " << c.output << '\n'
        << "posterior = " << to_string(c.posterior) << '\n'
        << "mcmc_chains = " << c.mcmc.chains << '\n'
        << "mcmc_burnin = " << c.mcmc.burnin << '\n'
        << "mcmc_samples = " << c.mcmc.samples << '\n'
        << "mcmc_refresh_rate = " << format_double(c.mcmc.refresh_rate) << '\n'
        << "workers = " << c.workers << '\n'
        << "record_timing = " << (c.record_timing ? "true" : "false") << '\n';
    return out.str();
}

std::string format_record(const SweepRecord& r)
{
    std::string out;
    out += std::to_string(r.kc) + ',' + std::to_string(r.l) + ',';
    for (double v : {r.rho, r.snr, r.i_cond_nats, r.i_cond_stderr, r.penalty_ratio, r.penalty_stderr,
                     r.rate_upper_nats, r.entropy_cap_nats, r.threshold_snr, r.wall_time_s})
        out += format_double(v) + ',';
    out += std::to_string(r.seed);
    return out;
}

SweepRecord parse_record(const std::string& line)
{
    const auto f = split(line, ',');
    if (f.size() != 13)
        throw std::invalid_argument("CSV row has " + std::to_string(f.size()) + " fields, expected 13");
    SweepRecord r;
    r.kc = to_u64(f[0], "kc");
    r.l = to_u64(f[1], "l");
    double* fields[] = {&r.rho,           &r.snr,          &r.i_cond_nats,      &r.i_cond_stderr,
                        &r.penalty_ratio, &r.penalty_stderr, &r.rate_upper_nats, &r.entropy_cap_nats,
                        &r.threshold_snr, &r.wall_time_s};
    for (std::size_t n = 0; n < 10; ++n)
        *fields[n] = to_double(f[2 + n], "csv field " + std::to_string(2 + n));
    r.seed = to_u64(f[12], "seed");
    return r;
}

void write_csv(std::ostream& out, const std::vector<SweepRecord>& records)
{
    out << kCsvHeader << '\n';
    for (const auto& r : records)
        out << format_record(r) << '\n';
}

std::vector<SweepRecord> read_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || trim(line) != kCsvHeader)
        throw std::invalid_argument("CSV header does not match the sweep schema");
    std::vector<SweepRecord> out;
    while (std::getline(in, line))
        if (!trim(line).empty())
            out.push_back(parse_record(trim(line)));
    return out;
}

CellSpec cell_spec(const SweepConfig& config, std::size_t index)
{
    if (index >= config.cell_count())
        throw ConfigError("cell index " + std::to_string(index) + " out of range");
    CellSpec spec;
    spec.index = index;
    spec.kc = config.schedule.kc_grid[index / config.rho_list.size()];
    spec.l = config.schedule.paths(spec.kc);
    spec.rho = config.rho_list[index % config.rho_list.size()];
    return spec;
}

std::uint64_t cell_seed(const SweepConfig& config, std::size_t index)
{
    return derive_seed(config.seed, index);
}

CellResult run_cell(const SweepConfig& config, std::size_t index)
{
    const auto start = std::chrono::steady_clock::now();
    CellResult out;
    out.spec = cell_spec(config, index);
    const auto& spec = out.spec;
    const std::uint64_t seed = cell_seed(config, index);

    const double threshold = threshold_snr(spec.kc, spec.l);
    const double snr = spec.rho * threshold;
    const auto grid = default_snr_grid(snr, config.snr_grid_points);
    const auto x = gen_signal(config.signal_kind, spec.kc, config.signal_params, derive_seed(seed, 0, 1));

    MmseOptions opts;
    opts.l = spec.l;
    opts.model = config.gain_model;
    opts.trials = config.trials;
    opts.seed = derive_seed(seed, 1);
    opts.choice = config.posterior;
    opts.mcmc = config.mcmc;
    opts.workers = config.workers;
    const auto set = mmse_trials(x, grid, opts);
    out.mode = set.mode;
    out.nonconverged = set.nonconverged;

    // Per-trial integrals share (H, Z) across the grid, so their spread is the
    // honest error of the integral.
    const auto w = trapezoid_weights(grid, snr);
    const double coherent = 0.5 * static_cast<double>(spec.kc) * snr;
    const auto n = static_cast<double>(set.errors.size());
    std::vector<double> info(set.errors.size());
    for (std::size_t t = 0; t < set.errors.size(); ++t) {
        double acc = 0.0;
        for (std::size_t p = 0; p < grid.size(); ++p)
            acc += 0.5 * w[p] * set.errors[t][p];
        info[t] = acc;
        out.trial_penalties.push_back(acc / coherent);
    }
    double mean = 0.0;
    for (double v : info)
        mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : info)
        var += (v - mean) * (v - mean);
    const double se = info.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;

    out.curve.snr_grid = grid;
    out.curve.values.assign(grid.size(), 0.0);
    out.curve.stderrs.assign(grid.size(), 0.0);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        double m = 0.0;
        for (const auto& row : set.errors)
            m += row[p];
        m /= n;
        double v = 0.0;
        for (const auto& row : set.errors)
            v += (row[p] - m) * (row[p] - m);
        out.curve.values[p] = m;
        out.curve.stderrs[p] = set.errors.size() > 1 ? std::sqrt(v / (n - 1.0) / n) : 0.0;
    }
    const double cap = channel_entropy_nats(spec.kc, spec.l, config.gain_model);
    const auto summary = penalty_and_rate(out.curve, snr, spec.kc, cap);

    auto& r = out.record;
    r.kc = spec.kc;
    r.l = spec.l;
    r.rho = spec.rho;
    r.snr = snr;
    r.i_cond_nats = summary.i_cond_raw_nats;
    r.i_cond_stderr = se;
    r.penalty_ratio = summary.penalty_ratio;
    r.penalty_stderr = se / coherent;
    r.rate_upper_nats = summary.rate_upper_nats;
    r.entropy_cap_nats = cap;
    r.threshold_snr = threshold;
    r.seed = seed;
    if (config.record_timing)
        r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::vector<SweepRecord> SweepResult::records() const
{
    std::vector<SweepRecord> out;
    for (const auto& c : cells)
        out.push_back(c.record);
    return out;
}

std::string sidecar_path(const std::string& csv_path)
{
    return csv_path + ".json";
}

std::string sidecar_json(const SweepConfig& config, const SweepResult& result)
{
    using nlohmann::ordered_json;
    ordered_json cfg;
    cfg["kc_grid"] = config.schedule.kc_grid;
    cfg["l_alpha"] = config.schedule.alpha;
    cfg["rho_list"] = config.rho_list;
    cfg["signal_kind"] = std::string(to_string(config.signal_kind));
    cfg["ppm_frame"] = config.signal_params.ppm_frame;
    cfg["gain_model"] = std::string(to_string(config.gain_model));
    cfg["trials"] = config.trials;
    cfg["snr_grid_points"] = config.snr_grid_points;
    cfg["seed"] = config.seed;
    cfg["output"] = config.output;
    cfg["posterior"] = std::string(to_string(config.posterior));
    cfg["mcmc_chains"] = config.mcmc.chains;
    cfg["mcmc_burnin"] = config.mcmc.burnin;
    cfg["mcmc_samples"] = config.mcmc.samples;
    cfg["mcmc_refresh_rate"] = config.mcmc.refresh_rate;
    cfg["workers"] = config.workers;
    cfg["record_timing"] = config.record_timing;

    ordered_json doc;
    doc["config"] = cfg;
    doc["provenance"] = {{"tool", "spreadlab"},
                         {"version", "0.1.0"},
                         {"csv_columns", kCsvHeader},
                         {"information_unit", "nats"},
                         {"seed_mixing", "derive_seed(root,a,b)=splitmix64(splitmix64(splitmix64(root)^a)^b); "
                                         "cell=derive_seed(seed,index); signal=derive_seed(cell,0,1); "
                                         "trials=derive_seed(cell,1)"}};
    ordered_json cells = ordered_json::array();
    for (const auto& c : result.cells) {
        cells.push_back({{"index", c.spec.index},
                         {"kc", c.spec.kc},
                         {"l", c.spec.l},
                         {"rho", c.spec.rho},
                         {"posterior", std::string(to_string(c.mode))},
                         {"nonconverged_posteriors", c.nonconverged},
                         {"snr_grid", c.curve.snr_grid},
                         {"mmse", c.curve.values},
                         {"mmse_stderr", c.curve.stderrs}});
    }
    doc["cells"] = cells;
    ordered_json errors = ordered_json::array();
    for (const auto& f : result.failures)
        errors.push_back({{"index", f.spec.index}, {"kc", f.spec.kc}, {"rho", f.spec.rho}, {"error", f.error}});
    doc["errors"] = errors;
    return doc.dump(2) + "\n";
}

SweepResult run_sweep(const SweepConfig& config, std::ostream* progress)
{
    config.validate();
    SweepResult result;
    std::ofstream csv;
    const bool persist = !config.output.empty();
    if (persist) {
        csv.open(config.output, std::ios::trunc);
        if (!csv)
            throw std::runtime_error("cannot write '" + config.output + "'");
        csv << kCsvHeader << '\n' << std::flush;
    }

    for (std::size_t index = 0; index < config.cell_count(); ++index) {
        try {
            result.cells.push_back(run_cell(config, index));
            const auto& r = result.cells.back().record;
            if (persist)
                csv << format_record(r) << '\n' << std::flush;
            if (progress)
                *progress << "cell " << index << ": K_c=" << r.kc << " L=" << r.l << " rho=" << r.rho
                          << " penalty_ratio=" << r.penalty_ratio << " +/- " << r.penalty_stderr << '\n';
        } catch (const std::exception& e) {
            CellFailure f;
            f.error = e.what();
            try {
                f.spec = cell_spec(config, index);
            } catch (...) {
                f.spec.index = index;
            }
            result.failures.push_back(std::move(f));
            if (progress)
                *progress << "cell " << index << " failed: " << e.what() << '\n';
        }
        if (persist) {
            std::ofstream side(sidecar_path(config.output), std::ios::trunc);
            side << sidecar_json(config, result);
        }
    }
    return result;
}

} // namespace spreadlab
