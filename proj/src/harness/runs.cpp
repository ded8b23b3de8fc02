#include "dyncomp/harness/runs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dyncomp/errors.hpp"
#include "dyncomp/parallel.hpp"
#include "dyncomp/sizing.hpp"

namespace dyncomp::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const Corner kCorners[] = {Corner::TT, Corner::FF, Corner::SS, Corner::FS, Corner::SF};

struct GridDefault {
    const char* variable;
    const char* column;
    double start;
    double stop;
    int points;
    SweepScale scale;
};

const GridDefault kGridDefaults[] = {
    {"vid", "vid_V", 1e-3, 50e-3, 20, SweepScale::log},
    {"vcm", "vcm_V", 0.1, 1.1, 21, SweepScale::linear},
    {"vdd", "vdd_V", 1.4, 2.0, 13, SweepScale::linear},
    {"temp", "temp_C", -20.0, 100.0, 13, SweepScale::linear},
    {"corner", "corner", 0.0, 4.0, 5, SweepScale::linear},
    {"freq", "freq_Hz", 100e6, 1e9, 10, SweepScale::log},
    {"width_preamp", "width_preamp_m", 0.5e-6, 4e-6, 15, SweepScale::linear},
    {"width_inv_n", "width_inv_n_m", 0.22e-6, 1.1e-6, 12, SweepScale::linear},
    {"width_inv_both", "width_inv_both_m", 0.22e-6, 1.1e-6, 12, SweepScale::linear},
};

const GridDefault& grid_default(const std::string& variable) {
    for (const auto& g : kGridDefaults) {
        if (variable == g.variable) return g;
    }
    throw RangeError("variable", "unknown sweep variable '" + variable + "'");
}

void apply_point(RunConfig& c, const std::string& variable, double v, std::size_t index) {
    if (variable == "vid") {
        c.vid = v;
    } else if (variable == "vcm") {
        c.vcm = v;
    } else if (variable == "vdd") {
        c.circuit.vdd = v;
    } else if (variable == "temp") {
        c.temp_c = v;
    } else if (variable == "corner") {
        c.corner = kCorners[index];
    } else if (variable == "freq") {
        c.circuit.freq = v;
    } else {
        const auto target = parse_width_target(variable.substr(6));
        c.circuit.geoms = resize_group(c.circuit.geoms, target, v);
    }
}

std::string point_label(const std::string& variable, double v, std::size_t index) {
    if (variable == "corner") return std::string(to_string(kCorners[index]));
    return format_number(v);
}

std::string sanitize(std::string s) {
    for (char& ch : s) {
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    }
    return s;
}

SweepRow error_row(const std::string& message, bool both_modes) {
    SweepRow row;
    row.decision = 0;
    row.t_dm = row.t_esd = row.power = row.energy = kNaN;
    row.late = true;
    if (both_modes) row.energy_noshutdown = row.power_noshutdown = row.savings_pct = kNaN;
    row.status = "error:" + sanitize(message);
    return row;
}

SweepRow evaluate(const RunConfig& c, bool both_modes) {
    SweepRow row;
    try {
        c.validate();
        const Comparator engine = c.engine();
        const OperatingPoint op = c.operating_point();
        const auto r = engine.simulate(op);
        row.decision = r.decision;
        row.t_dm = r.t_dm;
        row.t_esd = r.t_esd;
        row.energy = r.energy.total;
        row.power = r.power(c.circuit.freq);
        row.late = r.late;
        if (both_modes) {
            const auto off = engine.with_shutdown(false).simulate(op);
            row.energy_noshutdown = off.energy.total;
            row.power_noshutdown = off.power(c.circuit.freq);
            row.savings_pct = 100.0 * (off.energy.total - r.energy.total) / off.energy.total;
        }
    } catch (const Error& e) {
        return error_row(e.what(), both_modes);
    }
    return row;
}

std::string stats_prefix(const char* phase) { return std::string("summary.") + phase + "."; }

void add_stats(std::vector<std::pair<std::string, std::string>>& meta, const char* phase,
               const OffsetStats& s, bool calibrated) {
    const auto p = stats_prefix(phase);
    meta.emplace_back(p + "n", std::to_string(s.n));
    meta.emplace_back(p + "failed", std::to_string(s.failed));
    if (calibrated) meta.emplace_back(p + "converged", std::to_string(s.converged));
    meta.emplace_back(p + "mean_V", format_number(s.mean));
    meta.emplace_back(p + "sigma_V", format_number(s.sigma));
    if (s.offsets.size() <= 1) meta.emplace_back(p + "degenerate", "true");
    if (!s.failed_trials.empty()) {
        std::string list;
        for (std::size_t i = 0; i < s.failed_trials.size(); ++i) {
            if (i) list += ';';
            list += std::to_string(s.failed_trials[i]);
        }
        meta.emplace_back(p + "failed_trials", list);
    }
}

void add_histogram_rows(CsvDocument& doc, const char* phase, const Histogram& h) {
    const std::size_t n = h.counts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = h.lo + static_cast<double>(i) * h.bin_width();
        const double hi = i + 1 == n ? h.hi : h.lo + static_cast<double>(i + 1) * h.bin_width();
        doc.rows.push_back({phase, format_number(lo), format_number(hi), std::to_string(h.counts[i])});
    }
}

}  // namespace

const std::vector<std::string>& sweep_variables() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& g : kGridDefaults) v.emplace_back(g.variable);
        return v;
    }();
    return names;
}

std::vector<double> sweep_grid(const RunConfig& config) {
    const auto& def = grid_default(config.sweep.variable);
    if (config.sweep.variable == "corner") {
        std::vector<double> v;
        for (std::size_t i = 0; i < std::size(kCorners); ++i) v.push_back(static_cast<double>(i));
        return v;
    }
    const double start = config.sweep.start.value_or(def.start);
    const double stop = config.sweep.stop.value_or(def.stop);
    const int points = config.sweep.points.value_or(def.points);
    const SweepScale scale = config.sweep.scale.value_or(def.scale);
    if (points < 2) throw RangeError("points", "must be >= 2 for a sweep");
    if (!std::isfinite(start)) throw RangeError("start", "must be finite");
    if (!std::isfinite(stop)) throw RangeError("stop", "must be finite");
    if (scale == SweepScale::log && !(start > 0.0 && stop > 0.0)) {
        throw RangeError("scale", "log sweeps need positive start and stop");
    }

    // Both endpoints must satisfy the swept variable's own invariants.
    for (const auto& [key, v] : {std::pair{"start", start}, std::pair{"stop", stop}}) {
        RunConfig probe = config;
        try {
            apply_point(probe, config.sweep.variable, v, 0);
            probe.validate();
        } catch (const RangeError& e) {
            throw RangeError(key, std::string(e.what()));
        }
    }

    std::vector<double> grid(static_cast<std::size_t>(points));
    const double last = static_cast<double>(points - 1);
    for (int i = 0; i < points; ++i) {
        const double f = static_cast<double>(i) / last;
        grid[static_cast<std::size_t>(i)] =
            scale == SweepScale::log ? start * std::pow(stop / start, f) : start + (stop - start) * f;
    }
    grid.front() = start;
    grid.back() = stop;
    return grid;
}

SweepTable run_sweep(const RunConfig& config, unsigned threads) {
    config.validate();
    const auto grid = sweep_grid(config);
    const auto& def = grid_default(config.sweep.variable);

    SweepTable table;
    table.variable = config.sweep.variable;
    table.column = def.column;
    table.both_modes = config.sweep.both_modes;
    table.rows.resize(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        RunConfig point = config;
        SweepRow row;
        try {
            apply_point(point, config.sweep.variable, grid[i], i);
            row = evaluate(point, table.both_modes);
        } catch (const Error& e) {
            row = error_row(e.what(), table.both_modes);
        }
        row.label = point_label(config.sweep.variable, grid[i], i);
        row.value = config.sweep.variable == "corner" ? kNaN : grid[i];
        table.rows[i] = std::move(row);
    });
    return table;
}

SweepTable run_point(const RunConfig& config) {
    config.validate();
    SweepTable table;
    table.variable = "vid";
    table.column = "vid_V";
    table.both_modes = config.sweep.both_modes;
    SweepRow row = evaluate(config, table.both_modes);
    if (row.status != "ok") throw Error(row.status.substr(6));
    row.label = format_number(config.vid);
    row.value = config.vid;
    table.rows.push_back(std::move(row));
    return table;
}

std::vector<std::pair<std::string, std::string>> base_metadata(const RunConfig& config,
                                                               const std::string& command) {
    std::vector<std::pair<std::string, std::string>> meta;
    meta.emplace_back("tool", kToolName);
    meta.emplace_back("version", kToolVersion);
    meta.emplace_back("command", command);
    meta.emplace_back("seed", std::to_string(config.seed));
    for (const auto& w : config.warnings) meta.emplace_back("warning", w);
    for (auto& [k, v] : resolved_entries(config)) meta.emplace_back("cfg." + k, v);
    return meta;
}

CsvDocument sweep_document(const SweepTable& table, const RunConfig& config,
                           const std::string& command) {
    CsvDocument doc;
    doc.metadata = base_metadata(config, command);
    doc.metadata.emplace_back("sweep.variable", table.variable);
    doc.metadata.emplace_back("sweep.points", std::to_string(table.rows.size()));
    if (table.variable == "vcm") doc.metadata.emplace_back("plot.yscale", "log");
    if (table.variable == "vid" || table.variable == "freq") {
        doc.metadata.emplace_back("plot.xscale", "log");
    }

    doc.header = {table.column, "t_dm_s", "t_esd_s", "power_W", "energy_J", "decision", "late"};
    if (table.both_modes) {
        doc.header.insert(doc.header.end(),
                          {"power_noshutdown_W", "energy_noshutdown_J", "savings_pct"});
    }
    doc.header.emplace_back("status");

    for (const auto& r : table.rows) {
        std::vector<std::string> cells = {r.label,
                                          format_number(r.t_dm),
                                          format_number(r.t_esd),
                                          format_number(r.power),
                                          format_number(r.energy),
                                          std::to_string(r.decision),
                                          r.late ? "1" : "0"};
        if (table.both_modes) {
            cells.push_back(format_number(r.power_noshutdown.value_or(kNaN)));
            cells.push_back(format_number(r.energy_noshutdown.value_or(kNaN)));
            cells.push_back(format_number(r.savings_pct.value_or(kNaN)));
        }
        cells.push_back(r.status);
        doc.rows.push_back(std::move(cells));
    }
    return doc;
}

SweepTable sweep_from_document(const CsvDocument& doc) {
    if (doc.header.empty()) throw ConfigError("table has no header");
    SweepTable table;
    table.variable = doc.meta("sweep.variable");
    table.column = doc.header.front();
    table.both_modes = std::find(doc.header.begin(), doc.header.end(), "savings_pct") != doc.header.end();
    const auto c_tdm = doc.column("t_dm_s");
    const auto c_tesd = doc.column("t_esd_s");
    const auto c_power = doc.column("power_W");
    const auto c_energy = doc.column("energy_J");
    const auto c_dec = doc.column("decision");
    const auto c_late = doc.column("late");
    const auto c_status = doc.column("status");
    for (const auto& cells : doc.rows) {
        if (cells.size() != doc.header.size()) throw ConfigError("ragged table row");
        SweepRow r;
        r.label = cells[0];
        r.value = table.variable == "corner" ? kNaN : parse_number(cells[0]);
        r.t_dm = parse_number(cells[c_tdm]);
        r.t_esd = parse_number(cells[c_tesd]);
        r.power = parse_number(cells[c_power]);
        r.energy = parse_number(cells[c_energy]);
        r.decision = std::stoi(cells[c_dec]);
        r.late = cells[c_late] == "1";
        r.status = cells[c_status];
        if (table.both_modes) {
            r.power_noshutdown = parse_number(cells[doc.column("power_noshutdown_W")]);
            r.energy_noshutdown = parse_number(cells[doc.column("energy_noshutdown_J")]);
            r.savings_pct = parse_number(cells[doc.column("savings_pct")]);
        }
        table.rows.push_back(std::move(r));
    }
    return table;
}

MonteCarloReport run_montecarlo(const RunConfig& config, unsigned threads) {
    config.validate();
    const Comparator engine = config.engine();
    const OperatingPoint op = config.operating_point();

    MonteCarloOptions opt;
    opt.seed = config.seed;
    opt.trials = config.trials;
    opt.mismatch = config.mismatch;
    opt.search = config.search;
    opt.bins = config.bins;
    opt.threads = threads;

    MonteCarloReport report;
    opt.calibrate = false;
    report.before = monte_carlo(engine, op, config.calibration, opt);
    if (config.calibrate) {
        opt.calibrate = true;
        report.after = monte_carlo(engine, op, config.calibration, opt);
    }
    report.pelgrom_sigma = pelgrom_pair_sigma(config.circuit.geoms, config.mismatch);
    return report;
}

CsvDocument montecarlo_document(const MonteCarloReport& report, const RunConfig& config) {
    CsvDocument doc;
    doc.metadata = base_metadata(config, "mc");
    add_stats(doc.metadata, "before", report.before, false);
    if (report.after) {
        add_stats(doc.metadata, "after", *report.after, true);
        const double ratio = report.before.sigma > 0.0 ? report.after->sigma / report.before.sigma : kNaN;
        doc.metadata.emplace_back("summary.sigma_ratio", format_number(ratio));
    }
    doc.metadata.emplace_back("summary.pelgrom_sigma_V", format_number(report.pelgrom_sigma));

    doc.header = {"phase", "bin_lo_V", "bin_hi_V", "count"};
    add_histogram_rows(doc, "before", report.before.histogram);
    if (report.after) add_histogram_rows(doc, "after", report.after->histogram);
    return doc;
}

MismatchSample calibration_mismatch(const RunConfig& config) {
    MismatchSample sample;
    if (!config.injected.empty()) {
        for (const auto& [name, m] : config.injected) sample.set(name, m);
    } else if (config.trial >= 0) {
        sample = sample_mismatch(config.seed, static_cast<std::uint64_t>(config.trial),
                                 config.circuit.geoms.devices(), config.mismatch.avt,
                                 config.mismatch.abeta);
    }
    return sample;
}

CalibrationResult run_calibrate(const RunConfig& config) {
    config.validate();
    return run_calibration(config.engine(), config.operating_point(), calibration_mismatch(config),
                           config.calibration, config.search);
}

CsvDocument calibration_document(const CalibrationResult& result, const RunConfig& config) {
    CsvDocument doc;
    doc.metadata = base_metadata(config, "calibrate");
    doc.metadata.emplace_back("result.offset_before_V", format_number(result.offset_before));
    doc.metadata.emplace_back("result.offset_after_V", format_number(result.offset_after));
    doc.metadata.emplace_back("result.residual_bound_V", format_number(result.bound));
    doc.metadata.emplace_back("result.converged", result.converged ? "true" : "false");
    doc.metadata.emplace_back("result.saturated", result.state.saturated ? "true" : "false");

    doc.header = {"phase", "cycle", "tn", "daco_V", "step_V", "s", "vb_plus_V", "vb_minus_V"};
    for (const auto& h : result.state.history) {
        doc.rows.push_back({std::to_string(h.phase), std::to_string(h.cycle), std::to_string(h.tn),
                            format_number(h.daco), format_number(h.step), std::to_string(h.s),
                            format_number(h.vb_plus), format_number(h.vb_minus)});
    }
    return doc;
}

SizeReport run_size(const RunConfig& config) {
    config.validate();
    SizeReport r;
    r.solution = solve_sizing(config.circuit.alpha, config.sizing.x_max, config.sizing.y_max,
                              config.sizing.grid_step);
    r.normalized_residual = normalized_balance_residual(r.solution);
    const Comparator engine = config.engine();
    const DeviceSet dev = engine.devices_at(config.operating_point());
    r.geometry_residual = balance_residual(node_caps(config.circuit, dev),
                                           balance_betas(config.circuit, dev), config.circuit.alpha);
    r.latch_ratio_ok = latch_ratio_holds(config.circuit.geoms);
    return r;
}

CsvDocument size_document(const SizeReport& report, const RunConfig& config) {
    CsvDocument doc;
    doc.metadata = base_metadata(config, "size");
    doc.header = {"alpha", "x", "y", "residual_norm", "balance_residual_sV", "latch_ratio_ok"};
    doc.rows.push_back({format_number(report.solution.alpha), format_number(report.solution.x),
                        format_number(report.solution.y), format_number(report.normalized_residual),
                        format_number(report.geometry_residual), report.latch_ratio_ok ? "1" : "0"});
    return doc;
}

}  // namespace dyncomp::harness
