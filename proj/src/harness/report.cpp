#include "dyncomp/harness/report.hpp"

#include <cmath>
#include <limits>

#include "dyncomp/errors.hpp"
#include "dyncomp/harness/runs.hpp"

namespace dyncomp::harness {

namespace {

bool starts_with(const std::string& s, std::string_view prefix) {
    return s.compare(0, prefix.size(), prefix) == 0;
}

double meta_number(const CsvDocument& doc, const std::string& key) {
    const std::string v = doc.meta(key);
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return parse_number(v);
}

}  // namespace

const std::vector<std::string>& report_grid_variables() {
    static const std::vector<std::string> vars = {"vid", "vcm", "vdd", "temp", "corner"};
    return vars;
}

ReportInputs run_report_inputs(const RunConfig& config, unsigned threads) {
    config.validate();
    ReportInputs in;

    RunConfig typical = config;
    typical.vid = 1e-3;
    typical.circuit.freq = config.report_freq;
    typical.sweep.both_modes = true;
    in.typical = sweep_document(run_point(typical), typical, "sim");

    for (const auto& var : report_grid_variables()) {
        RunConfig c = config;
        c.sweep = SweepSpec{};
        c.sweep.variable = var;
        c.sweep.both_modes = true;
        in.grid.push_back(sweep_document(run_sweep(c, threads), c, "sweep"));
    }

    RunConfig mc = config;
    mc.calibrate = true;
    in.montecarlo = montecarlo_document(run_montecarlo(mc, threads), mc);
    return in;
}

void save_report_inputs(const ReportInputs& inputs, const std::string& dir) {
    write_csv_file(inputs.typical, dir + "/typical.csv");
    for (const auto& doc : inputs.grid) {
        write_csv_file(doc, dir + "/sweep_" + doc.meta("sweep.variable") + ".csv");
    }
    write_csv_file(inputs.montecarlo, dir + "/mc.csv");
}

ReportInputs load_report_inputs(const std::string& dir) {
    ReportInputs in;
    in.typical = read_csv_file(dir + "/typical.csv");
    for (const auto& var : report_grid_variables()) {
        in.grid.push_back(read_csv_file(dir + "/sweep_" + var + ".csv"));
    }
    in.montecarlo = read_csv_file(dir + "/mc.csv");
    return in;
}

CsvDocument report_document(const ReportInputs& inputs) {
    const SweepTable typical = sweep_from_document(inputs.typical);
    if (typical.rows.empty()) throw ConfigError("typical-point table is empty");
    const SweepRow& tp = typical.rows.front();

    double worst = std::numeric_limits<double>::infinity();
    std::string worst_at;
    for (const auto& doc : inputs.grid) {
        const SweepTable t = sweep_from_document(doc);
        for (const auto& r : t.rows) {
            if (r.status != "ok" || !r.savings_pct || !std::isfinite(*r.savings_pct)) continue;
            if (*r.savings_pct < worst) {
                worst = *r.savings_pct;
                worst_at = t.column + "=" + r.label;
            }
        }
    }

    CsvDocument doc;
    doc.metadata.emplace_back("tool", kToolName);
    doc.metadata.emplace_back("version", kToolVersion);
    doc.metadata.emplace_back("command", "report");
    for (const auto& [k, v] : inputs.montecarlo.metadata) {
        if (k == "seed" || k == "warning" || starts_with(k, "cfg.")) doc.metadata.emplace_back(k, v);
    }

    doc.header = {"quantity", "value"};
    auto add = [&](const std::string& q, const std::string& v) { doc.rows.push_back({q, v}); };
    add("delay_vid_1mV_s", format_number(tp.t_dm));
    add("report_freq_Hz", inputs.typical.meta("cfg.freq"));
    add("power_vid_1mV_W", format_number(tp.power));
    add("energy_vid_1mV_J", format_number(tp.energy));
    add("power_savings_typical_pct", format_number(tp.savings_pct.value_or(std::nan(""))));
    add("power_savings_worst_case_pct", format_number(std::isfinite(worst) ? worst : std::nan("")));
    add("power_savings_worst_case_at", worst_at.empty() ? "none" : worst_at);
    add("offset_trials", inputs.montecarlo.meta("summary.before.n"));
    add("offset_sigma_uncalibrated_V", format_number(meta_number(inputs.montecarlo, "summary.before.sigma_V")));
    add("offset_sigma_calibrated_V", format_number(meta_number(inputs.montecarlo, "summary.after.sigma_V")));
    add("offset_sigma_ratio", format_number(meta_number(inputs.montecarlo, "summary.sigma_ratio")));
    add("offset_sigma_pelgrom_V", format_number(meta_number(inputs.montecarlo, "summary.pelgrom_sigma_V")));
    return doc;
}

CsvDocument replay(const CsvDocument& doc, unsigned threads) {
    const std::string command = doc.meta("command");
    RunConfig config = config_from_metadata(doc.metadata);
    if (command == "sim") return sweep_document(run_point(config), config, "sim");
    if (command == "sweep") return sweep_document(run_sweep(config, threads), config, "sweep");
    if (command == "mc") return montecarlo_document(run_montecarlo(config, threads), config);
    if (command == "calibrate") return calibration_document(run_calibrate(config), config);
    if (command == "size") return size_document(run_size(config), config);
    if (command == "report") return report_document(run_report_inputs(config, threads));
    throw ConfigError("cannot replay: unknown command '" + command + "'");
}

}  // namespace dyncomp::harness
