// dyncomp-sim: command-line front end for the comparator model.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dyncomp/errors.hpp"
#include "dyncomp/harness/config.hpp"
#include "dyncomp/harness/csv.hpp"
#include "dyncomp/harness/report.hpp"
#include "dyncomp/harness/runs.hpp"
#include "dyncomp/parallel.hpp"

namespace fs = std::filesystem;
using namespace dyncomp;
using namespace dyncomp::harness;

namespace {

struct Options {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out;
    std::string replay_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    bool no_shutdown = false;
    bool calibrate = false;
    bool json = false;
    unsigned threads = 0;
    std::string variable;
    std::string save_dir;
    std::string from_dir;
};

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    return out + "\"";
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool same_file(const std::string& a, const std::string& b) {
    if (a.empty() || b.empty()) return false;
    std::error_code ec;
    if (fs::exists(a, ec) && fs::exists(b, ec)) return fs::equivalent(a, b, ec);
    return fs::weakly_canonical(a, ec) == fs::weakly_canonical(b, ec);
}

RunConfig build_config(const Options& o) {
    RunConfig config;
    if (!o.config_path.empty()) config = parse_config(read_text(o.config_path));
    for (const auto& s : o.sets) apply_override(config, s);
    if (o.seed) config.seed = *o.seed;
    if (o.trials) config.trials = *o.trials;
    if (o.no_shutdown) config.circuit.early_shutdown_enabled = false;
    if (o.calibrate) config.calibrate = true;
    if (!o.variable.empty()) config.sweep.variable = o.variable;
    config.validate();
    return config;
}

void emit(const CsvDocument& doc, const Options& o) {
    for (const auto& input : {o.config_path, o.replay_path}) {
        if (same_file(o.out, input)) throw Error("refusing to overwrite input file '" + input + "'");
    }
    if (o.out.empty() || o.out == "-") {
        if (o.json) {
            std::cout << to_json(doc);
        } else {
            write_csv(doc, std::cout);
        }
        return;
    }
    write_csv_file(doc, o.out);
    if (o.json) {
        fs::path p(o.out);
        p.replace_extension(".json");
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error("cannot open '" + p.string() + "' for writing");
        out << to_json(doc);
        if (!out) throw Error("write failed for '" + p.string() + "'");
    }
}

CsvDocument run_command(const std::string& command, const Options& o) {
    const unsigned threads = o.threads == 0 ? default_threads() : o.threads;
    if (!o.replay_path.empty()) {
        const CsvDocument recorded = read_csv_file(o.replay_path);
        if (recorded.meta("command") != command) {
            throw ConfigError("replay file was produced by '" + recorded.meta("command") + "'");
        }
        return replay(recorded, threads);
    }
    if (command == "report" && !o.from_dir.empty()) {
        return report_document(load_report_inputs(o.from_dir));
    }

    const RunConfig config = build_config(o);
    if (command == "sim") return sweep_document(run_point(config), config, "sim");
    if (command == "sweep") return sweep_document(run_sweep(config, threads), config, "sweep");
    if (command == "mc") return montecarlo_document(run_montecarlo(config, threads), config);
    if (command == "calibrate") return calibration_document(run_calibrate(config), config);
    if (command == "size") return size_document(run_size(config), config);

    const ReportInputs inputs = run_report_inputs(config, threads);
    if (!o.save_dir.empty()) {
        fs::create_directories(o.save_dir);
        save_report_inputs(inputs, o.save_dir);
    }
    return report_document(inputs);
}

int fail(const std::string& kind, const std::string& message, const std::string& extra = {}) {
    std::cerr << "error: kind=" << kind << extra << " message=" << quote(message) << '\n';
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Behavioral simulator for an early-shutdown double-tail comparator", "dyncomp-sim"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    Options o;
    auto common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "Sectioned key=value configuration file");
        sub->add_option("--set", o.sets, "Override one key (key=value); repeatable");
        sub->add_option("--out", o.out, "Output CSV path (stdout when omitted)");
        sub->add_option("--seed", o.seed, "Mismatch seed");
        sub->add_flag("--no-shutdown", o.no_shutdown, "Disable the early-shutdown path");
        sub->add_flag("--json", o.json, "Also write a JSON mirror (replaces CSV on stdout)");
        sub->add_option("--threads", o.threads, "Worker threads (0 = hardware concurrency)");
        sub->add_option("--replay", o.replay_path, "Re-run from the metadata of an earlier output");
    };

    auto* sim = app.add_subcommand("sim", "Single comparison at the configured operating point");
    auto* sweep = app.add_subcommand("sweep", "Parameter sweep");
    auto* mc = app.add_subcommand("mc", "Monte Carlo offset statistics");
    auto* cal = app.add_subcommand("calibrate", "Offset-cancellation loop for one mismatch instance");
    auto* size = app.add_subcommand("size", "Power-delay balance sizing");
    auto* report = app.add_subcommand("report", "Summary of delay, power, savings and offset");
    for (auto* sub : {sim, sweep, mc, cal, size, report}) common(sub);

    sweep->add_option("--variable", o.variable, "Swept quantity")
        ->check(CLI::IsMember(sweep_variables()));
    for (auto* sub : {mc, report}) sub->add_option("--trials", o.trials, "Monte Carlo trials");
    mc->add_flag("--calibrate", o.calibrate, "Also run the calibrated pass");
    report->add_option("--save-dir", o.save_dir, "Directory for the tables behind the report");
    report->add_option("--from", o.from_dir, "Regenerate the report from saved tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what());
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        emit(run_command(command, o), o);
    } catch (const ParseError& e) {
        return fail("parse", e.what(), " line=" + std::to_string(e.line()));
    } catch (const RangeError& e) {
        return fail("range", e.what(), " key=" + e.key());
    } catch (const ConfigError& e) {
        return fail("config", e.what());
    } catch (const Error& e) {
        return fail("runtime", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return 0;
}
