#include "dyncomp/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <set>
#include <sstream>

#include "dyncomp/errors.hpp"
#include "dyncomp/sizing.hpp"

namespace dyncomp::harness {

namespace {

constexpr double kCelsiusOffset = 273.15;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ConfigError(key + ": expected a number, got '" + text + "'");
    }
    return v;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& text) {
    Int v{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ConfigError(key + ": expected an integer, got '" + text + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "off" || text == "no") return false;
    throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string optional_text(const std::optional<double>& v) {
    return v ? canonical_number(*v) : std::string("auto");
}

std::optional<double> parse_optional(const std::string& key, const std::string& text) {
    if (text == "auto") return std::nullopt;
    return parse_double(key, text);
}

std::string list_text(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += canonical_number(values[i]);
    }
    return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    if (out.empty()) throw ConfigError(key + ": expected a comma-separated list");
    return out;
}

struct KeyDef {
    std::string name;
    std::string section;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class Field>
KeyDef number_key(std::string name, std::string section, Field field) {
    return {std::move(name), std::move(section),
            [field](RunConfig& c, const std::string& k, const std::string& v) {
                field(c) = parse_double(k, v);
            },
            [field](const RunConfig& c) {
                return canonical_number(field(const_cast<RunConfig&>(c)));
            }};
}

void add_device_keys(std::vector<KeyDef>& keys, const std::string& prefix,
                     DeviceParams DeviceSet::*member) {
    auto p = [member](RunConfig& c) -> DeviceParams& { return c.devices.*member; };
    keys.push_back(number_key(prefix + ".mu_cox", "device", [p](RunConfig& c) -> double& { return p(c).mu_cox; }));
    keys.push_back(number_key(prefix + ".vth0", "device", [p](RunConfig& c) -> double& { return p(c).vth0; }));
    keys.push_back(number_key(prefix + ".gamma", "device", [p](RunConfig& c) -> double& { return p(c).gamma; }));
    keys.push_back(number_key(prefix + ".phi2f", "device", [p](RunConfig& c) -> double& { return p(c).phi2f; }));
    keys.push_back(number_key(prefix + ".cox_area", "device", [p](RunConfig& c) -> double& { return p(c).cox_area; }));
}

std::string scale_text(const std::optional<SweepScale>& s) {
    if (!s) return "auto";
    return *s == SweepScale::log ? "log" : "linear";
}

const std::vector<KeyDef>& static_keys() {
    static const std::vector<KeyDef> keys = [] {
        std::vector<KeyDef> k;
        add_device_keys(k, "nmos", &DeviceSet::nmos);
        add_device_keys(k, "pmos", &DeviceSet::pmos);
        k.push_back(number_key("t_ref", "device", [](RunConfig& c) -> double& { return c.temperature.t_ref; }));
        k.push_back(number_key("mu_temp_exponent", "device", [](RunConfig& c) -> double& { return c.temperature.mu_exponent; }));
        k.push_back(number_key("vth_tempco", "device", [](RunConfig& c) -> double& { return c.temperature.vth_tempco; }));
        k.push_back(number_key("avt", "device", [](RunConfig& c) -> double& { return c.mismatch.avt; }));
        k.push_back(number_key("abeta", "device", [](RunConfig& c) -> double& { return c.mismatch.abeta; }));

        k.push_back(number_key("vdd", "circuit", [](RunConfig& c) -> double& { return c.circuit.vdd; }));
        k.push_back(number_key("freq", "circuit", [](RunConfig& c) -> double& { return c.circuit.freq; }));
        k.push_back(number_key("alpha", "circuit", [](RunConfig& c) -> double& { return c.circuit.alpha; }));
        k.push_back(number_key("tail_derate", "circuit", [](RunConfig& c) -> double& { return c.circuit.tail_derate; }));
        k.push_back({"tie_break", "circuit",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.circuit.tie_break = parse_int<int>(key, v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.circuit.tie_break); }});
        k.push_back({"early_shutdown", "circuit",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.circuit.early_shutdown_enabled = parse_bool(key, v);
                     },
                     [](const RunConfig& c) { return bool_text(c.circuit.early_shutdown_enabled); }});
        k.push_back(number_key("extra_load.out", "circuit", [](RunConfig& c) -> double& { return c.circuit.extra_load.out; }));
        k.push_back(number_key("extra_load.pi", "circuit", [](RunConfig& c) -> double& { return c.circuit.extra_load.pi; }));
        k.push_back(number_key("extra_load.p3", "circuit", [](RunConfig& c) -> double& { return c.circuit.extra_load.p3; }));
        k.push_back(number_key("extra_load.latch", "circuit", [](RunConfig& c) -> double& { return c.circuit.extra_load.latch; }));

        k.push_back(number_key("vid", "operating", [](RunConfig& c) -> double& { return c.vid; }));
        k.push_back({"vcm", "operating",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.vcm = parse_optional(key, v);
                     },
                     [](const RunConfig& c) { return optional_text(c.vcm); }});
        k.push_back({"corner", "operating",
                     [](RunConfig& c, const std::string&, const std::string& v) {
                         c.corner = parse_corner(v);
                     },
                     [](const RunConfig& c) { return std::string(to_string(c.corner)); }});
        k.push_back(number_key("temp_c", "operating", [](RunConfig& c) -> double& { return c.temp_c; }));

        k.push_back({"n_cycles", "calibration",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.calibration.n_cycles = parse_int<int>(key, v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.calibration.n_cycles); }});
        k.push_back(number_key("cb", "calibration", [](RunConfig& c) -> double& { return c.calibration.cb; }));
        k.push_back(number_key("c0", "calibration", [](RunConfig& c) -> double& { return c.calibration.c0; }));
        k.push_back({"dac_caps", "calibration",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.calibration.dac_caps = parse_list(key, v);
                     },
                     [](const RunConfig& c) { return list_text(c.calibration.dac_caps); }});
        k.push_back(number_key("cp_beta", "calibration", [](RunConfig& c) -> double& { return c.calibration.cp_beta; }));
        k.push_back(number_key("cp_vthn", "calibration", [](RunConfig& c) -> double& { return c.calibration.cp_vthn; }));
        k.push_back(number_key("t_period", "calibration", [](RunConfig& c) -> double& { return c.calibration.t_period; }));
        k.push_back({"v_ref_input", "calibration",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.calibration.v_ref_input = parse_optional(key, v);
                     },
                     [](const RunConfig& c) { return optional_text(c.calibration.v_ref_input); }});
        k.push_back({"phases", "calibration",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.calibration.phases = parse_int<int>(key, v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.calibration.phases); }});
        k.push_back(number_key("tol_os", "calibration", [](RunConfig& c) -> double& { return c.search.tol; }));
        k.push_back(number_key("v_span", "calibration", [](RunConfig& c) -> double& { return c.search.span; }));

        k.push_back({"variable", "sweep",
                     [](RunConfig& c, const std::string&, const std::string& v) { c.sweep.variable = v; },
                     [](const RunConfig& c) { return c.sweep.variable; }});
        k.push_back({"start", "sweep",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.sweep.start = parse_optional(key, v);
                     },
                     [](const RunConfig& c) { return optional_text(c.sweep.start); }});
        k.push_back({"stop", "sweep",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.sweep.stop = parse_optional(key, v);
                     },
                     [](const RunConfig& c) { return optional_text(c.sweep.stop); }});
        k.push_back({"points", "sweep",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         if (v == "auto") {
                             c.sweep.points.reset();
                         } else {
                             c.sweep.points = parse_int<int>(key, v);
                         }
                     },
                     [](const RunConfig& c) {
                         return c.sweep.points ? std::to_string(*c.sweep.points) : std::string("auto");
                     }});
        k.push_back({"scale", "sweep",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         if (v == "auto") {
                             c.sweep.scale.reset();
                         } else if (v == "linear") {
                             c.sweep.scale = SweepScale::linear;
                         } else if (v == "log") {
                             c.sweep.scale = SweepScale::log;
                         } else {
                             throw ConfigError(key + ": expected linear, log or auto");
                         }
                     },
                     [](const RunConfig& c) { return scale_text(c.sweep.scale); }});
        k.push_back({"both_modes", "sweep",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.sweep.both_modes = parse_bool(key, v);
                     },
                     [](const RunConfig& c) { return bool_text(c.sweep.both_modes); }});

        k.push_back(number_key("x_max", "sizing", [](RunConfig& c) -> double& { return c.sizing.x_max; }));
        k.push_back(number_key("y_max", "sizing", [](RunConfig& c) -> double& { return c.sizing.y_max; }));
        k.push_back(number_key("grid_step", "sizing", [](RunConfig& c) -> double& { return c.sizing.grid_step; }));

        k.push_back({"seed", "run",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.seed = parse_int<std::uint64_t>(key, v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.seed); }});
        k.push_back({"trials", "run",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.trials = parse_int<std::size_t>(key, v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.trials); }});
        k.push_back({"calibrate", "run",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.calibrate = parse_bool(key, v);
                     },
                     [](const RunConfig& c) { return bool_text(c.calibrate); }});
        k.push_back({"bins", "run",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.bins = parse_int<std::size_t>(key, v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.bins); }});
        k.push_back(number_key("report_freq", "run", [](RunConfig& c) -> double& { return c.report_freq; }));
        k.push_back({"trial", "run",
                     [](RunConfig& c, const std::string& key, const std::string& v) {
                         c.trial = parse_int<long long>(key, v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.trial); }});
        return k;
    }();
    return keys;
}

const KeyDef* find_static(const std::string& key) {
    for (const auto& d : static_keys()) {
        if (d.name == key) return &d;
    }
    return nullptr;
}

bool starts_with(const std::string& s, std::string_view prefix) {
    return s.compare(0, prefix.size(), prefix) == 0;
}

/// Section owning a key, or empty when the key is unknown.
std::string section_of(const std::string& key) {
    if (const auto* d = find_static(key)) return d->section;
    if (starts_with(key, "w.") || starts_with(key, "l.")) return "geometry";
    if (starts_with(key, "inject.dvth.") || starts_with(key, "inject.dbeta.")) return "inject";
    return {};
}

TransistorGeom& geometry_entry(RunConfig& c, const std::string& key) {
    const std::string name = key.substr(2);
    if (!c.circuit.geoms.contains(name)) throw ConfigError("unknown key '" + key + "'");
    return c.circuit.geoms.at(name);
}

}  // namespace

std::string canonical_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

OperatingPoint RunConfig::operating_point() const {
    OperatingPoint op;
    op.vid = vid;
    op.vcm = vcm.value_or(0.5 * circuit.vdd);
    op.corner = corner_spec(corner);
    op.t_kelvin = temp_c + kCelsiusOffset;
    return op;
}

Comparator RunConfig::engine() const { return Comparator(circuit, devices, temperature); }

void RunConfig::validate() const {
    for (const auto& [prefix, params] : {std::pair{"nmos.", &devices.nmos}, std::pair{"pmos.", &devices.pmos}}) {
        try {
            params->validate();
        } catch (const RangeError& e) {
            throw RangeError(prefix + e.key(), std::string(e.what()).substr(e.key().size() + 2));
        }
    }
    if (!(temperature.t_ref > 0.0)) throw RangeError("t_ref", "must be > 0");
    if (!(temperature.vth_tempco >= 0.0)) throw RangeError("vth_tempco", "must be >= 0");
    if (!(mismatch.avt >= 0.0)) throw RangeError("avt", "must be >= 0");
    if (!(mismatch.abeta >= 0.0)) throw RangeError("abeta", "must be >= 0");
    circuit.validate();
    if (!(temp_c + kCelsiusOffset > 0.0)) throw RangeError("temp_c", "must be above absolute zero");
    operating_point().validate(circuit.vdd);
    calibration.validate();
    if (!(search.tol > 0.0)) throw RangeError("tol_os", "must be > 0");
    if (!(search.span > search.tol)) throw RangeError("v_span", "must exceed tol_os");
    if (sweep.points && *sweep.points < 2) throw RangeError("points", "must be >= 2 for a sweep");
    if (!(sizing.x_max >= 1.0)) throw RangeError("x_max", "must be >= 1");
    if (!(sizing.y_max >= 1.0)) throw RangeError("y_max", "must be >= 1");
    if (!(sizing.grid_step > 0.0)) throw RangeError("grid_step", "must be > 0");
    if (trials < 1) throw RangeError("trials", "must be >= 1");
    if (bins < 1) throw RangeError("bins", "must be >= 1");
    if (!(report_freq > 0.0)) throw RangeError("report_freq", "must be > 0");
    for (const auto& [name, m] : injected) {
        if (!circuit.geoms.contains(name)) {
            throw RangeError("inject.dvth." + name, "no such device");
        }
        if (!(m.delta_beta_rel > -1.0)) {
            throw RangeError("inject.dbeta." + name, "must be > -1");
        }
    }
}

void set_key(RunConfig& config, const std::string& key, const std::string& value) {
    if (const auto* d = find_static(key)) {
        try {
            d->set(config, key, value);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(key + ": " + e.what());
        }
        return;
    }
    if (starts_with(key, "w.")) {
        geometry_entry(config, key).w = parse_double(key, value);
    } else if (starts_with(key, "l.")) {
        geometry_entry(config, key).l = parse_double(key, value);
    } else if (starts_with(key, "inject.dvth.")) {
        config.injected[key.substr(12)].delta_vth = parse_double(key, value);
    } else if (starts_with(key, "inject.dbeta.")) {
        config.injected[key.substr(13)].delta_beta_rel = parse_double(key, value);
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

RunConfig parse_config(std::string_view text) {
    RunConfig config;
    std::string section;
    std::map<std::string, int> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            static const std::set<std::string> sections = {
                "device", "circuit", "geometry", "operating", "calibration",
                "sweep", "sizing", "run", "inject"};
            if (!sections.contains(section)) {
                throw ParseError(line_no, "unknown section '" + section + "'");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "missing key before '='");
        if (value.empty()) throw ParseError(line_no, "missing value for '" + key + "'");

        const std::string owner = section_of(key);
        if (owner.empty()) throw ParseError(line_no, "unknown key '" + key + "'");
        if (!section.empty() && owner != section) {
            throw ParseError(line_no, "key '" + key + "' belongs to section [" + owner + "]");
        }
        if (auto it = seen.find(key); it != seen.end()) {
            config.warnings.push_back("duplicate key '" + key + "' at line " +
                                      std::to_string(line_no) + " overrides line " +
                                      std::to_string(it->second));
        }
        seen[key] = line_no;
        try {
            set_key(config, key, value);
        } catch (const ConfigError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return config;
}

void apply_override(RunConfig& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    }
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    if (key.empty() || value.empty()) {
        throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    }
    set_key(config, key, value);
}

std::vector<std::pair<std::string, std::string>> resolved_entries(const RunConfig& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& d : static_keys()) out.emplace_back(d.name, d.get(config));
    for (const auto& g : config.circuit.geoms.devices()) {
        out.emplace_back("w." + g.name, canonical_number(g.w));
        out.emplace_back("l." + g.name, canonical_number(g.l));
    }
    for (const auto& [name, m] : config.injected) {
        out.emplace_back("inject.dvth." + name, canonical_number(m.delta_vth));
        out.emplace_back("inject.dbeta." + name, canonical_number(m.delta_beta_rel));
    }
    return out;
}

RunConfig config_from_metadata(const std::vector<std::pair<std::string, std::string>>& metadata) {
    RunConfig config;
    for (const auto& [key, value] : metadata) {
        if (starts_with(key, "cfg.")) {
            set_key(config, key.substr(4), value);
        } else if (key == "warning") {
            config.warnings.push_back(value);
        }
    }
    return config;
}

}  // namespace dyncomp::harness
