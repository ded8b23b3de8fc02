#pragma once

// Run configuration for the command-line harness.
//
// Text format: optional `[section]` headers followed by `key = value` lines.
// Blank lines and lines starting with '#' or ';' are ignored. Keys are unique
// across sections; a key placed under the wrong section is rejected. Duplicate
// keys keep the last value and leave a warning in the output metadata.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dyncomp/calibration.hpp"
#include "dyncomp/comparator.hpp"

namespace dyncomp::harness {

enum class SweepScale { linear, log };

struct SweepSpec {
    std::string variable = "vid";
    std::optional<double> start;
    std::optional<double> stop;
    std::optional<int> points;
    std::optional<SweepScale> scale;
    bool both_modes = true;
};

struct SizingSpec {
    double x_max = 4.0;
    double y_max = 4.0;
    double grid_step = 0.01;
};

struct RunConfig {
    DeviceSet devices;
    TemperatureModel temperature;
    MismatchModel mismatch;
    ComparatorConfig circuit;

    double vid = 50e-3;
    std::optional<double> vcm;  // vdd/2 when unset
    Corner corner = Corner::TT;
    double temp_c = 27.0;

    CalibrationConfig calibration;
    OffsetSearch search;
    SweepSpec sweep;
    SizingSpec sizing;

    std::uint64_t seed = 1;
    std::size_t trials = 500;
    bool calibrate = false;
    std::size_t bins = 25;
    double report_freq = 500e6;
    /// Mismatch trial used by `calibrate`; negative means no sampled mismatch.
    long long trial = -1;
    std::map<std::string, DeviceMismatch> injected;

    std::vector<std::string> warnings;

    /// Typical operating point for the configured supply.
    OperatingPoint operating_point() const;
    Comparator engine() const;

    /// Throws RangeError naming the violated key.
    void validate() const;
};

/// Parses configuration text on top of the defaults.
RunConfig parse_config(std::string_view text);

/// Applies `key=value` text (as given to --set) to an existing configuration.
void apply_override(RunConfig& config, std::string_view assignment);

/// Sets a single key. Throws ConfigError for unknown keys or malformed values.
void set_key(RunConfig& config, const std::string& key, const std::string& value);

/// Every key with its canonical value, in a fixed order. Feeding these back through
/// set_key reproduces the configuration exactly.
std::vector<std::pair<std::string, std::string>> resolved_entries(const RunConfig& config);

/// Rebuilds a configuration from emitted metadata (`cfg.<key>` and `warning` entries).
RunConfig config_from_metadata(const std::vector<std::pair<std::string, std::string>>& metadata);

/// Shortest text that parses back to the same double.
std::string canonical_number(double v);

}  // namespace dyncomp::harness
