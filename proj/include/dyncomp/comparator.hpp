#pragma once

// Behavioral model of the early-shutdown double-tail comparator.
//
// Naming follows the schematic labels. Mp4 (gate Vi-) charges Out-, Mp5 (gate Vi+)
// charges Out+. Out- drives the latch input Mn3 and the shutdown inverter Mni2;
// Out+ drives Mn4 and Mni3. A decision of +1 means Out- led, so Vo- fell and Vo+
// stays high.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dyncomp/device_model.hpp"

namespace dyncomp {

class GeometrySet {
public:
    GeometrySet() = default;
    explicit GeometrySet(std::vector<TransistorGeom> devices) : devices_(std::move(devices)) {}

    /// Throws ConfigError when `name` is not part of the set.
    const TransistorGeom& at(std::string_view name) const;
    TransistorGeom& at(std::string_view name);
    bool contains(std::string_view name) const;

    const std::vector<TransistorGeom>& devices() const { return devices_; }

    void validate() const;

private:
    std::vector<TransistorGeom> devices_;
};

/// Table of sized devices for the proposed circuit; every length is 0.18 um.
GeometrySet default_geometry();

/// Names every device the engine reads. Missing any of them is a configuration error.
const std::vector<std::string>& required_device_names();

struct NodeLoads {
    double out = 0.0;    // F, added to each preamp output
    double pi = 0.0;     // F, first-inverter output
    double p3 = 0.0;     // F, tail-switch gate
    double latch = 0.0;  // F, latch output
};

struct ComparatorConfig {
    GeometrySet geoms = default_geometry();
    double vdd = 1.8;
    double freq = 333e6;
    double alpha = 1.5;
    NodeLoads extra_load;
    bool early_shutdown_enabled = true;
    /// Fractional tail-current loss across the parallel Mp2/Mp3 switches in triode.
    double tail_derate = 0.05;
    /// Decision reported when both outputs cross at exactly the same instant.
    int tie_break = +1;

    void validate() const;
    /// Comparison phase length, half a clock period.
    double window() const { return 0.5 / freq; }
};

inline constexpr double kTypicalKelvin = 300.15;  // 27 C

struct OperatingPoint {
    double vid = 50e-3;
    double vcm = 0.9;
    CornerSpec corner{};
    double t_kelvin = kTypicalKelvin;
    std::optional<double> vdd_override;

    double vdd(const ComparatorConfig& config) const { return vdd_override.value_or(config.vdd); }
    void validate(double vdd) const;
};

struct NodeCaps {
    double c_out = 0.0;       // Out- node: C(Mn3) + C(Mni2) + extra
    double c_out_plus = 0.0;  // Out+ node: C(Mn4) + C(Mni3) + extra
    double c_pi = 0.0;        // INV_n output: C(Mpi1) + extra
    double c_p3 = 0.0;        // INV_p output: one tail-switch gate + extra
    double c_latch = 0.0;     // C(Mp8) + C(Mn6) + extra
};

NodeCaps node_caps(const ComparatorConfig& config, const DeviceSet& dev);

/// vb_plus biases Mp5 (the Out+ side), vb_minus biases Mp4 (the Out- side).
struct BodyBias {
    double vb_plus = 0.0;
    double vb_minus = 0.0;
};

struct InputPair {
    double vth_mp4 = 0.0;
    double vth_mp5 = 0.0;
    double beta_mp4 = 0.0;
    double beta_mp5 = 0.0;
};

/// Input-pair thresholds and gains including mismatch and the body shift
/// (vsb = vb - vdd, source tied to the tail node at vdd).
InputPair input_pair(const ComparatorConfig& config, const DeviceSet& dev, double vdd,
                     const MismatchSample& mismatch, const BodyBias& body);

/// Saturated Mp1 current, derated by the series switches; zero when vdd <= |vthp|.
double tail_current(const OperatingPoint& op, const ComparatorConfig& config, const DeviceSet& dev,
                    const MismatchSample& mismatch = {});

struct BranchCurrents {
    double out_minus = 0.0;  // through Mp4, gate at vcm - vid/2
    double out_plus = 0.0;   // through Mp5, gate at vcm + vid/2
};

/// Square-law currents of the input pair. When they would exceed the tail current,
/// the shared source node drops by the amount that makes the sum equal i_tail.
BranchCurrents branch_currents(const OperatingPoint& op, double vdd, const InputPair& pair,
                               double i_tail);

namespace timing {

/// Preamp ramp time to vthn: 2*vthn*c_load / (beta_p*(vdd - v_gate - vthp)^2).
double t1_analytic(double vthn, double c_load, double beta_p, double vdd, double v_gate,
                   double vthp);
double t_inv_n(double c_pi, double beta_n, double vdd);
double t_inv_p(double c_p3, double beta_p, double vdd, double alpha);
double t_latch(double c_latch, double beta_n3, double vdd);

}  // namespace timing

/// Closed-form timing at zero mismatch and zero body bias, evaluated on the leading side.
struct AnalyticTiming {
    double t1 = 0.0;
    double t_inv_n = 0.0;
    double t_inv_p = 0.0;
    double t_esd = 0.0;
    double t_latch = 0.0;
    double t_dm = 0.0;
};

AnalyticTiming analytic_timing(const OperatingPoint& op, const ComparatorConfig& config,
                               const DeviceSet& dev);

struct EnergyBreakdown {
    double e_preamp = 0.0;
    double e_latch = 0.0;
    double e_ddvb = 0.0;
    double e_reset = 0.0;
    double total = 0.0;
};

struct ComparisonResult {
    int decision = +1;
    double t0 = 0.0;
    double t1 = 0.0;
    double t_esd = 0.0;
    double t_dm = 0.0;
    bool shutdown_occurred = false;
    /// Decision after the comparison window, or the tail was cut before the latch input turned on.
    bool late = false;
    bool stalled = false;
    double i_tail = 0.0;
    BranchCurrents currents;
    EnergyBreakdown energy;

    double power(double freq) const { return energy.total * freq; }
};

/// One precharge + comparison cycle with the ramp model. `dev` must already carry the
/// operating point's corner and temperature. Body defaults to (vdd, vdd).
ComparisonResult simulate_comparison(const OperatingPoint& op, const ComparatorConfig& config,
                                     const DeviceSet& dev, const MismatchSample& mismatch = {},
                                     std::optional<BodyBias> body = std::nullopt);

EnergyBreakdown energy_per_comparison(const ComparisonResult& result, const OperatingPoint& op,
                                      const ComparatorConfig& config, const DeviceSet& dev);

/// Engine bound to a configuration and nominal technology. Immutable; safe to share
/// across threads.
class Comparator {
public:
    explicit Comparator(ComparatorConfig config, DeviceSet nominal = {},
                        TemperatureModel temperature = {});

    const ComparatorConfig& config() const { return config_; }
    const DeviceSet& nominal_devices() const { return nominal_; }
    const TemperatureModel& temperature_model() const { return temperature_; }

    DeviceSet devices_at(const OperatingPoint& op) const;

    ComparisonResult simulate(const OperatingPoint& op, const MismatchSample& mismatch = {},
                              std::optional<BodyBias> body = std::nullopt) const;

    Comparator with_shutdown(bool enabled) const;

private:
    ComparatorConfig config_;
    DeviceSet nominal_;
    TemperatureModel temperature_;
};

}  // namespace dyncomp
