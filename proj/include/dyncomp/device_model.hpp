#pragma once

// Square-law MOSFET model with body effect, PVT adjustment and Pelgrom
// mismatch sampling. Threshold voltages use the magnitude convention for both
// polarities so every vth in the model is positive.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dyncomp {

enum class Polarity { nmos, pmos };

std::string_view to_string(Polarity p);

struct DeviceParams {
    Polarity polarity = Polarity::nmos;
    double mu_cox = 0.0;    // A/V^2
    double vth0 = 0.0;      // V, magnitude
    double gamma = 0.0;     // V^0.5
    double phi2f = 0.0;     // V
    double cox_area = 0.0;  // F/m^2

    /// Throws RangeError naming the first violated field.
    void validate() const;
};

/// Generic 0.18 um defaults: NMOS mu_cox 300 uA/V^2, PMOS 150 uA/V^2.
DeviceParams default_nmos();
DeviceParams default_pmos();

/// Both polarities after corner/temperature adjustment.
struct DeviceSet {
    DeviceParams nmos = default_nmos();
    DeviceParams pmos = default_pmos();

    const DeviceParams& of(Polarity p) const { return p == Polarity::nmos ? nmos : pmos; }
};

inline constexpr double kMinWidth = 0.22e-6;
inline constexpr double kMinLength = 0.18e-6;

struct TransistorGeom {
    std::string name;
    double w = kMinWidth;
    double l = kMinLength;
    Polarity polarity = Polarity::nmos;

    void validate(double min_w = kMinWidth, double min_l = kMinLength) const;
};

enum class Corner { TT, FF, SS, FS, SF };

std::string_view to_string(Corner c);
Corner parse_corner(std::string_view name);

struct CornerSpec {
    Corner name = Corner::TT;
    double mu_factor_n = 1.0;
    double mu_factor_p = 1.0;
    double vth_shift_n = 0.0;  // V
    double vth_shift_p = 0.0;  // V
};

/// Default corner table: fast = (mu x1.1, vth -30 mV), slow = (mu x0.9, vth +30 mV).
/// The first letter of FS/SF is the NMOS corner.
CornerSpec corner_spec(Corner c);

struct TemperatureModel {
    double t_ref = 300.0;        // K
    double mu_exponent = -1.5;   // mu ~ (T/t_ref)^mu_exponent
    double vth_tempco = 2.0e-3;  // V/K, vth drops by this per kelvin above t_ref
};

struct MismatchModel {
    double avt = 5.0e-9;     // V*m   (5 mV*um)
    double abeta = 1.0e-8;   // m     (1 %*um)
};

struct DeviceMismatch {
    double delta_vth = 0.0;       // V
    double delta_beta_rel = 0.0;  // dimensionless

    bool operator==(const DeviceMismatch&) const = default;
};

/// Per-transistor deviations for one Monte Carlo trial. Absent names read as zero,
/// so a default-constructed sample is the zero sample.
class MismatchSample {
public:
    MismatchSample() = default;

    DeviceMismatch at(std::string_view name) const;
    void set(const std::string& name, DeviceMismatch m) { deltas_[name] = m; }
    const std::map<std::string, DeviceMismatch, std::less<>>& entries() const { return deltas_; }

    friend bool operator==(const MismatchSample&, const MismatchSample&) = default;

private:
    std::map<std::string, DeviceMismatch, std::less<>> deltas_;
};

double beta(const TransistorGeom& geom, const DeviceParams& params);

/// vth0 + gamma*(sqrt(phi2f + vsb) - sqrt(phi2f)) + delta_vth.
/// Negative vsb (forward body bias) lowers the threshold; throws DomainError
/// once phi2f + vsb <= 0.
double threshold(const DeviceParams& params, double vsb, double delta_vth = 0.0);

/// d(threshold)/d(vsb).
double threshold_slope(const DeviceParams& params, double vsb);

double gate_cap(const TransistorGeom& geom, const DeviceParams& params);

DeviceParams apply_corner(const DeviceParams& params, const CornerSpec& corner);
DeviceParams apply_temperature(const DeviceParams& params, double t_kelvin,
                               const TemperatureModel& model = {});

DeviceSet resolve_devices(const DeviceSet& nominal, const CornerSpec& corner, double t_kelvin,
                          const TemperatureModel& model = {});

/// Pelgrom sampling, sigma = A/sqrt(w*l). Devices are visited in name order and the
/// generator is seeded from (seed, trial) only, so the result is a pure function of
/// those two integers and the geometry set.
MismatchSample sample_mismatch(std::uint64_t seed, std::uint64_t trial,
                               std::span<const TransistorGeom> geoms, double avt, double abeta);

}  // namespace dyncomp
