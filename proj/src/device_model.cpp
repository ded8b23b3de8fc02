#include "dyncomp/device_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dyncomp/errors.hpp"

namespace dyncomp {

std::string_view to_string(Polarity p) { return p == Polarity::nmos ? "nmos" : "pmos"; }

void DeviceParams::validate() const {
    if (!(mu_cox > 0.0)) throw RangeError("mu_cox", "must be > 0");
    if (!(vth0 > 0.0)) throw RangeError("vth0", "must be > 0 (magnitude convention)");
    if (!(gamma >= 0.0)) throw RangeError("gamma", "must be >= 0");
    if (!(phi2f > 0.0)) throw RangeError("phi2f", "must be > 0");
    if (!(cox_area > 0.0)) throw RangeError("cox_area", "must be > 0");
}

DeviceParams default_nmos() {
    return {Polarity::nmos, 300e-6, 0.45, 0.4, 0.7, 8.5e-3};
}

DeviceParams default_pmos() {
    return {Polarity::pmos, 150e-6, 0.45, 0.4, 0.7, 8.5e-3};
}

void TransistorGeom::validate(double min_w, double min_l) const {
    // Small relative slack so values typed in microns (0.22e-6) are not rejected by rounding.
    if (!(w >= min_w * (1.0 - 1e-9))) throw RangeError("w." + name, "below minimum width");
    if (!(l >= min_l * (1.0 - 1e-9))) throw RangeError("l." + name, "below minimum length");
}

std::string_view to_string(Corner c) {
    switch (c) {
        case Corner::TT: return "TT";
        case Corner::FF: return "FF";
        case Corner::SS: return "SS";
        case Corner::FS: return "FS";
        case Corner::SF: return "SF";
    }
    return "TT";
}

Corner parse_corner(std::string_view name) {
    for (Corner c : {Corner::TT, Corner::FF, Corner::SS, Corner::FS, Corner::SF}) {
        if (to_string(c) == name) return c;
    }
    throw ConfigError("unknown process corner '" + std::string(name) + "'");
}

CornerSpec corner_spec(Corner c) {
    constexpr double fast_mu = 1.1, slow_mu = 0.9, shift = 30e-3;
    switch (c) {
        case Corner::TT: return {c, 1.0, 1.0, 0.0, 0.0};
        case Corner::FF: return {c, fast_mu, fast_mu, -shift, -shift};
        case Corner::SS: return {c, slow_mu, slow_mu, shift, shift};
        case Corner::FS: return {c, fast_mu, slow_mu, -shift, shift};
        case Corner::SF: return {c, slow_mu, fast_mu, shift, -shift};
    }
    return {};
}

DeviceMismatch MismatchSample::at(std::string_view name) const {
    auto it = deltas_.find(name);
    return it == deltas_.end() ? DeviceMismatch{} : it->second;
}

double beta(const TransistorGeom& geom, const DeviceParams& params) {
    return params.mu_cox * geom.w / geom.l;
}

double threshold(const DeviceParams& params, double vsb, double delta_vth) {
    const double surface = params.phi2f + vsb;
    if (!(surface > 0.0)) {
        throw DomainError("body forward-biased beyond model validity (phi2f + vsb = " +
                          std::to_string(surface) + " V)");
    }
    return params.vth0 + params.gamma * (std::sqrt(surface) - std::sqrt(params.phi2f)) +
           delta_vth;
}

double threshold_slope(const DeviceParams& params, double vsb) {
    const double surface = params.phi2f + vsb;
    if (!(surface > 0.0)) throw DomainError("body forward-biased beyond model validity");
    return params.gamma / (2.0 * std::sqrt(surface));
}

double gate_cap(const TransistorGeom& geom, const DeviceParams& params) {
    return params.cox_area * geom.w * geom.l;
}

DeviceParams apply_corner(const DeviceParams& params, const CornerSpec& corner) {
    if (corner.name == Corner::TT && corner.mu_factor_n == 1.0 && corner.mu_factor_p == 1.0 &&
        corner.vth_shift_n == 0.0 && corner.vth_shift_p == 0.0) {
        return params;
    }
    const bool n = params.polarity == Polarity::nmos;
    DeviceParams out = params;
    out.mu_cox *= n ? corner.mu_factor_n : corner.mu_factor_p;
    out.vth0 += n ? corner.vth_shift_n : corner.vth_shift_p;
    return out;
}

DeviceParams apply_temperature(const DeviceParams& params, double t_kelvin,
                               const TemperatureModel& model) {
    if (!(t_kelvin > 0.0)) throw RangeError("temperature", "must be > 0 K");
    if (t_kelvin == model.t_ref) return params;
    DeviceParams out = params;
    out.mu_cox *= std::pow(t_kelvin / model.t_ref, model.mu_exponent);
    out.vth0 -= model.vth_tempco * (t_kelvin - model.t_ref);
    return out;
}

DeviceSet resolve_devices(const DeviceSet& nominal, const CornerSpec& corner, double t_kelvin,
                          const TemperatureModel& model) {
    DeviceSet out;
    out.nmos = apply_temperature(apply_corner(nominal.nmos, corner), t_kelvin, model);
    out.pmos = apply_temperature(apply_corner(nominal.pmos, corner), t_kelvin, model);
    out.nmos.validate();
    out.pmos.validate();
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

MismatchSample sample_mismatch(std::uint64_t seed, std::uint64_t trial,
                               std::span<const TransistorGeom> geoms, double avt, double abeta) {
    if (avt < 0.0) throw RangeError("avt", "must be >= 0");
    if (abeta < 0.0) throw RangeError("abeta", "must be >= 0");

    MismatchSample sample;
    if (avt == 0.0 && abeta == 0.0) return sample;

    std::vector<const TransistorGeom*> order;
    order.reserve(geoms.size());
    for (const auto& g : geoms) order.push_back(&g);
    std::sort(order.begin(), order.end(),
              [](const auto* a, const auto* b) { return a->name < b->name; });

    std::mt19937_64 rng(splitmix64(splitmix64(seed) ^ trial));
    std::normal_distribution<double> unit(0.0, 1.0);
    for (const auto* g : order) {
        const double area_root = std::sqrt(g->w * g->l);
        const double z_vth = unit(rng);
        const double z_beta = unit(rng);
        sample.set(g->name, {z_vth * avt / area_root, z_beta * abeta / area_root});
    }
    return sample;
}

}  // namespace dyncomp
