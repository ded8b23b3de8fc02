#include "dyncomp/comparator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dyncomp/errors.hpp"

namespace dyncomp {

namespace {

constexpr double um = 1e-6;

TransistorGeom dev(const char* name, double w_um, Polarity p) {
    return {name, w_um * um, 0.18 * um, p};
}

const std::vector<std::string>& schematic_names() {
    static const std::vector<std::string> names = {
        "Mp1",  "Mp2",  "Mp3",  "Mp4",  "Mp5",  "Mp6",  "Mp7",  "Mp8",  "Mp9",
        "Mpi1", "Mpi2", "Mpi3", "Mpi4", "Mn1",  "Mn2",  "Mn3",  "Mn4",  "Mn5",
        "Mn6",  "Mni1", "Mni2", "Mni3", "Mni4"};
    return names;
}

}  // namespace

const TransistorGeom& GeometrySet::at(std::string_view name) const {
    for (const auto& d : devices_) {
        if (d.name == name) return d;
    }
    throw ConfigError("geometry set has no transistor named '" + std::string(name) + "'");
}

TransistorGeom& GeometrySet::at(std::string_view name) {
    return const_cast<TransistorGeom&>(std::as_const(*this).at(name));
}

bool GeometrySet::contains(std::string_view name) const {
    return std::any_of(devices_.begin(), devices_.end(),
                       [&](const TransistorGeom& d) { return d.name == name; });
}

void GeometrySet::validate() const {
    const auto& known = schematic_names();
    for (const auto& d : devices_) {
        if (std::find(known.begin(), known.end(), d.name) == known.end()) {
            throw ConfigError("unknown transistor name '" + d.name + "'");
        }
        d.validate();
    }
    for (const auto& name : required_device_names()) {
        if (!contains(name)) throw ConfigError("missing transistor '" + name + "'");
    }
}

GeometrySet default_geometry() {
    const auto P = Polarity::pmos;
    const auto N = Polarity::nmos;
    return GeometrySet({
        dev("Mp1", 2.0, P),   dev("Mp2", 0.35, P),  dev("Mp3", 0.35, P),  dev("Mp4", 1.2, P),
        dev("Mp5", 1.2, P),   dev("Mp6", 0.5, P),   dev("Mp7", 2.0, P),   dev("Mp8", 2.0, P),
        dev("Mp9", 0.5, P),   dev("Mpi1", 0.22, P), dev("Mpi2", 0.22, P), dev("Mpi3", 0.22, P),
        dev("Mpi4", 0.22, P), dev("Mn1", 0.5, N),   dev("Mn2", 0.5, N),   dev("Mn3", 1.0, N),
        dev("Mn4", 1.0, N),   dev("Mn5", 2.0, N),   dev("Mn6", 2.0, N),   dev("Mni1", 0.22, N),
        dev("Mni2", 0.22, N), dev("Mni3", 0.22, N), dev("Mni4", 0.22, N),
    });
}

const std::vector<std::string>& required_device_names() {
    static const std::vector<std::string> names = {"Mp1", "Mp2", "Mp3",  "Mp4",  "Mp5",
                                                   "Mp8", "Mn3", "Mn4",  "Mn6",  "Mni2",
                                                   "Mni3", "Mpi1", "Mpi4"};
    return names;
}

void ComparatorConfig::validate() const {
    if (!(vdd > 0.0)) throw RangeError("vdd", "must be > 0");
    if (!(freq > 0.0)) throw RangeError("freq", "must be > 0");
    if (!(alpha >= 1.0)) throw RangeError("alpha", "must be >= 1");
    if (!(tail_derate >= 0.0 && tail_derate < 1.0)) {
        throw RangeError("tail_derate", "must be in [0, 1)");
    }
    if (tie_break != 1 && tie_break != -1) throw RangeError("tie_break", "must be +1 or -1");
    if (extra_load.out < 0.0) throw RangeError("extra_load.out", "must be >= 0");
    if (extra_load.pi < 0.0) throw RangeError("extra_load.pi", "must be >= 0");
    if (extra_load.p3 < 0.0) throw RangeError("extra_load.p3", "must be >= 0");
    if (extra_load.latch < 0.0) throw RangeError("extra_load.latch", "must be >= 0");
    geoms.validate();
}

void OperatingPoint::validate(double vdd) const {
    if (!(vdd > 0.0)) throw RangeError("vdd", "must be > 0");
    if (!(vcm >= 0.0 && vcm <= vdd)) throw RangeError("vcm", "must lie in [0, vdd]");
    if (!(std::abs(vid) < vdd)) throw RangeError("vid", "|vid| must be < vdd");
    if (!(t_kelvin > 0.0)) throw RangeError("temperature", "must be > 0 K");
}

NodeCaps node_caps(const ComparatorConfig& config, const DeviceSet& dev) {
    const auto& g = config.geoms;
    auto cap = [&](std::string_view name) {
        const auto& t = g.at(name);
        return gate_cap(t, dev.of(t.polarity));
    };
    NodeCaps c;
    c.c_out = cap("Mn3") + cap("Mni2") + config.extra_load.out;
    c.c_out_plus = cap("Mn4") + cap("Mni3") + config.extra_load.out;
    c.c_pi = cap("Mpi1") + config.extra_load.pi;
    // The two parallel tail switches each load one INV_p output.
    c.c_p3 = 0.5 * (cap("Mp2") + cap("Mp3")) + config.extra_load.p3;
    c.c_latch = cap("Mp8") + cap("Mn6") + config.extra_load.latch;
    return c;
}

InputPair input_pair(const ComparatorConfig& config, const DeviceSet& dev, double vdd,
                     const MismatchSample& mismatch, const BodyBias& body) {
    const auto m4 = mismatch.at("Mp4");
    const auto m5 = mismatch.at("Mp5");
    InputPair p;
    p.vth_mp4 = threshold(dev.pmos, body.vb_minus - vdd, m4.delta_vth);
    p.vth_mp5 = threshold(dev.pmos, body.vb_plus - vdd, m5.delta_vth);
    p.beta_mp4 = beta(config.geoms.at("Mp4"), dev.pmos) * (1.0 + m4.delta_beta_rel);
    p.beta_mp5 = beta(config.geoms.at("Mp5"), dev.pmos) * (1.0 + m5.delta_beta_rel);
    return p;
}

double tail_current(const OperatingPoint& op, const ComparatorConfig& config, const DeviceSet& dev,
                    const MismatchSample& mismatch) {
    const double vdd = op.vdd(config);
    const auto m1 = mismatch.at("Mp1");
    const double vthp = threshold(dev.pmos, 0.0, m1.delta_vth);
    const double ov = vdd - vthp;
    if (ov <= 0.0) return 0.0;
    const double b = beta(config.geoms.at("Mp1"), dev.pmos) * (1.0 + m1.delta_beta_rel);
    return 0.5 * b * ov * ov * (1.0 - config.tail_derate);
}

BranchCurrents branch_currents(const OperatingPoint& op, double vdd, const InputPair& pair,
                               double i_tail) {
    const double ov_minus = vdd - (op.vcm - 0.5 * op.vid) - pair.vth_mp4;
    const double ov_plus = vdd - (op.vcm + 0.5 * op.vid) - pair.vth_mp5;
    auto sq = [](double b, double ov) { return ov > 0.0 ? 0.5 * b * ov * ov : 0.0; };

    BranchCurrents i{sq(pair.beta_mp4, ov_minus), sq(pair.beta_mp5, ov_plus)};
    if (i.out_minus + i.out_plus <= i_tail) return i;
    if (i_tail <= 0.0) return {};

    // Both devices stay on: b4*(ov4 - d)^2 + b5*(ov5 - d)^2 = 2*i_tail, smaller root.
    const double b4 = pair.beta_mp4, b5 = pair.beta_mp5;
    const double qa = b4 + b5;
    const double qb = -2.0 * (b4 * ov_minus + b5 * ov_plus);
    const double qc = b4 * ov_minus * ov_minus + b5 * ov_plus * ov_plus - 2.0 * i_tail;
    const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
    const double drop = (-qb - std::sqrt(disc)) / (2.0 * qa);
    if (drop <= std::min(ov_minus, ov_plus)) {
        return {sq(b4, ov_minus - drop), sq(b5, ov_plus - drop)};
    }
    // Only the stronger side conducts and takes the whole tail current.
    if (ov_minus >= ov_plus) return {i_tail, 0.0};
    return {0.0, i_tail};
}

namespace timing {

double t1_analytic(double vthn, double c_load, double beta_p, double vdd, double v_gate,
                   double vthp) {
    const double ov = vdd - v_gate - vthp;
    const double denom = beta_p * ov * ov;
    if (!(ov > 0.0) || !(denom > 0.0)) {
        throw DegenerateOverdriveError("leading input device has no overdrive (vdd - vin - vthp = " +
                                       std::to_string(ov) + " V)");
    }
    return 2.0 * vthn * c_load / denom;
}

double t_inv_n(double c_pi, double beta_n, double vdd) { return 1.6 * c_pi / (beta_n * vdd); }

double t_inv_p(double c_p3, double beta_p, double vdd, double alpha) {
    return alpha * (1.6 * c_p3 / (beta_p * vdd));
}

double t_latch(double c_latch, double beta_n3, double vdd) {
    return 1.6 * c_latch / (beta_n3 * vdd);
}

}  // namespace timing

AnalyticTiming analytic_timing(const OperatingPoint& op, const ComparatorConfig& config,
                               const DeviceSet& dev) {
    const double vdd = op.vdd(config);
    const auto caps = node_caps(config, dev);
    const auto& g = config.geoms;
    const double v_lead = op.vcm - 0.5 * std::abs(op.vid);

    AnalyticTiming t;
    t.t1 = timing::t1_analytic(dev.nmos.vth0, caps.c_out, beta(g.at("Mp4"), dev.pmos), vdd, v_lead,
                               dev.pmos.vth0);
    t.t_inv_n = timing::t_inv_n(caps.c_pi, beta(g.at("Mni2"), dev.nmos), vdd);
    t.t_inv_p = timing::t_inv_p(caps.c_p3, beta(g.at("Mpi4"), dev.pmos), vdd, config.alpha);
    t.t_esd = t.t1 + t.t_inv_n + t.t_inv_p;
    t.t_latch = timing::t_latch(caps.c_latch, beta(g.at("Mn3"), dev.nmos), vdd);
    t.t_dm = t.t1 + t.t_latch;
    return t;
}

ComparisonResult simulate_comparison(const OperatingPoint& op, const ComparatorConfig& config,
                                     const DeviceSet& dev, const MismatchSample& mismatch,
                                     std::optional<BodyBias> body) {
    const double vdd = op.vdd(config);
    op.validate(vdd);
    const BodyBias bias = body.value_or(BodyBias{vdd, vdd});
    if (bias.vb_plus < 0.0 || bias.vb_plus > vdd || bias.vb_minus < 0.0 || bias.vb_minus > vdd) {
        throw RangeError("body", "body voltages must lie in [0, vdd]");
    }

    const auto caps = node_caps(config, dev);
    const auto pair = input_pair(config, dev, vdd, mismatch, bias);

    ComparisonResult r;
    r.i_tail = tail_current(op, config, dev, mismatch);
    r.currents = branch_currents(op, vdd, pair, r.i_tail);

    constexpr double never = std::numeric_limits<double>::infinity();
    auto ramp_time = [](double vth, double c, double i) { return i > 0.0 ? vth * c / i : never; };

    const double vthn_mn3 = threshold(dev.nmos, 0.0, mismatch.at("Mn3").delta_vth);
    const double vthn_mn4 = threshold(dev.nmos, 0.0, mismatch.at("Mn4").delta_vth);
    const double t0_minus = ramp_time(vthn_mn3, caps.c_out, r.currents.out_minus);
    const double t0_plus = ramp_time(vthn_mn4, caps.c_out_plus, r.currents.out_plus);

    if (t0_minus < t0_plus) {
        r.decision = +1;
    } else if (t0_plus < t0_minus) {
        r.decision = -1;
    } else {
        r.decision = config.tie_break;
    }
    const bool minus_leads = r.decision > 0;
    r.t0 = minus_leads ? t0_minus : t0_plus;

    const double window = config.window();
    if (!(r.t0 <= window)) {
        throw NoDecisionError("no preamp output reached the latch threshold within the " +
                              std::to_string(window * 1e12) + " ps comparison window");
    }

    // Shutdown chain on the leading side: Mni2 -> Mpi1 -> Mp2 for Out-, Mni3 -> Mpi4 -> Mp3 for Out+.
    const auto& g = config.geoms;
    const double i_lead = minus_leads ? r.currents.out_minus : r.currents.out_plus;
    const double c_lead = minus_leads ? caps.c_out : caps.c_out_plus;
    const char* inv_n_dev = minus_leads ? "Mni2" : "Mni3";
    const double vthn_inv = threshold(dev.nmos, 0.0, mismatch.at(inv_n_dev).delta_vth);
    r.t1 = ramp_time(vthn_inv, c_lead, i_lead);
    r.t_esd = r.t1 + timing::t_inv_n(caps.c_pi, beta(g.at("Mni2"), dev.nmos), vdd) +
              timing::t_inv_p(caps.c_p3, beta(g.at("Mpi4"), dev.pmos), vdd, config.alpha);

    const double t_lat = timing::t_latch(caps.c_latch, beta(g.at("Mn3"), dev.nmos), vdd);
    r.t_dm = r.t0 + t_lat;

    if (config.early_shutdown_enabled && r.t_esd < window) {
        r.shutdown_occurred = true;
        // Tail cut before the latch input turned on: the ramp freezes below vthn.
        if (r.t_esd < r.t0) r.stalled = true;
    }
    r.late = r.stalled || r.t_dm > window;
    r.energy = energy_per_comparison(r, op, config, dev);
    return r;
}

EnergyBreakdown energy_per_comparison(const ComparisonResult& result, const OperatingPoint& op,
                                      const ComparatorConfig& config, const DeviceSet& dev) {
    const double vdd = op.vdd(config);
    const double v2 = vdd * vdd;
    const auto caps = node_caps(config, dev);
    const double window = config.window();

    const double conduction = result.shutdown_occurred ? result.t_esd : window;
    const bool chain_fires = result.t_esd <= window;

    EnergyBreakdown e;
    e.e_preamp = vdd * result.i_tail * std::min(conduction, window);
    e.e_latch = caps.c_latch * v2;
    e.e_ddvb = chain_fires ? 2.0 * (caps.c_pi + caps.c_p3) * v2 : 0.0;
    e.e_reset = (caps.c_out + caps.c_out_plus + caps.c_latch) * v2;
    e.total = e.e_preamp + e.e_latch + e.e_ddvb + e.e_reset;
    return e;
}

Comparator::Comparator(ComparatorConfig config, DeviceSet nominal, TemperatureModel temperature)
    : config_(std::move(config)), nominal_(nominal), temperature_(temperature) {
    config_.validate();
    nominal_.nmos.validate();
    nominal_.pmos.validate();
}

DeviceSet Comparator::devices_at(const OperatingPoint& op) const {
    return resolve_devices(nominal_, op.corner, op.t_kelvin, temperature_);
}

ComparisonResult Comparator::simulate(const OperatingPoint& op, const MismatchSample& mismatch,
                                      std::optional<BodyBias> body) const {
    return simulate_comparison(op, config_, devices_at(op), mismatch, body);
}

Comparator Comparator::with_shutdown(bool enabled) const {
    ComparatorConfig c = config_;
    c.early_shutdown_enabled = enabled;
    return Comparator(std::move(c), nominal_, temperature_);
}

}  // namespace dyncomp
