#include "dyncomp/sizing.hpp"

#include <cmath>

#include "dyncomp/errors.hpp"
#include "dyncomp/parallel.hpp"

namespace dyncomp {

void SizingVars::validate() const {
    if (!(x >= 1.0)) throw RangeError("x", "must be >= 1");
    if (!(y >= 1.0)) throw RangeError("y", "must be >= 1");
    if (!(alpha >= 1.0)) throw RangeError("alpha", "must be >= 1");
}

double normalized_balance_residual(const SizingVars& v) {
    return v.x / 2.0 + v.alpha * v.y / v.x - 2.0;
}

BalanceBetas balance_betas(const ComparatorConfig& config, const DeviceSet& dev) {
    const auto& g = config.geoms;
    return {beta(g.at("Mni2"), dev.nmos), beta(g.at("Mpi4"), dev.pmos),
            beta(g.at("Mn3"), dev.nmos)};
}

double balance_residual(const NodeCaps& caps, const BalanceBetas& betas, double alpha) {
    const double shutdown_path = caps.c_pi / betas.inv_n + alpha * caps.c_p3 / betas.inv_p;
    const double latch = caps.c_latch / betas.latch_n;
    return shutdown_path - latch;
}

namespace {

std::size_t grid_count(double hi, double step) {
    // Tolerate representation error so that e.g. (4 - 1) / 0.01 lands on 300.
    return static_cast<std::size_t>(std::floor((hi - 1.0) / step + 1e-9)) + 1;
}

}  // namespace

SizingVars solve_sizing(double alpha, double x_max, double y_max, double grid_step) {
    if (!(alpha >= 1.0)) throw RangeError("alpha", "must be >= 1");
    if (!(x_max >= 1.0)) throw RangeError("x_max", "must be >= 1");
    if (!(y_max >= 1.0)) throw RangeError("y_max", "must be >= 1");
    if (!(grid_step > 0.0)) throw RangeError("grid_step", "must be > 0");

    const std::size_t nx = grid_count(x_max, grid_step);
    const std::size_t ny = grid_count(y_max, grid_step);

    SizingVars best{1.0, 1.0, alpha};
    double best_abs = std::abs(normalized_balance_residual(best));
    // x-major then y order, strict improvement only: the first minimum seen is the
    // smallest x, then smallest y.
    for (std::size_t i = 0; i < nx; ++i) {
        const double x = 1.0 + static_cast<double>(i) * grid_step;
        for (std::size_t j = 0; j < ny; ++j) {
            const double y = 1.0 + static_cast<double>(j) * grid_step;
            const double r = std::abs(normalized_balance_residual({x, y, alpha}));
            if (r < best_abs) {
                best_abs = r;
                best = {x, y, alpha};
            }
        }
    }
    return best;
}

bool latch_ratio_holds(const GeometrySet& geoms, double rel_tol) {
    const double wn3 = geoms.at("Mn3").w;
    auto close = [&](double a, double b) { return std::abs(a - b) <= rel_tol * std::abs(b); };
    return close(geoms.at("Mn6").w, 2.0 * wn3) && close(geoms.at("Mp8").w, 2.0 * wn3);
}

std::string_view to_string(WidthTarget t) {
    switch (t) {
        case WidthTarget::preamp: return "preamp";
        case WidthTarget::inv_n: return "inv_n";
        case WidthTarget::inv_both: return "inv_both";
    }
    return "preamp";
}

WidthTarget parse_width_target(std::string_view name) {
    for (auto t : {WidthTarget::preamp, WidthTarget::inv_n, WidthTarget::inv_both}) {
        if (to_string(t) == name) return t;
    }
    throw ConfigError("unknown width sweep target '" + std::string(name) + "'");
}

GeometrySet resize_group(const GeometrySet& base, WidthTarget target, double w) {
    GeometrySet g = base;
    switch (target) {
        case WidthTarget::preamp:
            g.at("Mp4").w = w;
            g.at("Mp5").w = w;
            g.at("Mp1").w = 2.0 * w;
            break;
        case WidthTarget::inv_both:
            for (const char* n : {"Mpi1", "Mpi2", "Mpi3", "Mpi4"}) {
                if (g.contains(n)) g.at(n).w = w;
            }
            [[fallthrough]];
        case WidthTarget::inv_n:
            for (const char* n : {"Mni1", "Mni2", "Mni3", "Mni4"}) {
                if (g.contains(n)) g.at(n).w = w;
            }
            break;
    }
    return g;
}

std::vector<WidthSweepPoint> width_sweep(WidthTarget target, std::span<const double> widths,
                                         const OperatingPoint& op, const Comparator& base,
                                         unsigned threads) {
    std::vector<WidthSweepPoint> points(widths.size());
    parallel_for(widths.size(), threads, [&](std::size_t i) {
        WidthSweepPoint& p = points[i];
        p.w = widths[i];
        try {
            ComparatorConfig cfg = base.config();
            cfg.geoms = resize_group(cfg.geoms, target, p.w);
            const Comparator engine(std::move(cfg), base.nominal_devices(),
                                    base.temperature_model());
            const auto r = engine.simulate(op);
            p.t_dm = r.t_dm;
            p.power = r.power(engine.config().freq);
            p.late = r.late;
        } catch (const Error& e) {
            p.error = e.what();
            p.late = true;
        }
    });
    return points;
}

}  // namespace dyncomp
