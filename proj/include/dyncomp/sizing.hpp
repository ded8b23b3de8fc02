#pragma once

// Power-delay balance between the shutdown path and the latch decision, and
// width-sweep characterization of the main device groups.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dyncomp/comparator.hpp"

namespace dyncomp {

/// Widths normalized to the minimum-size inverter NMOS (Mni).
struct SizingVars {
    double x = 1.0;  // W_pi / W_ni
    double y = 1.0;  // W_p3 / W_ni
    double alpha = 1.5;

    void validate() const;
};

/// x/2 + alpha*y/x - 2. Zero when the shutdown path and the latch decision balance
/// under minimum lengths, equal oxide capacitance, mu_n = 2*mu_p and W_n6 = W_p8 = 2*W_n3.
double normalized_balance_residual(const SizingVars& v);

struct BalanceBetas {
    double inv_n = 0.0;    // Mni2
    double inv_p = 0.0;    // Mpi4
    double latch_n = 0.0;  // Mn3
};

BalanceBetas balance_betas(const ComparatorConfig& config, const DeviceSet& dev);

/// c_pi/beta_ni + alpha*c_p3/beta_pi - c_latch/beta_n3, in F/(A/V^2).
/// Positive means the shutdown path is slower than the latch decision.
double balance_residual(const NodeCaps& caps, const BalanceBetas& betas, double alpha);

/// Exhaustive search of the grid x in [1, x_max], y in [1, y_max] with spacing
/// grid_step. Returns the point of smallest |residual|; ties go to the smallest x,
/// then the smallest y.
SizingVars solve_sizing(double alpha, double x_max, double y_max, double grid_step);

/// True when the latch devices satisfy W_n6 = W_p8 = 2*W_n3 (within rel_tol).
bool latch_ratio_holds(const GeometrySet& geoms, double rel_tol = 1e-9);

enum class WidthTarget { preamp, inv_n, inv_both };

std::string_view to_string(WidthTarget t);
WidthTarget parse_width_target(std::string_view name);

/// Returns `base` with the swept group resized. Preamp sets Mp4 = Mp5 = w and
/// Mp1 = 2w; inv_n sets Mni1..Mni4 = w; inv_both also sets Mpi1..Mpi4 = w.
GeometrySet resize_group(const GeometrySet& base, WidthTarget target, double w);

struct WidthSweepPoint {
    double w = 0.0;
    double t_dm = 0.0;
    double power = 0.0;
    bool late = false;
    std::optional<std::string> error;
};

/// Evaluates each width independently; engine failures become flagged points.
std::vector<WidthSweepPoint> width_sweep(WidthTarget target, std::span<const double> widths,
                                         const OperatingPoint& op, const Comparator& base,
                                         unsigned threads = 1);

}  // namespace dyncomp
