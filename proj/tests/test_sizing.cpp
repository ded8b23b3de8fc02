#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dyncomp/errors.hpp"
#include "dyncomp/sizing.hpp"

using namespace dyncomp;

namespace {

struct GridBest {
    double x = 1, y = 1, r = INFINITY;
};

// Brute force over an integer-indexed grid; keeps the first strict minimum.
GridBest brute(double alpha, double x_max, double y_max, double step) {
    GridBest best;
    const int nx = static_cast<int>(std::floor((x_max - 1) / step + 1e-9));
    const int ny = static_cast<int>(std::floor((y_max - 1) / step + 1e-9));
    for (int i = 0; i <= nx; ++i) {
        for (int j = 0; j <= ny; ++j) {
            const double x = 1 + i * step, y = 1 + j * step;
            const double r = std::abs(x / 2 + alpha * y / x - 2);
            if (r < best.r) best = {x, y, r};
        }
    }
    return best;
}

}  // namespace

TEST_CASE("normalized balance residual") {
    CHECK(normalized_balance_residual({1, 1, 1.5}) == 0.0);
    CHECK(normalized_balance_residual({1, 1, 1.0}) == -0.5);
    CHECK(normalized_balance_residual({2, 1, 2.0}) == 0.0);
    CHECK_THROWS_AS(SizingVars({0.5, 1, 1.5}).validate(), RangeError);
}

TEST_CASE("general balance residual") {
    NodeCaps caps;
    caps.c_pi = 0.3e-15;
    caps.c_p3 = 0.6e-15;
    caps.c_latch = 6e-15;
    const BalanceBetas b{366e-6, 183e-6, 1.6e-3};
    const double lhs = caps.c_pi / b.inv_n + 1.5 * caps.c_p3 / b.inv_p;
    const double rhs = caps.c_latch / b.latch_n;
    CHECK(balance_residual(caps, b, 1.5) == doctest::Approx(lhs - rhs).epsilon(1e-14));

    NodeCaps k = caps;
    k.c_pi *= 3;
    k.c_p3 *= 3;
    k.c_latch *= 3;
    CHECK(balance_residual(k, b, 1.5) == doctest::Approx(3 * balance_residual(caps, b, 1.5)).epsilon(1e-12));
}

TEST_CASE("balance residual for the default geometry") {
    const ComparatorConfig cfg;
    const DeviceSet dev;
    const auto caps = node_caps(cfg, dev);
    const double b_ni = 300e-6 * 0.22 / 0.18, b_pi = 150e-6 * 0.22 / 0.18, b_n3 = 300e-6 / 0.18;
    const double c_pi = 8.5e-3 * 0.22e-6 * 0.18e-6;
    const double c_p3 = 8.5e-3 * 0.35e-6 * 0.18e-6;
    const double c_lat = 8.5e-3 * 4e-6 * 0.18e-6;
    const double oracle = c_pi / b_ni + 1.5 * c_p3 / b_pi - c_lat / b_n3;
    CHECK(balance_residual(caps, balance_betas(cfg, dev), 1.5) == doctest::Approx(oracle).epsilon(1e-12));
    // Positive: the shutdown path is slower than the latch decision.
    CHECK(oracle > 0.0);
}

TEST_CASE("sizing solver on the reference alphas") {
    const auto a = solve_sizing(1.5, 4, 4, 0.01);
    CHECK(a.x == 1.0);
    CHECK(a.y == 1.0);
    CHECK(normalized_balance_residual(a) == 0.0);

    const auto b = solve_sizing(2.0, 4, 4, 0.01);
    CHECK(b.x == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(b.y == 1.0);
    CHECK(std::abs(normalized_balance_residual(b)) < 1e-12);

    // With y pinned at its minimum the root of x^2/2 - 2x + 1 = 0 is 2 + sqrt(2).
    const auto c = solve_sizing(1.0, 4, 1, 0.01);
    CHECK(std::abs(c.x - (2 + std::sqrt(2.0))) <= 0.01);
    CHECK(c.x == doctest::Approx(3.41).epsilon(1e-12));
    CHECK(c.y == 1.0);

    // With y free an exact zero exists at smaller x, which the tie-break prefers.
    const auto d = solve_sizing(1.0, 4, 4, 0.01);
    CHECK(d.x == 1.0);
    CHECK(d.y == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(std::abs(normalized_balance_residual(d)) < 1e-12);
}

TEST_CASE("sizing solver is globally optimal on its grid") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ua(1.0, 3.0);
    for (int k = 0; k < 25; ++k) {
        const double alpha = ua(rng);
        const auto s = solve_sizing(alpha, 4, 4, 0.05);
        const auto o = brute(alpha, 4, 4, 0.05);
        CHECK(s.x >= 1.0);
        CHECK(s.y >= 1.0);
        CHECK(std::abs(normalized_balance_residual(s)) <= o.r);
        CHECK(s.x == doctest::Approx(o.x).epsilon(1e-12));
        CHECK(s.y == doctest::Approx(o.y).epsilon(1e-12));
    }
}

TEST_CASE("coarse and 10x finer grids agree") {
    for (double alpha : {1.5, 2.0}) {
        const auto s = solve_sizing(alpha, 4, 4, 0.01);
        const auto f = brute(alpha, 4, 4, 0.001);
        CHECK(std::abs(s.x - f.x) <= 0.01);
        CHECK(std::abs(s.y - f.y) <= 0.01);
    }
    {
        const auto s = solve_sizing(1.0, 4, 1, 0.01);
        const auto f = brute(1.0, 4, 1, 0.001);
        CHECK(std::abs(s.x - f.x) <= 0.01);
    }
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ua(1.0, 3.0);
    for (int k = 0; k < 10; ++k) {
        const double alpha = ua(rng);
        const double step = 0.05;
        const auto s = solve_sizing(alpha, 4, 4, step);
        const auto f = brute(alpha, 4, 4, step / 10);
        // Lipschitz bound of the residual over one coarse cell.
        const double lip = 0.5 + 4 * alpha + alpha;
        CHECK(std::abs(normalized_balance_residual(s)) <= f.r + lip * step);
    }
}

TEST_CASE("sizing solver argument checks") {
    CHECK_THROWS_AS(solve_sizing(0.5, 4, 4, 0.01), RangeError);
    CHECK_THROWS_AS(solve_sizing(1.5, 0.5, 4, 0.01), RangeError);
    CHECK_THROWS_AS(solve_sizing(1.5, 4, 4, 0.0), RangeError);
}

TEST_CASE("latch sizing ratio") {
    CHECK(latch_ratio_holds(default_geometry()));
    auto g = default_geometry();
    g.at("Mn6").w = 3e-6;
    CHECK_FALSE(latch_ratio_holds(g));
}

TEST_CASE("group resizing") {
    const auto base = default_geometry();
    const auto p = resize_group(base, WidthTarget::preamp, 3e-6);
    CHECK(p.at("Mp4").w == 3e-6);
    CHECK(p.at("Mp5").w == 3e-6);
    CHECK(p.at("Mp1").w == 6e-6);
    const auto n = resize_group(base, WidthTarget::inv_n, 0.5e-6);
    CHECK(n.at("Mni2").w == 0.5e-6);
    CHECK(n.at("Mpi1").w == base.at("Mpi1").w);
    const auto both = resize_group(base, WidthTarget::inv_both, 0.5e-6);
    CHECK(both.at("Mpi4").w == 0.5e-6);
    CHECK(both.at("Mni1").w == 0.5e-6);
    CHECK(parse_width_target("inv_both") == WidthTarget::inv_both);
    CHECK_THROWS_AS(parse_width_target("latch"), ConfigError);
}

TEST_CASE("width sweeps") {
    const Comparator engine{ComparatorConfig{}};
    OperatingPoint op;

    std::vector<double> wp;
    for (int i = 0; i < 15; ++i) wp.push_back(0.5e-6 + i * 0.25e-6);
    const auto pre = width_sweep(WidthTarget::preamp, wp, op, engine, 4);
    REQUIRE(pre.size() == wp.size());
    for (std::size_t i = 1; i < pre.size(); ++i) {
        CHECK(pre[i].w == wp[i]);
        CHECK_FALSE(pre[i].error.has_value());
        CHECK(pre[i].power > pre[i - 1].power);
        CHECK(pre[i].t_dm < pre[i - 1].t_dm);
    }

    std::vector<double> wn;
    for (int i = 0; i < 12; ++i) wn.push_back(0.22e-6 + i * 0.08e-6);
    const auto inv = width_sweep(WidthTarget::inv_n, wn, op, engine);
    for (std::size_t i = 1; i < inv.size(); ++i) CHECK(inv[i].t_dm >= inv[i - 1].t_dm);

    const auto serial = width_sweep(WidthTarget::preamp, wp, op, engine, 1);
    for (std::size_t i = 0; i < wp.size(); ++i) {
        CHECK(serial[i].t_dm == pre[i].t_dm);
        CHECK(serial[i].power == pre[i].power);
    }
}

TEST_CASE("width sweep flags failing points instead of throwing") {
    const Comparator engine{ComparatorConfig{}};
    const std::vector<double> w = {0.1e-6, 1e-6};
    const auto pts = width_sweep(WidthTarget::preamp, w, OperatingPoint{}, engine);
    CHECK(pts[0].error.has_value());
    CHECK(pts[0].late);
    CHECK_FALSE(pts[1].error.has_value());
}
