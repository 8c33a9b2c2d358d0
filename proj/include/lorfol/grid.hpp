#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "lorfol/expr.hpp"
#include "lorfol/exterior.hpp"

namespace lorfol {

struct AxisSpec {
    double lo = 0.0;
    double hi = 1.0;
    int n = 2;  // >= 2 sample points, endpoints inclusive
};

/// Rectangular sample grid over a chart. Evaluation sweeps are data-parallel.
struct GridSpec {
    std::array<AxisSpec, 3> axes;

    static GridSpec cube(double lo, double hi, int n) {
        return GridSpec{{AxisSpec{lo, hi, n}, AxisSpec{lo, hi, n}, AxisSpec{lo, hi, n}}};
    }
    std::size_t size() const {
        return static_cast<std::size_t>(axes[0].n) * static_cast<std::size_t>(axes[1].n) *
               static_cast<std::size_t>(axes[2].n);
    }
    std::array<double, 3> point(std::size_t flat) const {
        const auto n1 = static_cast<std::size_t>(axes[1].n);
        const auto n2 = static_cast<std::size_t>(axes[2].n);
        std::size_t i0 = flat / (n1 * n2);
        std::size_t i1 = (flat / n2) % n1;
        std::size_t i2 = flat % n2;
        return {coord(0, i0), coord(1, i1), coord(2, i2)};
    }
    double coord(int axis, std::size_t i) const {
        const AxisSpec& a = axes[static_cast<std::size_t>(axis)];
        if (a.n == 1) return a.lo;
        return a.lo + (a.hi - a.lo) * static_cast<double>(i) / static_cast<double>(a.n - 1);
    }
};

/// Bindings for a chart point, on top of named-constant bindings.
Bindings bind_point(const Chart& chart, const std::array<double, 3>& p, const Bindings& consts);

}  // namespace lorfol
