#include "lorfol/grid.hpp"

namespace lorfol {

Bindings bind_point(const Chart& chart, const std::array<double, 3>& p, const Bindings& consts) {
    Bindings b = consts;
    for (std::size_t i = 0; i < 3; ++i) b.values[chart.coords[i].name] = p[i];
    return b;
}

}  // namespace lorfol
