// Benchmarks the OpenMP grid kernels against the serial reference path.

#include <chrono>
#include <cstdio>

#include "lorfol/catalog.hpp"

using namespace lorfol;

namespace {

template <typename F>
double time_ms(F&& body) {
    auto t0 = std::chrono::steady_clock::now();
    body();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-24s serial %9.2f ms   parallel %9.2f ms   speedup %.2fx\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
    {
        CatalogObject obj = catalog_get("nonflat-t3a");
        GridSpec grid = GridSpec{{AxisSpec{-1, 1, 48}, AxisSpec{0, 6.28, 48}, AxisSpec{-1, 1, 48}}};
        double s = time_ms([&] { check_frobenius(*obj.pair, grid, ExecPolicy::Serial); });
        double p = time_ms([&] { check_frobenius(*obj.pair, grid, ExecPolicy::Parallel); });
        report("frobenius 48^3", s, p);

        s = time_ms([&] { solve_connection(*obj.pair, grid, 1e-6, ExecPolicy::Serial); });
        p = time_ms([&] { solve_connection(*obj.pair, grid, 1e-6, ExecPolicy::Parallel); });
        report("connection 48^3", s, p);

        s = time_ms([&] { classify(*obj.pair, grid, 1e-6, ExecPolicy::Serial); });
        p = time_ms([&] { classify(*obj.pair, grid, 1e-6, ExecPolicy::Parallel); });
        report("classify 48^3", s, p);
    }
    {
        SuspensionFlow f = SuspensionFlow::unit_speed({{{2, 1}, {1, 1}}});
        BundleGrid grid{24, 24, 24};
        double s = time_ms([&] {
            strong_bundle_solve(f, Expression::constant(1), 1.0, grid, 1e-10, 200,
                                BundleSide::Unstable, ExecPolicy::Serial);
        });
        double p = time_ms([&] {
            strong_bundle_solve(f, Expression::constant(1), 1.0, grid, 1e-10, 200,
                                BundleSide::Unstable, ExecPolicy::Parallel);
        });
        report("bundle-solve 24^3", s, p);
    }
    return 0;
}
