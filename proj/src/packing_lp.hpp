#pragma once

#include <vector>

namespace slotflow::detail {

// maximize c.x  subject to  A x <= b,  0 <= x <= upper
// Requires b >= 0 so the origin is a basic feasible start (no phase one).
struct PackingLp {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;  // row-major rows x cols
    std::vector<double> b;
    std::vector<double> c;
    std::vector<double> upper;
};

struct LpSolution {
    double value = 0.0;
    std::vector<double> x;
    int pivots = 0;
};

LpSolution solve_packing_lp(const PackingLp& lp);

}  // namespace slotflow::detail
