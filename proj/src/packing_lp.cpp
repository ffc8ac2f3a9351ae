#include "packing_lp.hpp"

#include "slotflow/error.hpp"

#include <cmath>
#include <limits>

namespace slotflow::detail {

namespace {

constexpr double kPivotEps = 1e-11;
constexpr double kCostEps = 1e-10;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// Dense bounded-variable primal simplex. Columns [0, cols) are structural,
// [cols, cols + rows) are slacks. Nonbasic variables sit at 0 or at their
// upper bound; basic values live in `beta`.
LpSolution solve_packing_lp(const PackingLp& lp)
{
    const int m = lp.rows;
    const int n = lp.cols;
    const int width = n + m;

    LpSolution out;
    out.x.assign(n, 0.0);
    if (n == 0)
        return out;

    std::vector<double> tab(static_cast<std::size_t>(m) * width, 0.0);
    std::vector<double> beta(lp.b);
    std::vector<double> cost(width, 0.0);  // reduced costs
    std::vector<double> upper(width, kInf);
    std::vector<int> basis(m);
    std::vector<int> row_of(width, -1);
    std::vector<char> at_upper(width, 0);

    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j)
            tab[static_cast<std::size_t>(i) * width + j] = lp.a[static_cast<std::size_t>(i) * n + j];
        tab[static_cast<std::size_t>(i) * width + n + i] = 1.0;
        basis[i] = n + i;
        row_of[n + i] = i;
        if (beta[i] < 0.0)
            beta[i] = 0.0;
    }
    for (int j = 0; j < n; ++j) {
        cost[j] = lp.c[j];
        upper[j] = lp.upper[j];
    }

    const int max_iterations = 200 * (width + 10);
    int degenerate_run = 0;
    for (int iter = 0;; ++iter) {
        if (iter > max_iterations)
            throw Error(ErrorCode::solver_failure, "simplex iteration limit exceeded");

        // Dantzig pricing, switching to Bland's rule after a degenerate run.
        const bool bland = degenerate_run > 30;
        int enter = -1;
        double best = 0.0;
        for (int j = 0; j < width; ++j) {
            if (row_of[j] >= 0 || upper[j] == 0.0)
                continue;
            const double d = cost[j];
            const double gain = at_upper[j] ? -d : d;
            if (gain > kCostEps && (enter < 0 || (!bland && gain > best))) {
                enter = j;
                best = gain;
                if (bland)
                    break;
            }
        }
        if (enter < 0)
            break;

        const double dir = at_upper[enter] ? -1.0 : 1.0;
        double theta = upper[enter];
        int leave_row = -1;
        bool leave_to_upper = false;
        for (int i = 0; i < m; ++i) {
            const double alpha = tab[static_cast<std::size_t>(i) * width + enter] * dir;
            if (alpha > kPivotEps) {
                const double lim = beta[i] / alpha;
                if (lim < theta || (lim == theta && leave_row >= 0 && basis[i] < basis[leave_row])) {
                    theta = lim;
                    leave_row = i;
                    leave_to_upper = false;
                }
            } else if (alpha < -kPivotEps && upper[basis[i]] < kInf) {
                const double lim = (upper[basis[i]] - beta[i]) / -alpha;
                if (lim < theta || (lim == theta && leave_row >= 0 && basis[i] < basis[leave_row])) {
                    theta = lim;
                    leave_row = i;
                    leave_to_upper = true;
                }
            }
        }
        if (theta == kInf)
            throw Error(ErrorCode::solver_failure, "unbounded packing relaxation");
        theta = std::max(theta, 0.0);
        degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;

        for (int i = 0; i < m; ++i)
            beta[i] -= tab[static_cast<std::size_t>(i) * width + enter] * dir * theta;

        if (leave_row < 0) {
            at_upper[enter] = !at_upper[enter];
            continue;
        }

        const int leaving = basis[leave_row];
        const double entering_value = at_upper[enter] ? upper[enter] - theta : theta;
        at_upper[leaving] = leave_to_upper ? 1 : 0;
        row_of[leaving] = -1;
        at_upper[enter] = 0;
        basis[leave_row] = enter;
        row_of[enter] = leave_row;
        beta[leave_row] = entering_value;

        double* prow = &tab[static_cast<std::size_t>(leave_row) * width];
        const double piv = prow[enter];
        for (int j = 0; j < width; ++j)
            prow[j] /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == leave_row)
                continue;
            double* r = &tab[static_cast<std::size_t>(i) * width];
            const double f = r[enter];
            if (f == 0.0)
                continue;
            for (int j = 0; j < width; ++j)
                r[j] -= f * prow[j];
            r[enter] = 0.0;
        }
        const double fc = cost[enter];
        for (int j = 0; j < width; ++j)
            cost[j] -= fc * prow[j];
        cost[enter] = 0.0;
        ++out.pivots;
    }

    for (int j = 0; j < n; ++j) {
        double v = row_of[j] >= 0 ? beta[row_of[j]] : (at_upper[j] ? upper[j] : 0.0);
        v = std::min(std::max(v, 0.0), upper[j]);
        out.x[j] = v;
        out.value += lp.c[j] * v;
    }
    return out;
}

}  // namespace slotflow::detail
