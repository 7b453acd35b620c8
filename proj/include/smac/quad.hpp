#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace smac {

// Adaptive Simpson quadrature on [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int max_depth = 40) {
    struct Impl {
        const std::function<double(double)>& f;
        double run(double a, double b, double fa, double fm, double fb, double whole, double tol,
                   int depth) {
            double m = 0.5 * (a + b);
            double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            double flm = f(lm), frm = f(rm);
            double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
                return left + right + (left + right - whole) / 15.0;
            return run(a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
                   run(m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
        }
    };
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    Impl impl{f};
    return impl.run(a, b, fa, fm, fb, whole, tol, max_depth);
}

// Composite Simpson on a regular 2-D grid over [ax,bx] x [ay,by].
// n must be even.
inline double simpson_2d(const std::function<double(double, double)>& f, double ax, double bx,
                         double ay, double by, int n = 200) {
    if (n % 2 != 0) throw std::invalid_argument("simpson_2d: n must be even");
    auto w1 = [n](int i) { return (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0); };
    double hx = (bx - ax) / n, hy = (by - ay) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            acc += w1(i) * w1(j) * f(ax + i * hx, ay + j * hy);
    return acc * hx * hy / 9.0;
}

}  // namespace smac
