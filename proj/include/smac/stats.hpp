#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace smac {

struct SampleStats {
    double mean = 0.0;
    double var = 0.0;  // unbiased
    std::size_t n = 0;

    double std_err() const { return n > 1 ? std::sqrt(var / static_cast<double>(n)) : 0.0; }
};

inline SampleStats summarize(std::span<const double> xs) {
    SampleStats s;
    s.n = xs.size();
    if (s.n == 0) return s;
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(s.n);
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    s.mean = m;
    s.var = s.n > 1 ? v / static_cast<double>(s.n - 1) : 0.0;
    return s;
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median: empty");
    std::sort(xs.begin(), xs.end());
    std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Two-sided t critical value at 95% for n-1 dof (coarse table, n >= 2).
inline double t_crit_95(std::size_t n) {
    static const double tab[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                 2.306,  2.262, 2.228, 2.201, 2.179, 2.160, 2.145};
    if (n < 2) return 12.706;
    std::size_t dof = n - 1;
    if (dof <= 14) return tab[dof - 1];
    if (dof <= 30) return 2.05;
    return 1.96;
}

}  // namespace smac
