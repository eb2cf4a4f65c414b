#pragma once

// Reference computations kept independent of the library code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double rel(double a, double b, double floor = 1e-300)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// u(x) = C1 + C2 e^{x/eps} + x for F = f = 1, alpha = 1e-3, kappa = 1, g = 0,
/// solved directly (only usable for moderate eps).
struct Benchmark {
    double eps, c1, c2;

    explicit Benchmark(double e) : eps(e)
    {
        const double a = 1e-3;
        // x=0: -a u'(0) + u(0) = 0  ->  C1 + C2 (1 - a/eps) = a
        // x=1: a u'(1) + u(1) = 0   ->  C1 + C2 E (1 + a/eps) = -(1 + a)
        const double E = std::exp(1.0 / e);
        const double m00 = 1.0, m01 = 1.0 - a / e, m10 = 1.0, m11 = E * (1.0 + a / e);
        const double r0 = a, r1 = -(1.0 + a);
        const double det = m00 * m11 - m01 * m10;
        c1 = (r0 * m11 - m01 * r1) / det;
        c2 = (m00 * r1 - m10 * r0) / det;
    }
    double u(double x) const { return c1 + c2 * std::exp(x / eps) + x; }
    double du(double x) const { return c2 / eps * std::exp(x / eps) + 1.0; }
    double ddu(double x) const { return c2 / (eps * eps) * std::exp(x / eps); }
};

/// Composite Simpson rule with n (even) intervals.
inline double simpson(const std::function<double(double)>& fn, double a, double b, int n)
{
    const double h = (b - a) / n;
    double s = fn(a) + fn(b);
    for (int i = 1; i < n; ++i)
        s += fn(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace oracle
