#include "cdpinn/fem.hpp"

#include "cdpinn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cdpinn {

FemSystem assemble(const ProblemSpec& spec, int nodes)
{
    spec.validate();
    if (nodes < 3)
        throw InvalidArgument("FEM needs at least 3 nodes");
    FemSystem sys;
    sys.spec = spec;
    sys.nodes = nodes;
    sys.h = 1.0 / (nodes - 1);
    const auto n = static_cast<std::size_t>(nodes);
    sys.lower.assign(n, 0.0);
    sys.diag.assign(n, 0.0);
    sys.upper.assign(n, 0.0);
    sys.rhs.assign(n, 0.0);

    const double h = sys.h;
    const double conv = spec.F / spec.epsilon;
    const double load = spec.f / spec.epsilon;
    // Element [x_e, x_{e+1}]: stiffness (1/h)[1 -1; -1 1], convection
    // int phi_j' phi_i = [-1/2 1/2; -1/2 1/2] (row i = test), load h/2 each.
    for (std::size_t e = 0; e + 1 < n; ++e) {
        const std::size_t i = e;
        const std::size_t j = e + 1;
        sys.diag[i] += 1.0 / h - 0.5 * conv;
        sys.upper[i] += -1.0 / h + 0.5 * conv;
        sys.lower[j] += -1.0 / h - 0.5 * conv;
        sys.diag[j] += 1.0 / h + 0.5 * conv;
        sys.rhs[i] += load * h / 2.0;
        sys.rhs[j] += load * h / 2.0;
    }
    sys.diag.front() += spec.kappa / spec.alpha;
    sys.diag.back() += spec.kappa / spec.alpha;
    sys.rhs.front() += spec.g0 / spec.alpha;
    sys.rhs.back() += spec.g1 / spec.alpha;
    return sys;
}

std::vector<double> FemSystem::apply(std::span<const double> c) const
{
    const auto n = static_cast<std::size_t>(nodes);
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = diag[i] * c[i];
        if (i > 0)
            y[i] += lower[i] * c[i - 1];
        if (i + 1 < n)
            y[i] += upper[i] * c[i + 1];
    }
    return y;
}

std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs)
{
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n || n == 0)
        throw InvalidArgument("tridiagonal bands must share one nonzero length");
    std::vector<double> c_prime(n, 0.0);
    std::vector<double> d_prime(n, 0.0);
    double pivot = diag[0];
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0)
            pivot = diag[i] - lower[i] * c_prime[i - 1];
        if (std::abs(pivot) < 1e-14 || !std::isfinite(pivot))
            throw ZeroPivot("tridiagonal elimination hit pivot " + std::to_string(pivot) + " at row "
                            + std::to_string(i));
        c_prime[i] = i + 1 < n ? upper[i] / pivot : 0.0;
        d_prime[i] = (rhs[i] - (i > 0 ? lower[i] * d_prime[i - 1] : 0.0)) / pivot;
    }
    std::vector<double> x(n);
    x[n - 1] = d_prime[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        x[i] = d_prime[i] - c_prime[i] * x[i + 1];
    return x;
}

const std::vector<double>& solve(FemSystem& sys)
{
    sys.coefficients = solve_tridiagonal(sys.lower, sys.diag, sys.upper, sys.rhs);
    return sys.coefficients;
}

ValueAndSlope eval_fem(const FemSystem& sys, double x)
{
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError("x = " + std::to_string(x) + " outside [0,1]");
    if (sys.coefficients.size() != static_cast<std::size_t>(sys.nodes))
        throw InvalidArgument("FEM system has not been solved");
    const int s = std::min(static_cast<int>(x / sys.h), sys.nodes - 2);
    const double c0 = sys.coefficients[static_cast<std::size_t>(s)];
    const double c1 = sys.coefficients[static_cast<std::size_t>(s) + 1];
    const double slope = (c1 - c0) / sys.h;
    return {c0 + slope * (x - sys.node(s)), slope};
}

} // namespace cdpinn
