#include "cdpinn/problem.hpp"

#include "cdpinn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cdpinn {

ProblemSpec ProblemSpec::benchmark(double epsilon)
{
    ProblemSpec spec;
    spec.epsilon = epsilon;
    return spec;
}

void ProblemSpec::validate() const
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw InvalidArgument("epsilon must be a positive finite number");
    if (!(alpha > 0.0))
        throw InvalidArgument("alpha must be positive (variational formulations need a Robin flux term)");
    if (!(kappa >= 0.0))
        throw InvalidArgument("kappa must be nonnegative");
    if (!(lambda > 0.0 && lambda < 1.0))
        throw InvalidArgument("lambda must lie in (0,1)");
    if (!std::isfinite(F) || !std::isfinite(f) || !std::isfinite(g0) || !std::isfinite(g1))
        throw InvalidArgument("problem data must be finite");
}

double potential(const ProblemSpec& spec, double x) { return spec.F * x; }

PotentialDerivs potential_derivs(const ProblemSpec& spec, double x)
{
    return {spec.F * x, spec.F, 0.0};
}

CoercivityReport check_coercivity(const ProblemSpec& spec)
{
    const double eps = spec.epsilon;
    const auto left = potential_derivs(spec, 0.0);
    const auto right = potential_derivs(spec, 1.0);
    CoercivityReport r;
    r.bulk_coefficient = left.ddv / (2.0 * eps) + left.dv * left.dv / (4.0 * eps * eps);
    r.left_boundary = spec.kappa / spec.alpha + left.dv * outward_normal(Endpoint::Left) / (2.0 * eps);
    r.right_boundary = spec.kappa / spec.alpha + right.dv * outward_normal(Endpoint::Right) / (2.0 * eps);
    return r;
}

std::array<double, 2> solve_2x2(const std::array<std::array<double, 2>, 2>& m,
                                const std::array<double, 2>& rhs)
{
    std::array<std::array<double, 2>, 2> a = m;
    std::array<double, 2> b = rhs;
    for (int i = 0; i < 2; ++i) {
        const double scale = std::max(std::abs(a[i][0]), std::abs(a[i][1]));
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw SingularSystem("row " + std::to_string(i) + " of the 2x2 system is zero or non-finite");
        a[i][0] /= scale;
        a[i][1] /= scale;
        b[i] /= scale;
    }
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if (std::abs(det) < 1e-14)
        throw SingularSystem("2x2 system is singular (equilibrated determinant " + std::to_string(det) + ")");
    return {(b[0] * a[1][1] - a[0][1] * b[1]) / det, (a[0][0] * b[1] - b[0] * a[1][0]) / det};
}

AnalyticSolution solve_analytic(const ProblemSpec& spec)
{
    spec.validate();
    if (spec.F == 0.0)
        throw ZeroDrift("closed-form solution needs F != 0");

    const double r = spec.F / spec.epsilon;
    const double k = spec.kappa;
    const double a = spec.alpha;
    const std::array<double, 2> rhs{spec.g0 + a * spec.f / spec.F,
                                    spec.g1 - spec.f / spec.F * (k + a)};
    AnalyticSolution sol;
    sol.spec = spec;
    if (r > 0.0) {
        // Second row divided by e^{r}; unknowns (C1, C2 e^{r}).
        const double decay = std::exp(-r);
        const auto c = solve_2x2({{{k, (k - a * r) * decay}, {k, k + a * r}}}, rhs);
        sol.C1 = c[0];
        sol.tail = c[1];
        sol.C2 = c[1] * decay;
        sol.shifted = true;
    } else {
        const double grow = std::exp(r);
        const auto c = solve_2x2({{{k, k - a * r}, {k, (k + a * r) * grow}}}, rhs);
        sol.C1 = c[0];
        sol.C2 = c[1];
        sol.tail = c[1];
        sol.shifted = false;
    }
    return sol;
}

namespace {

void check_unit_interval(double x)
{
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError("x = " + std::to_string(x) + " outside [0,1]");
}

// C2 e^{F x / eps}
double exponential_term(const AnalyticSolution& sol, double x)
{
    const double r = sol.spec.F / sol.spec.epsilon;
    return sol.shifted ? sol.tail * std::exp(r * (x - 1.0)) : sol.tail * std::exp(r * x);
}

} // namespace

std::array<double, 3> eval_analytic_triple(const AnalyticSolution& sol, double x)
{
    check_unit_interval(x);
    const auto& s = sol.spec;
    const double r = s.F / s.epsilon;
    const double term = exponential_term(sol, x);
    return {sol.C1 + term + s.f / s.F * x, term * r + s.f / s.F, term * r * r};
}

ValueAndSlope eval_analytic(const AnalyticSolution& sol, double x)
{
    const auto t = eval_analytic_triple(sol, x);
    return {t[0], t[1]};
}

TransformedValue exact_z(const AnalyticSolution& sol, double x)
{
    check_unit_interval(x);
    const auto& s = sol.spec;
    const double exponent = -potential(s, x) / (2.0 * s.epsilon);
    TransformedValue out;
    if (std::abs(exponent) > kExponentLimit) {
        out.overflow = true;
        out.z = out.dz = out.ddz = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double weight = std::exp(exponent);
    const double c = -potential_derivs(s, x).dv / (2.0 * s.epsilon);
    const auto u = eval_analytic_triple(sol, x);
    out.z = u[0] * weight;
    out.dz = (u[1] + c * u[0]) * weight;
    out.ddz = (u[2] + 2.0 * c * u[1] + c * c * u[0]) * weight;
    return out;
}

} // namespace cdpinn
