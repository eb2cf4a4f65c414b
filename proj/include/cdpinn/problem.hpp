#pragma once

#include <array>

namespace cdpinn {

/// Scalar data of -eps u'' + (F u)' = f on (0,1) with Robin conditions
/// alpha (u' n) + kappa u = g at x = 0 (n = -1) and x = 1 (n = +1).
struct ProblemSpec {
    double epsilon = 1.0;
    double F = 1.0;
    double f = 1.0;
    double alpha = 1e-3;
    double kappa = 1.0;
    double g0 = 0.0;
    double g1 = 0.0;
    double lambda = 0.5;

    /// The benchmark instance: F = f = 1, alpha = 1e-3, kappa = 1, g = 0.
    static ProblemSpec benchmark(double epsilon);

    /// Throws InvalidArgument unless epsilon > 0, alpha > 0, kappa >= 0 and 0 < lambda < 1.
    void validate() const;
};

enum class Endpoint { Left, Right };

/// Outward normal: -1 at x = 0, +1 at the right end.
constexpr double outward_normal(Endpoint e) { return e == Endpoint::Left ? -1.0 : 1.0; }

struct PotentialDerivs {
    double v = 0.0;
    double dv = 0.0;
    double ddv = 0.0;
};

/// V(x) = F x with gauge V(0) = 0. With this sign u = e^{V/(2 eps)} z turns
/// -eps u'' + (F u)' = f into -z'' + V'^2/(4 eps^2) z = f e^{-V/(2 eps)} / eps.
double potential(const ProblemSpec& spec, double x);
PotentialDerivs potential_derivs(const ProblemSpec& spec, double x);

/// Sign-checked coercivity conditions of the symmetrized (z) energy.
struct CoercivityReport {
    double bulk_coefficient = 0.0;  ///< V''/(2 eps) + V'^2/(4 eps^2)
    double left_boundary = 0.0;     ///< kappa/alpha + V'(0) n(0)/(2 eps)
    double right_boundary = 0.0;    ///< kappa/alpha + V'(1) n(1)/(2 eps)

    bool bulk_ok() const { return bulk_coefficient > 0.0; }
    bool boundary_ok() const { return left_boundary >= 0.0 && right_boundary >= 0.0; }
    bool ok() const { return bulk_ok() && boundary_ok(); }
};

CoercivityReport check_coercivity(const ProblemSpec& spec);

/// Closed-form solution u(x) = C1 + C2 e^{F x / eps} + (f/F) x.
///
/// For F/eps > 0 the exponential is carried as tail * e^{F (x-1)/eps} with
/// tail = C2 e^{F/eps}, so evaluation never forms e^{F/eps} itself.
struct AnalyticSolution {
    ProblemSpec spec;
    double C1 = 0.0;
    double C2 = 0.0;    ///< may underflow to 0 for large F/eps; use tail
    double tail = 0.0;  ///< coefficient of the shifted exponential
    bool shifted = false;
};

AnalyticSolution solve_analytic(const ProblemSpec& spec);

struct ValueAndSlope {
    double value = 0.0;
    double slope = 0.0;
};

/// (u, u') at x in [0,1]; throws DomainError otherwise.
ValueAndSlope eval_analytic(const AnalyticSolution& sol, double x);

/// (u, u', u'') at x in [0,1].
std::array<double, 3> eval_analytic_triple(const AnalyticSolution& sol, double x);

/// z = u e^{-V/(2 eps)} with first and second derivatives.
struct TransformedValue {
    double z = 0.0;
    double dz = 0.0;
    double ddz = 0.0;
    bool overflow = false;  ///< |V/(2 eps)| > 700; values are then NaN
};

TransformedValue exact_z(const AnalyticSolution& sol, double x);

/// Exponent magnitude beyond which exponentials are reported instead of evaluated.
inline constexpr double kExponentLimit = 700.0;

/// Solves a 2x2 system after equilibrating each row by its largest entry.
/// Throws SingularSystem if the equilibrated determinant is below 1e-14.
std::array<double, 2> solve_2x2(const std::array<std::array<double, 2>, 2>& m,
                                const std::array<double, 2>& rhs);

} // namespace cdpinn
