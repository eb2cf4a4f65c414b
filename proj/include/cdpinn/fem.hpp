#pragma once

#include "cdpinn/problem.hpp"

#include <span>
#include <vector>

namespace cdpinn {

/// P1 Galerkin system on a uniform mesh of `nodes` nodes, h = 1/(nodes-1).
/// Row i tests against the tent function of node i: lower[i] = M(i,i-1),
/// upper[i] = M(i,i+1) (lower[0] and upper[nodes-1] are unused).
struct FemSystem {
    ProblemSpec spec;
    int nodes = 0;
    double h = 0.0;
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;
    std::vector<double> rhs;
    std::vector<double> coefficients;  ///< filled by solve()

    /// y = M c
    std::vector<double> apply(std::span<const double> c) const;
    double node(int i) const { return i * h; }
};

/// Exact element integrals for constant F and f:
///   a(u,v) = int u'v' + (F/eps) int u' v + (kappa/alpha)(u v)(0) + (kappa/alpha)(u v)(1)
///   l(v)   = (f/eps) int v + (g0 v(0) + g1 v(1)) / alpha
FemSystem assemble(const ProblemSpec& spec, int nodes);

/// Thomas algorithm; throws ZeroPivot when a pivot magnitude drops below 1e-14.
std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs);

/// Solves M c = q, stores and returns c.
const std::vector<double>& solve(FemSystem& sys);

/// Piecewise-linear value and piecewise-constant slope at x in [0,1].
/// At interior nodes the slope of the element to the right is returned.
ValueAndSlope eval_fem(const FemSystem& sys, double x);

} // namespace cdpinn
