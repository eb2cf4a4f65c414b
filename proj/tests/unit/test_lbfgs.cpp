#include "cdpinn/errors.hpp"
#include "cdpinn/lbfgs.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace cdpinn;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g)
{
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
}

} // namespace

TEST_CASE("one-dimensional quadratic")
{
    LbfgsConfig cfg;
    cfg.gradient_tolerance = 1e-12;
    const auto r = minimize(
        [](std::span<const double> x, std::span<double> g) {
            g[0] = 2.0 * (x[0] - 3.0);
            return (x[0] - 3.0) * (x[0] - 3.0);
        },
        {0.0}, cfg);
    CHECK(std::abs(r.x[0] - 3.0) < 1e-10);
    CHECK(r.iterations <= 5);
    CHECK(r.status == OptimStatus::Converged);
}

TEST_CASE("Rosenbrock from (-1.2, 1)")
{
    LbfgsConfig cfg;
    cfg.record_trace = true;
    const auto r = minimize(rosenbrock, {-1.2, 1.0}, cfg);
    CHECK(std::abs(r.x[0] - 1.0) < 1e-6);
    CHECK(std::abs(r.x[1] - 1.0) < 1e-6);
    CHECK(r.iterations <= 200);
    CHECK(r.status == OptimStatus::Converged);

    SUBCASE("accepted steps satisfy the strong Wolfe conditions and never increase f")
    {
        REQUIRE(!r.trace.empty());
        for (const auto& s : r.trace) {
            CHECK(s.slope0 < 0.0);
            CHECK(s.f <= s.f0 + cfg.wolfe_c1 * s.step * s.slope0);
            CHECK(std::abs(s.slope) <= cfg.wolfe_c2 * std::abs(s.slope0));
            CHECK(s.f <= s.f0);
        }
    }
    SUBCASE("deterministic")
    {
        const auto again = minimize(rosenbrock, {-1.2, 1.0}, cfg);
        CHECK(again.x == r.x);
        CHECK(again.iterations == r.iterations);
    }
}

namespace {

OptimResult diagonal_quadratic(int n, const LbfgsConfig& cfg)
{
    return minimize(
        [n](std::span<const double> x, std::span<double> g) {
            double f = 0.0;
            for (int i = 0; i < n; ++i) {
                const double c = 1.0 + i;  // Hessian diag(1..n), minimizer x_i = 1/(i+1)
                g[i] = c * x[i] - 1.0;
                f += 0.5 * c * x[i] * x[i] - x[i];
            }
            return f;
        },
        std::vector<double>(static_cast<std::size_t>(n), 0.0), cfg);
}

} // namespace

TEST_CASE("convex quadratics of small dimension")
{
    for (int n : {2, 5, 10, 20}) {
        CAPTURE(n);
        LbfgsConfig cfg;
        cfg.gradient_tolerance = 1e-12;
        // Default Wolfe constants: steps stall once f differences drop below
        // the rounding of f, which limits x to roughly 1e-10 here.
        const auto loose = diagonal_quadratic(n, cfg);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(loose.x[i] - 1.0 / (1 + i)) < 1e-9);

        // Finite termination needs (near) exact line searches.
        cfg.wolfe_c2 = 1e-2;
        const auto exact = diagonal_quadratic(n, cfg);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(exact.x[i] - 1.0 / (1 + i)) < 1e-10);
        CHECK(exact.iterations <= n + 2);
    }
}

TEST_CASE("non-finite objective")
{
    const auto nan_at_start = minimize(
        [](std::span<const double>, std::span<double> g) {
            g[0] = 1.0;
            return std::numeric_limits<double>::quiet_NaN();
        },
        {1.0});
    CHECK(nan_at_start.status == OptimStatus::Diverged);
    CHECK(nan_at_start.iterations == 0);

    // finite only at the start point: every trial step is NaN
    const auto nan_elsewhere = minimize(
        [](std::span<const double> x, std::span<double> g) {
            g[0] = 1.0;
            return x[0] == 1.0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
        },
        {1.0});
    CHECK(nan_elsewhere.status == OptimStatus::Diverged);
}

TEST_CASE("configuration")
{
    CHECK(LbfgsConfig::for_precision(Precision::Double).gradient_tolerance == 1e-8);
    CHECK(LbfgsConfig::for_precision(Precision::Single).gradient_tolerance == 1e-5);
    CHECK(LbfgsConfig::for_precision(Precision::Half).gradient_tolerance == 1e-3);
    LbfgsConfig bad;
    bad.wolfe_c1 = 0.95;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = {};
    bad.history_size = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);

    LbfgsConfig capped;
    capped.max_iterations = 3;
    CHECK(minimize(rosenbrock, {-1.2, 1.0}, capped).status == OptimStatus::MaxIterations);
    CHECK(to_string(OptimStatus::LineSearchFailure) == "line_search_failure");
}
