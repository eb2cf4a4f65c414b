#include "cdpinn/checks.hpp"

#include "cdpinn/csv.hpp"
#include "cdpinn/fem.hpp"
#include "cdpinn/formulations.hpp"
#include "cdpinn/network.hpp"
#include "cdpinn/problem.hpp"
#include "cdpinn/runner.hpp"
#include "cdpinn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace cdpinn {

namespace {

double rel_err(double a, double b, double floor = 1e-12)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

CheckResult analytic_oracle()
{
    double worst = 0.0;
    for (double eps : log_spaced(5e-3, 10.0, 20)) {
        const auto spec = ProblemSpec::benchmark(eps);
        const auto sol = solve_analytic(spec);
        for (int i = 1; i < 100; ++i) {
            const auto t = eval_analytic_triple(sol, i / 100.0);
            const double r = -eps * t[2] + spec.F * t[1] - spec.f;
            const double scale = eps * std::abs(t[2]) + std::abs(spec.F * t[1]) + std::abs(spec.f);
            worst = std::max(worst, std::abs(r) / scale);
        }
        for (Endpoint e : {Endpoint::Left, Endpoint::Right}) {
            const auto v = eval_analytic(sol, e == Endpoint::Left ? 0.0 : 1.0);
            const double g = e == Endpoint::Left ? spec.g0 : spec.g1;
            const double a = spec.alpha * v.slope * outward_normal(e);
            const double b = spec.kappa * v.value;
            worst = std::max(worst, std::abs(a + b - g) / std::max({std::abs(a), std::abs(b), 1e-300}));
        }
    }
    return {"analytic solution satisfies PDE and Robin data", worst < 1e-8, "max relative residual " + format_double(worst)};
}

CheckResult network_derivatives()
{
    const auto params = init_params(Architecture::standard(), 0, Precision::Double);
    double worst = 0.0;
    const double h = 1e-4;
    for (double x : {0.1, 0.37, 0.8}) {
        const auto t = forward_triple(params, x);
        const auto p = forward_triple(params, x + h);
        const auto m = forward_triple(params, x - h);
        worst = std::max(worst, rel_err(t.dvalue, (p.value - m.value) / (2 * h), 1e-3));
        worst = std::max(worst, rel_err(t.ddvalue, (p.dvalue - m.dvalue) / (2 * h), 1e-3));
    }
    return {"network input derivatives match finite differences", worst < 1e-6, "max relative error " + format_double(worst)};
}

CheckResult loss_gradients()
{
    double worst = 0.0;
    const auto spec = ProblemSpec::benchmark(1.0);
    for (Method m : {Method::V, Method::Vz, Method::W, Method::Wz, Method::RWz}) {
        const auto form = Formulation::make(m, spec);
        const auto rule = uniform_rule(10, form.domain_end);
        auto params = init_params(Architecture::standard(), 0, Precision::Double);
        const auto [loss, grad] = discrete_loss_grad(form, params, rule);
        for (std::size_t i = 0; i < grad.size(); i += 7) {
            const double h = 1e-6 * std::max(1.0, std::abs(params.theta[i]));
            auto p = params;
            p.theta[i] += h;
            const double fp = discrete_loss(form, p, rule).total;
            p.theta[i] -= 2 * h;
            const double fm = discrete_loss(form, p, rule).total;
            const double fd = (fp - fm) / (2 * h);
            worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1e-3 * std::abs(loss.total), std::abs(fd)));
        }
    }
    return {"loss gradients match finite differences (all methods)", worst < 1e-5,
            "max relative error " + format_double(worst)};
}

CheckResult serial_parallel()
{
    const auto form = Formulation::make(Method::Wz, ProblemSpec::benchmark(0.25));
    const auto rule = uniform_rule(1000, 1.0);
    const auto params = init_params(Architecture::standard(), 3, Precision::Double);
    const auto s = discrete_loss_grad(form, params, rule, Execution::Serial);
    const auto p = discrete_loss_grad(form, params, rule, Execution::Parallel);
    double worst = rel_err(s.first.total, p.first.total);
    for (std::size_t i = 0; i < s.second.size(); ++i)
        worst = std::max(worst, rel_err(s.second[i], p.second[i], 1e-8));
    return {"serial and parallel loss kernels agree", worst < 1e-12, "max relative difference " + format_double(worst)};
}

CheckResult fem_residual()
{
    auto sys = assemble(ProblemSpec::benchmark(0.1), 101);
    solve(sys);
    const auto mc = sys.apply(sys.coefficients);
    double r = 0.0;
    double q = 0.0;
    for (std::size_t i = 0; i < mc.size(); ++i) {
        r = std::max(r, std::abs(mc[i] - sys.rhs[i]));
        q = std::max(q, std::abs(sys.rhs[i]));
    }
    return {"FEM solve satisfies the Galerkin equations", r <= 1e-10 * q, "max residual " + format_double(r)};
}

CheckResult normalizer()
{
    double worst = 0.0;
    for (double eps : {0.05, 0.25, 1.0}) {
        const auto spec = ProblemSpec::benchmark(eps);
        const double a = -spec.F / (2 * eps);
        const int n = 100000;
        double sum = 0.5 * (1.0 + std::exp(a));
        for (int i = 1; i < n; ++i)
            sum += std::exp(a * i / n);
        const double trap = sum / n;
        // Trapezoid error is -(a^2/12n^2)(e^a - 1); remove it before comparing.
        const double corrected = trap - a * a / (12.0 * n * n) * (std::exp(a) - 1.0) / a;
        worst = std::max(worst, rel_err(exponential_normalizer(spec).value, corrected));
    }
    return {"exponential sampler normalizer matches quadrature", worst < 1e-8,
            "max relative error " + format_double(worst)};
}

} // namespace

std::vector<CheckResult> run_checks()
{
    const std::vector<std::function<CheckResult()>> suites{analytic_oracle, network_derivatives, loss_gradients,
                                                           serial_parallel, fem_residual, normalizer};
    std::vector<CheckResult> out;
    for (const auto& s : suites) {
        try {
            out.push_back(s());
        } catch (const std::exception& e) {
            out.push_back({"(suite threw)", false, e.what()});
        }
    }
    return out;
}

} // namespace cdpinn
