#include "cdpinn/errors.hpp"
#include "cdpinn/formulations.hpp"
#include "cdpinn/network.hpp"
#include "cdpinn/problem.hpp"
#include "oracles.hpp"

#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <random>

using namespace cdpinn;

namespace {

const Method kAll[] = {Method::V, Method::Vz, Method::W, Method::Wz, Method::RWz};

EvalTriple zero_triple(double) { return {}; }

// The function each method's network is meant to represent, at a point of
// the method's own domain.
EvalTriple exact_target(const Formulation& form, const AnalyticSolution& sol, double s)
{
    const double eps = form.spec.epsilon;
    switch (form.method) {
    case Method::V:
    case Method::W: {
        const auto t = eval_analytic_triple(sol, s);
        return {t[0], t[1], t[2]};
    }
    case Method::Vz:
    case Method::Wz: {
        const auto z = exact_z(sol, s);
        return {z.z, z.dz, z.ddz};
    }
    case Method::RWz: {
        // psi(y) = z(eps y) / eps, so psi' = z', psi'' = eps z''
        const auto z = exact_z(sol, std::min(1.0, eps * s));
        return {z.z / eps, z.dz, eps * z.ddz};
    }
    }
    return {};
}

NetworkParams perturbed_params(std::uint64_t seed)
{
    auto p = init_params(Architecture::standard(), seed, Precision::Double);
    for (std::size_t i = 0; i < p.theta.size(); ++i)
        p.theta[i] += 0.1 * std::cos(0.7 * i + seed);
    return p;
}

} // namespace

TEST_CASE("pointwise densities: closed-form values")
{
    const auto spec = ProblemSpec::benchmark(0.1);
    CHECK(residual_v(spec, {}, 0.3).value == doctest::Approx(0.5));
    CHECK(boundary_v(spec, 0.0, 0.0, Endpoint::Left).value == 0.0);
    // S = (1 - lambda)(alpha n psi' + kappa psi - g)^2
    CHECK(boundary_v(spec, 2.0, 3.0, Endpoint::Left).value == doctest::Approx(0.5 * std::pow(-3e-3 + 2.0, 2)));
    FloatFlags f;
    CHECK(residual_vz(spec, {}, 0.0, f).value == doctest::Approx(0.5 / (0.1 * 0.1)));
    CHECK(energy_wz(spec, {}, 0.4, f).value == 0.0);
    CHECK(energy_boundary_wz(spec, 0.0, Endpoint::Right, f).value == 0.0);
    CHECK(energy_w(spec, {}, 0.4, f).value == 0.0);
    CHECK(energy_rwz(spec, {}, 2.0, f).value == 0.0);
    CHECK_FALSE(f.any());

    // quadratic parts at psi = 1
    const auto q = ProblemSpec::benchmark(0.25);
    const auto wz = Formulation::make(Method::Wz, q);
    CHECK(bulk_density(wz, 0.5, {1.0, 0.0, 0.0}, f, BulkPart::Quadratic).value == doctest::Approx(2.0));
    const auto rwz = Formulation::make(Method::RWz, q);
    CHECK(bulk_density(rwz, 3.0, {1.0, 0.0, 0.0}, f, BulkPart::Quadratic).value == doctest::Approx(0.125));
    // boundary energy: 1/2 (kappa/alpha + V' n/(2 eps)) psi^2 at x = 1 is 1/2 (1000 + 2)
    CHECK(energy_boundary_wz(q, 1.0, Endpoint::Right, f).value == doctest::Approx(0.5 * 1002.0));
    CHECK(energy_boundary_wz(q, 1.0, Endpoint::Left, f).value == doctest::Approx(0.5 * 998.0));
    // rescaled: 1/2 (eps kappa/alpha + V~' n/2) = 1/2 (250 + 0.5)
    CHECK(energy_boundary_rwz(q, 1.0, Endpoint::Right, f).value == doctest::Approx(0.5 * 250.5));
}

TEST_CASE("density partials match finite differences")
{
    const auto spec = ProblemSpec::benchmark(0.3);
    const EvalTriple t{0.4, -1.3, 2.2};
    const double h = 1e-6;
    for (Method m : kAll) {
        const auto form = Formulation::make(m, spec);
        const double x = m == Method::RWz ? 1.7 : 0.6;
        FloatFlags f;
        const auto d = bulk_density(form, x, t, f);
        auto shift = [&](int which, double by) {
            EvalTriple s = t;
            (which == 0 ? s.value : which == 1 ? s.dvalue : s.ddvalue) += by;
            return bulk_density(form, x, s, f).value;
        };
        CHECK(d.d_value == doctest::Approx((shift(0, h) - shift(0, -h)) / (2 * h)).epsilon(1e-6));
        CHECK(d.d_slope == doctest::Approx((shift(1, h) - shift(1, -h)) / (2 * h)).epsilon(1e-6));
        CHECK(d.d_curvature == doctest::Approx((shift(2, h) - shift(2, -h)) / (2 * h)).epsilon(1e-6).scale(1.0));
        for (Endpoint e : {Endpoint::Left, Endpoint::Right}) {
            const auto b = boundary_density(form, e, 0.4, -1.3, f);
            const double dv = (boundary_density(form, e, 0.4 + h, -1.3, f).value
                               - boundary_density(form, e, 0.4 - h, -1.3, f).value)
                / (2 * h);
            const double ds = (boundary_density(form, e, 0.4, -1.3 + h, f).value
                               - boundary_density(form, e, 0.4, -1.3 - h, f).value)
                / (2 * h);
            CHECK(b.d_value == doctest::Approx(dv).epsilon(1e-6));
            CHECK(b.d_slope == doctest::Approx(ds).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("strong residuals vanish at the exact solution")
{
    for (double eps : {0.1, 1.0, 10.0}) {
        const auto spec = ProblemSpec::benchmark(eps);
        const auto sol = solve_analytic(spec);
        for (Method m : {Method::V, Method::Vz}) {
            const auto form = Formulation::make(m, spec);
            for (int i = 1; i < 50; ++i) {
                const double x = i / 50.0;
                FloatFlags f;
                const double r = bulk_density(form, x, exact_target(form, sol, x), f).value;
                CHECK(r <= 1e-8 * (1.0 + 1.0 / (eps * eps)) * (m == Method::Vz ? std::exp(x / eps) : 1.0));
            }
            FloatFlags f;
            for (Endpoint e : {Endpoint::Left, Endpoint::Right}) {
                const auto t = exact_target(form, sol, e == Endpoint::Left ? 0.0 : 1.0);
                CHECK(boundary_density(form, e, t.value, t.dvalue, f).value < 1e-16);
            }
        }
    }
}

TEST_CASE("rescaled problem: exact z~ satisfies its Euler-Lagrange equation")
{
    // -z~'' + (F^2/4) z~ = f e^{-F y/2}; the density partials give d_slope = z~' and
    // d_value = (F^2/4) z~ - f e^{-F y/2}, so d/dy d_slope = d_value.
    const double eps = 0.25;
    const auto spec = ProblemSpec::benchmark(eps);
    const auto sol = solve_analytic(spec);
    const auto form = Formulation::make(Method::RWz, spec);
    const double h = 1e-5;
    for (double y : {0.4, 1.5, 3.2}) {
        FloatFlags f;
        const auto d = bulk_density(form, y, exact_target(form, sol, y), f);
        const double dp = bulk_density(form, y + h, exact_target(form, sol, y + h), f).d_slope;
        const double dm = bulk_density(form, y - h, exact_target(form, sol, y - h), f).d_slope;
        CHECK((dp - dm) / (2 * h) == doctest::Approx(d.d_value).epsilon(1e-6));
    }
}

TEST_CASE("zero network under V with K = 10 uniform")
{
    const auto form = Formulation::make(Method::V, ProblemSpec::benchmark(1.0));
    auto p = init_params(Architecture::standard(), 0, Precision::Double);
    std::fill(p.theta.begin(), p.theta.end(), 0.0);
    const auto l = discrete_loss(form, p, uniform_rule(10, 1.0));
    CHECK(l.bulk == doctest::Approx(0.5));
    CHECK(l.boundary == 0.0);
    CHECK(l.total == l.bulk + l.boundary);
    const auto lf = loss_of_function(form, uniform_rule(10, 1.0), zero_triple);
    CHECK(lf.total == doctest::Approx(0.5));
}

TEST_CASE("loss gradient matches central differences for every method and sampler")
{
    for (Method m : kAll) {
        for (SamplingScheme s : {SamplingScheme::Uniform, SamplingScheme::Random, SamplingScheme::Exponential}) {
            if (s == SamplingScheme::Exponential && m != Method::Wz)
                continue;
            const auto form = Formulation::make(m, ProblemSpec::benchmark(0.5));
            const auto rule = s == SamplingScheme::Uniform ? uniform_rule(10, form.domain_end)
                : s == SamplingScheme::Random              ? random_rule(10, form.domain_end, 4)
                                                           : exponential_rule(10, 10, form.spec, 4);
            auto p = perturbed_params(1);
            const auto [loss, grad] = discrete_loss_grad(form, p, rule);
            for (std::size_t i = 0; i < grad.size(); ++i) {
                const double h = 1e-6;
                auto q = p;
                q.theta[i] += h;
                const double fp = discrete_loss(form, q, rule).total;
                q.theta[i] -= 2 * h;
                const double fm = discrete_loss(form, q, rule).total;
                const double fd = (fp - fm) / (2 * h);
                CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5).scale(1e-4 * std::abs(loss.total)));
            }
        }
    }
}

TEST_CASE("exponential rule: total is the sum of both estimators")
{
    const auto form = Formulation::make(Method::Wz, ProblemSpec::benchmark(0.5));
    const auto p = perturbed_params(2);
    const auto rule = exponential_rule(10, 10, form.spec, 8);
    const auto l = discrete_loss(form, p, rule);
    CHECK(l.bulk == l.importance + (l.bulk - l.importance));
    CHECK(l.total == l.bulk + l.boundary);
    CHECK(l.importance != 0.0);

    // the importance part equals -(f/eps) Z/K2 sum psi(x_k)
    double s = 0.0;
    for (double x : rule.importance_points)
        s += forward_triple(p, x).value;
    CHECK(l.importance == doctest::Approx(-(1.0 / 0.5) * rule.normalizer / 10.0 * s).epsilon(1e-12));
}

TEST_CASE("lambda enters linearly in V and Vz")
{
    for (Method m : {Method::V, Method::Vz}) {
        auto spec = ProblemSpec::benchmark(0.7);
        const auto p = perturbed_params(3);
        const auto rule = uniform_rule(20, 1.0);
        auto at = [&](double lambda) {
            spec.lambda = lambda;
            return discrete_loss(Formulation::make(m, spec), p, rule);
        };
        const auto half = at(0.5);
        const auto lo = at(0.25);
        const auto hi = at(0.75);
        CHECK(half.total == doctest::Approx(0.5 * (lo.total + hi.total)).epsilon(1e-12));
        // pure bulk = 2 * bulk(1/2), pure boundary = 2 * boundary(1/2)
        CHECK(lo.bulk == doctest::Approx(0.5 * half.bulk).epsilon(1e-12));
        CHECK(lo.boundary == doctest::Approx(1.5 * half.boundary).epsilon(1e-12));
    }
}

TEST_CASE("W on exact u equals Wz on exact z")
{
    const auto spec = ProblemSpec::benchmark(1.0);
    const auto sol = solve_analytic(spec);
    const auto w = Formulation::make(Method::W, spec);
    const auto wz = Formulation::make(Method::Wz, spec);
    const auto rule = uniform_rule(10000, 1.0);
    const double jw = loss_of_function(w, rule, [&](double x) { return exact_target(w, sol, x); }).total;
    const double jwz = loss_of_function(wz, rule, [&](double x) { return exact_target(wz, sol, x); }).total;
    CHECK(oracle::rel(jw, jwz) < 1e-6);
}

TEST_CASE("energy is minimal at the exact transformed solution (eps = 1)")
{
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    const auto spec = ProblemSpec::benchmark(1.0);
    const auto sol = solve_analytic(spec);
    for (Method m : {Method::Wz, Method::W, Method::RWz}) {
        const auto form = Formulation::make(m, spec);
        const auto rule = uniform_rule(2000, form.domain_end);
        const double j0 = loss_of_function(form, rule, [&](double s) { return exact_target(form, sol, s); }).total;
        for (int trial = 0; trial < 5; ++trial) {
            const double a = coef(gen), b = coef(gen), c = coef(gen);
            const double L = form.domain_end;
            const double k = M_PI / L;
            const double delta = 1e-2;
            const double j = loss_of_function(form, rule, [&](double s) {
                                 auto t = exact_target(form, sol, s);
                                 t.value += delta * (a + b * std::sin(k * s) + c * std::cos(2 * k * s));
                                 t.dvalue += delta * (b * k * std::cos(k * s) - 2 * c * k * std::sin(2 * k * s));
                                 t.ddvalue += delta * (-b * k * k * std::sin(k * s) - 4 * c * k * k * std::cos(2 * k * s));
                                 return t;
                             }).total;
            CHECK(j0 < j);
        }
    }
}

TEST_CASE("serial and parallel kernels")
{
    const auto p = perturbed_params(5);
    for (Method m : kAll) {
        const auto form = Formulation::make(m, ProblemSpec::benchmark(0.2));
        SUBCASE("single block is bit-identical")
        {
            const auto rule = uniform_rule(100, form.domain_end);
            const auto s = discrete_loss_grad(form, p, rule, Execution::Serial);
            const auto q = discrete_loss_grad(form, p, rule, Execution::Parallel);
            CHECK(s.first.total == q.first.total);
            CHECK(s.second == q.second);
        }
        SUBCASE("many blocks agree to rounding")
        {
            const auto rule = uniform_rule(3000, form.domain_end);
            const auto s = discrete_loss_grad(form, p, rule, Execution::Serial);
            const auto q = discrete_loss_grad(form, p, rule, Execution::Parallel);
            CHECK(oracle::rel(s.first.total, q.first.total) < 1e-12);
            for (std::size_t i = 0; i < s.second.size(); ++i)
                CHECK(q.second[i] == doctest::Approx(s.second[i]).epsilon(1e-10).scale(1e-12));
        }
    }
}

TEST_CASE("parallel kernel is independent of the thread count")
{
    const auto p = perturbed_params(6);
    const auto form = Formulation::make(Method::Wz, ProblemSpec::benchmark(0.2));
    const auto rule = uniform_rule(5000, 1.0);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto one = discrete_loss_grad(form, p, rule, Execution::Parallel);
    omp_set_num_threads(4);
    const auto four = discrete_loss_grad(form, p, rule, Execution::Parallel);
    omp_set_num_threads(saved);
    CHECK(one.first.total == four.first.total);
    CHECK(one.second == four.second);
}

TEST_CASE("single-precision gradient stays close to double")
{
    const auto form = Formulation::make(Method::V, ProblemSpec::benchmark(1.0));
    auto p = perturbed_params(7);
    p.precision = Precision::Single;
    p.round_to_precision();
    auto d = p;
    d.precision = Precision::Double;
    const auto rule = uniform_rule(50, 1.0);
    const auto gs = discrete_loss_grad(form, p, rule).second;
    const auto gd = discrete_loss_grad(form, d, rule).second;
    double norm = 0.0;
    for (double g : gd)
        norm = std::max(norm, std::abs(g));
    for (std::size_t i = 0; i < gs.size(); ++i)
        CHECK(std::abs(gs[i] - gd[i]) < 1e-4 * norm);
}

TEST_CASE("reduced-precision exponentials raise flags")
{
    // e^{-V/(2 eps)} = e^{-F x/(2 eps)} reaches e^{-+100} at eps = 5e-3
    auto reversed = ProblemSpec::benchmark(5e-3);
    reversed.F = -1.0;
    for (Method m : {Method::Vz, Method::W, Method::Wz}) {
        CAPTURE(to_string(m));
        LossEngine decay(Formulation::make(m, ProblemSpec::benchmark(5e-3)), uniform_rule(100, 1.0),
                         Architecture::standard(), Precision::Single);
        CHECK(decay.coefficient_flags().underflow);
        CHECK_FALSE(decay.coefficient_flags().overflow);
        LossEngine grow(Formulation::make(m, reversed), uniform_rule(100, 1.0), Architecture::standard(),
                        Precision::Single);
        CHECK(grow.coefficient_flags().overflow);
    }
    SUBCASE("overflowed coefficients make the loss infinite")
    {
        LossEngine engine(Formulation::make(Method::Vz, reversed), uniform_rule(100, 1.0), Architecture::standard(),
                          Precision::Single);
        const auto p = init_params(Architecture::standard(), 0, Precision::Single);
        CHECK(engine.evaluate(p.theta).flags.overflow);
    }
    SUBCASE("double precision is quiet")
    {
        const auto form = Formulation::make(Method::Vz, ProblemSpec::benchmark(5e-3));
        LossEngine engine(form, uniform_rule(100, 1.0), Architecture::standard(), Precision::Double);
        CHECK_FALSE(engine.coefficient_flags().any());
    }
}

TEST_CASE("rule compatibility and non-finite losses")
{
    const auto spec = ProblemSpec::benchmark(0.1);
    const auto p = perturbed_params(0);
    CHECK_THROWS_AS(discrete_loss(Formulation::make(Method::RWz, spec), p, uniform_rule(10, 1.0)), SamplerMismatch);
    CHECK_NOTHROW(discrete_loss(Formulation::make(Method::RWz, spec), p, uniform_rule(10, 10.0)));
    CHECK_THROWS_AS(discrete_loss(Formulation::make(Method::V, spec), p, exponential_rule(5, 5, spec, 0)),
                    SamplerMismatch);
    auto bad = p;
    bad.theta[3] = NAN;
    CHECK_THROWS_AS(discrete_loss(Formulation::make(Method::V, spec), bad, uniform_rule(10, 1.0)), NonFinite);
}

TEST_CASE("reconstruction")
{
    const auto p = perturbed_params(9);
    const double eps = 0.3;
    const auto spec = ProblemSpec::benchmark(eps);
    const double h = 1e-6;
    for (Method m : kAll) {
        const TrainedModel model{Formulation::make(m, spec), p};
        for (double x : {0.1, 0.5, 0.9}) {
            const auto r = reconstruct(model, x);
            CHECK_FALSE(r.overflow);
            double expected = 0.0;
            switch (m) {
            case Method::V:
            case Method::W:
                expected = forward_triple(p, x).value;
                break;
            case Method::Vz:
            case Method::Wz:
                expected = std::exp(x / (2 * eps)) * forward_triple(p, x).value;
                break;
            case Method::RWz:
                expected = eps * std::exp(x / (2 * eps)) * forward_triple(p, x / eps).value;
                break;
            }
            CHECK(r.u == doctest::Approx(expected).epsilon(1e-12));
            const double fd = (reconstruct(model, x + h).u - reconstruct(model, x - h).u) / (2 * h);
            CHECK(r.du == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
        }
        CHECK_THROWS_AS(reconstruct(model, 1.01), DomainError);
    }
}
