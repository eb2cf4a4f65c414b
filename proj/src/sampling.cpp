#include "cdpinn/sampling.hpp"

#include "cdpinn/errors.hpp"
#include "cdpinn/rng.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cdpinn {

std::string_view to_string(SamplingScheme s)
{
    switch (s) {
    case SamplingScheme::Uniform:
        return "u";
    case SamplingScheme::Random:
        return "r";
    case SamplingScheme::Exponential:
        return "e";
    }
    return "u";
}

SamplingScheme parse_sampling(std::string_view s)
{
    if (s == "u" || s == "uniform")
        return SamplingScheme::Uniform;
    if (s == "r" || s == "random")
        return SamplingScheme::Random;
    if (s == "e" || s == "exponential")
        return SamplingScheme::Exponential;
    throw InvalidArgument("unknown sampler '" + std::string(s) + "' (expected u|r|e)");
}

namespace {

void require_count(int K, const char* what)
{
    if (K < 1)
        throw InvalidArgument(std::string(what) + " must be >= 1");
}

void add_boundary(QuadratureRule& rule)
{
    rule.boundary_points = {0.0, rule.domain_end};
    rule.boundary_weights = {1.0, 1.0};
}

double clamp_open(double x, double end)
{
    if (x <= 0.0)
        return std::nextafter(0.0, end);
    if (x >= end)
        return std::nextafter(end, 0.0);
    return x;
}

} // namespace

QuadratureRule uniform_rule(int K, double domain_end)
{
    require_count(K, "K");
    if (!(domain_end > 0.0) || !std::isfinite(domain_end))
        throw InvalidArgument("domain_end must be positive and finite");
    QuadratureRule r;
    r.scheme = SamplingScheme::Uniform;
    r.domain_end = domain_end;
    const double h = domain_end / K;
    r.bulk_points.resize(static_cast<std::size_t>(K));
    r.bulk_weights.assign(static_cast<std::size_t>(K), h);
    for (int k = 0; k < K; ++k)
        r.bulk_points[static_cast<std::size_t>(k)] = (k + 0.5) * h;
    add_boundary(r);
    return r;
}

QuadratureRule random_rule(int K, double domain_end, std::uint64_t seed)
{
    require_count(K, "K");
    if (!(domain_end > 0.0) || !std::isfinite(domain_end))
        throw InvalidArgument("domain_end must be positive and finite");
    QuadratureRule r;
    r.scheme = SamplingScheme::Random;
    r.domain_end = domain_end;
    Rng rng(seed, kStreamBulk);
    r.bulk_points.resize(static_cast<std::size_t>(K));
    r.bulk_weights.assign(static_cast<std::size_t>(K), domain_end / K);
    for (auto& x : r.bulk_points)
        x = clamp_open(rng.open01() * domain_end, domain_end);
    add_boundary(r);
    return r;
}

Normalizer exponential_normalizer(const ProblemSpec& spec)
{
    const double a = -potential_derivs(spec, 0.0).dv / (2.0 * spec.epsilon);
    if (a > kExponentLimit)
        return {std::numeric_limits<double>::infinity(), true};
    if (std::abs(a) < 1e-300)
        return {1.0, false};
    return {std::expm1(a) / a, false};
}

double truncated_exponential_quantile(double u, double a)
{
    if (std::abs(a) < 1e-12)
        return u;
    double x;
    if (a > 50.0) {
        // log(1 + u (e^a - 1)) = a + log(u + (1 - u) e^{-a})
        x = 1.0 + std::log(u + (1.0 - u) * std::exp(-a)) / a;
    } else {
        x = std::log1p(u * std::expm1(a)) / a;
    }
    return clamp_open(x, 1.0);
}

QuadratureRule exponential_rule(int K1, int K2, const ProblemSpec& spec, std::uint64_t seed)
{
    require_count(K1, "K1");
    require_count(K2, "K2");
    if (spec.F == 0.0)
        throw ZeroDrift("exponential sampling needs F != 0");
    QuadratureRule r;
    r.scheme = SamplingScheme::Exponential;
    r.domain_end = 1.0;
    Rng uniform(seed, kStreamBulk);
    r.bulk_points.resize(static_cast<std::size_t>(K1));
    r.bulk_weights.assign(static_cast<std::size_t>(K1), 1.0 / K1);
    for (auto& x : r.bulk_points)
        x = clamp_open(uniform.open01(), 1.0);

    const auto z = exponential_normalizer(spec);
    r.normalizer = z.value;
    r.overflow = z.overflow;
    const double a = -potential_derivs(spec, 0.0).dv / (2.0 * spec.epsilon);
    Rng importance(seed, kStreamImportance);
    r.importance_points.resize(static_cast<std::size_t>(K2));
    r.importance_weights.assign(static_cast<std::size_t>(K2), z.value / K2);
    for (auto& x : r.importance_points)
        x = truncated_exponential_quantile(importance.open01(), a);
    add_boundary(r);
    return r;
}

} // namespace cdpinn
