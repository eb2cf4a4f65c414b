#pragma once

#include "cdpinn/problem.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace cdpinn {

enum class SamplingScheme { Uniform, Random, Exponential };

std::string_view to_string(SamplingScheme s);
/// Accepts u/r/e and uniform/random/exponential.
SamplingScheme parse_sampling(std::string_view s);

/// Points and weights discretizing the bulk and boundary integrals of a loss.
///
/// For the exponential scheme the bulk set holds the uniformly drawn points
/// (quadratic part of the energy) and the importance set holds the points
/// drawn from e^{-V/(2 eps)} / Z (source part, density factor removed).
struct QuadratureRule {
    SamplingScheme scheme = SamplingScheme::Uniform;
    double domain_end = 1.0;
    std::vector<double> bulk_points;
    std::vector<double> bulk_weights;
    std::vector<double> boundary_points;
    std::vector<double> boundary_weights;
    std::vector<double> importance_points;
    std::vector<double> importance_weights;
    double normalizer = 0.0;  ///< Z_eps, exponential scheme only
    bool overflow = false;    ///< Z_eps not representable in double

    std::size_t bulk_size() const { return bulk_points.size(); }
};

/// Midpoints of K equal cells of (0, domain_end), weight domain_end / K.
QuadratureRule uniform_rule(int K, double domain_end);

/// K iid uniform points in (0, domain_end), weight domain_end / K.
QuadratureRule random_rule(int K, double domain_end, std::uint64_t seed);

/// K1 uniform points with weight 1/K1, plus K2 importance points from the
/// density e^{-V(x)/(2 eps)} / Z_eps on (0,1) with weight Z_eps / K2.
QuadratureRule exponential_rule(int K1, int K2, const ProblemSpec& spec, std::uint64_t seed);

struct Normalizer {
    double value = 0.0;
    bool overflow = false;
};

/// Z_eps = int_0^1 e^{-V(x)/(2 eps)} dx = (2 eps / F)(1 - e^{-F/(2 eps)}).
Normalizer exponential_normalizer(const ProblemSpec& spec);

/// Inverse CDF of the truncated exponential density proportional to e^{a x}
/// on (0,1), evaluated without forming e^{a} for large a.
double truncated_exponential_quantile(double u, double a);

} // namespace cdpinn
