#include "cdpinn/metrics.hpp"

#include "cdpinn/errors.hpp"

#include <cmath>
#include <limits>

namespace cdpinn {

std::vector<double> test_points(int K)
{
    if (K < 1)
        throw InvalidArgument("K must be >= 1");
    const int n = 10 * K;
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        xs[static_cast<std::size_t>(k)] = (k + 0.5) / n;
    return xs;
}

ErrorReport compute_errors(const Predictor& predict, const AnalyticSolution& sol, int K)
{
    const auto xs = test_points(K);
    ErrorReport r;
    r.n_test_points = static_cast<int>(xs.size());
    double sum_l2 = 0.0;
    double sum_h1 = 0.0;
    for (double x : xs) {
        const Prediction p = predict(x);
        if (p.flagged || !std::isfinite(p.u) || !std::isfinite(p.du)) {
            r.overflow_flag = true;
            continue;
        }
        const auto exact = eval_analytic(sol, x);
        const double du = exact.value - p.u;
        const double ds = exact.slope - p.du;
        sum_l2 += du * du;
        sum_h1 += ds * ds;
    }
    if (r.overflow_flag) {
        r.e_l2 = r.e_h1 = std::numeric_limits<double>::infinity();
        return r;
    }
    r.e_l2 = std::sqrt(sum_l2 / static_cast<double>(xs.size()));
    r.e_h1 = std::sqrt(sum_h1 / static_cast<double>(xs.size()));
    return r;
}

} // namespace cdpinn
