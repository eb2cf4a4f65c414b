#pragma once

#include "cdpinn/precision.hpp"

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace cdpinn {

struct LbfgsConfig {
    int history_size = 50;
    int max_iterations = 50000;
    double gradient_tolerance = 1e-8;  ///< on the infinity norm
    /// Stop when (f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1) falls below this.
    double function_tolerance = 2.220446049250313e-16;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int max_line_search_steps = 40;
    bool record_trace = false;

    /// Defaults with the gradient tolerance of the working precision
    /// (1e-8 double, 1e-5 single, 1e-3 half).
    static LbfgsConfig for_precision(Precision p);
    void validate() const;
};

enum class OptimStatus { Converged, MaxIterations, LineSearchFailure, Diverged };

std::string_view to_string(OptimStatus s);

/// One accepted line-search step along direction d from x_k.
struct StepRecord {
    double step = 0.0;
    double f0 = 0.0;      ///< f(x_k)
    double slope0 = 0.0;  ///< grad f(x_k) . d
    double f = 0.0;       ///< f(x_k + step d)
    double slope = 0.0;   ///< grad f(x_k + step d) . d
};

struct OptimResult {
    std::vector<double> x;
    double final_loss = 0.0;
    int iterations = 0;
    int evaluations = 0;
    OptimStatus status = OptimStatus::MaxIterations;
    std::vector<StepRecord> trace;
};

/// Returns f(x) and writes grad f(x) into `grad`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// L-BFGS (two-loop recursion) with a strong-Wolfe line search using cubic
/// interpolation. Non-finite objective values at x0 give status Diverged;
/// non-finite trial points shrink the step, and a line search that never
/// finds a finite point also ends as Diverged.
OptimResult minimize(const Objective& objective, std::vector<double> x0, const LbfgsConfig& config = {});

} // namespace cdpinn
