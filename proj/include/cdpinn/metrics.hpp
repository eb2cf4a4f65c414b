#pragma once

#include "cdpinn/problem.hpp"

#include <functional>
#include <vector>

namespace cdpinn {

struct Prediction {
    double u = 0.0;
    double du = 0.0;
    bool flagged = false;  ///< producer already detected an overflow
};

using Predictor = std::function<Prediction(double x)>;

struct ErrorReport {
    double e_l2 = 0.0;
    double e_h1 = 0.0;  ///< h1 seminorm error (slopes only)
    bool overflow_flag = false;
    int n_test_points = 0;
};

/// Midpoints of 10K equal cells of (0,1).
std::vector<double> test_points(int K);

/// Root-mean-square value and slope errors over test_points(K). A flagged or
/// non-finite prediction sets overflow_flag and both errors to +inf.
ErrorReport compute_errors(const Predictor& predict, const AnalyticSolution& sol, int K);

} // namespace cdpinn
