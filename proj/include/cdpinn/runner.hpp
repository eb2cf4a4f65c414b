#pragma once

#include "cdpinn/formulations.hpp"
#include "cdpinn/network.hpp"
#include "cdpinn/precision.hpp"
#include "cdpinn/sampling.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cdpinn {

/// A network formulation or the finite-element baseline.
enum class Solver { V, Vz, W, Wz, RWz, Fem };

std::string_view to_string(Solver s);
/// v|vz|w|wz|rwz|fem
Solver parse_solver(std::string_view s);
std::optional<Method> network_method(Solver s);

struct RunConfig {
    Solver solver = Solver::V;
    SamplingScheme sampler = SamplingScheme::Uniform;
    Precision precision = Precision::Double;
    double epsilon = 1.0;
    int k = 100;
    int repetition = 0;
    std::uint64_t base_seed = 0;
    int max_iterations = 0;  ///< 0 keeps the optimizer default
    Architecture arch = Architecture::standard();
    bool keep_prediction = false;

    std::uint64_t seed() const { return base_seed + static_cast<std::uint64_t>(repetition); }
    /// FEM runs ignore sampler, precision and repetition; this maps them to
    /// the single canonical FEM run.
    RunConfig canonical() const;
    std::string run_id() const;
};

struct PredictionRow {
    double x = 0.0;
    double u_pred = 0.0;
    double du_pred = 0.0;
    double u_exact = 0.0;
    double du_exact = 0.0;
};

struct RunRecord {
    std::string run_id;
    std::string method;
    std::string sampler;
    std::string precision;
    double epsilon = 0.0;
    int k_train = 0;
    std::uint64_t seed = 0;
    int repetition = 0;
    double e_l2 = 0.0;
    double e_h1 = 0.0;
    double final_loss = 0.0;
    int iterations = 0;
    double runtime_ms = 0.0;
    /// converged | max_iters | line_search_failure | diverged | overflow |
    /// underflow | failed
    std::string status;
    std::vector<PredictionRow> prediction;  ///< filled when requested
};

/// Trains (or solves) one grid point. Failures are reported in `status`.
RunRecord run_single(const RunConfig& cfg);

/// Points at which predictions are written: 201 equally spaced in [0,1].
std::vector<double> prediction_grid();

std::vector<double> log_spaced(double lo, double hi, int count);

struct SweepConfig {
    std::vector<double> epsilons = log_spaced(5e-3, 10.0, 20);
    std::vector<int> ks{10, 100, 1000, 10000};
    std::vector<Solver> solvers{Solver::V, Solver::Vz, Solver::W, Solver::Wz, Solver::RWz, Solver::Fem};
    std::vector<SamplingScheme> samplers{SamplingScheme::Uniform};
    std::vector<Precision> precisions{Precision::Double};
    int repetitions = 10;
    std::uint64_t base_seed = 0;
    int max_iterations = 0;
    std::filesystem::path output_dir = "results";
    bool write_predictions = true;
    bool verbose = false;

    void validate() const;
};

/// Expands the grid. FEM appears once per (epsilon, K); the exponential
/// sampler is only paired with Wz.
std::vector<RunConfig> expand_grid(const SweepConfig& sweep);

struct SweepResult {
    std::vector<RunRecord> records;  ///< grid order
    int computed = 0;
    int resumed = 0;
};

/// Runs every grid point not already present in output_dir/runs.csv,
/// appending each row as it completes, then rewrites runs.csv in grid order
/// and writes predictions.csv for the best repetition (min e_h1) of each
/// (method, sampler, precision, epsilon, K).
SweepResult run_sweep(const SweepConfig& sweep);

inline constexpr std::string_view kRunsHeader =
    "run_id,method,sampler,precision,epsilon,k_train,seed,repetition,e_l2,e_h1,final_loss,iterations,runtime_ms,status";
inline constexpr std::string_view kPredictionsHeader = "run_id,x,u_pred,du_pred,u_exact,du_exact";

std::string format_record(const RunRecord& r);
RunRecord parse_record(std::string_view line);
/// Reads a runs.csv; a truncated final line is ignored.
std::vector<RunRecord> read_runs(const std::filesystem::path& path);
void write_runs(const std::filesystem::path& path, const std::vector<RunRecord>& records);

} // namespace cdpinn
