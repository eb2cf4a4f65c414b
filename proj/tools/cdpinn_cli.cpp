#include "cdpinn/checks.hpp"
#include "cdpinn/csv.hpp"
#include "cdpinn/errors.hpp"
#include "cdpinn/problem.hpp"
#include "cdpinn/runner.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace cdpinn;

struct Options {
    std::vector<std::string> methods;
    std::vector<std::string> samplers;
    std::vector<std::string> precisions;
    std::vector<double> epsilons;
    std::vector<int> ks;
    int reps = 0;
    std::uint64_t seed = 0;
    std::string out;
    int max_iters = 0;
    int threads = 0;
    int points = 201;
    bool verbose = false;
};

template <class T, class Parse>
std::vector<T> parse_all(const std::vector<std::string>& names, Parse parse)
{
    std::vector<T> out;
    for (const auto& n : names)
        out.push_back(parse(n));
    return out;
}

void write_predictions(const std::filesystem::path& path, const RunRecord& r)
{
    std::ofstream out(path);
    out << kPredictionsHeader << '\n';
    for (const auto& p : r.prediction)
        out << csv_field(r.run_id) << ',' << format_double(p.x) << ',' << format_double(p.u_pred) << ','
            << format_double(p.du_pred) << ',' << format_double(p.u_exact) << ',' << format_double(p.du_exact)
            << '\n';
}

int cmd_solve(const Options& o)
{
    if (o.methods.size() > 1 || o.samplers.size() > 1 || o.precisions.size() > 1 || o.epsilons.size() > 1
        || o.ks.size() > 1)
        throw InvalidArgument("solve takes a single value per option; use sweep for grids");
    RunConfig cfg;
    if (!o.methods.empty())
        cfg.solver = parse_solver(o.methods[0]);
    if (!o.samplers.empty())
        cfg.sampler = parse_sampling(o.samplers[0]);
    if (!o.precisions.empty())
        cfg.precision = parse_precision(o.precisions[0]);
    if (!o.epsilons.empty())
        cfg.epsilon = o.epsilons[0];
    if (!o.ks.empty())
        cfg.k = o.ks[0];
    cfg.base_seed = o.seed;
    cfg.max_iterations = o.max_iters;
    cfg.keep_prediction = !o.out.empty();

    const int reps = cfg.solver == Solver::Fem ? 1 : std::max(1, o.reps);
    std::vector<RunRecord> records;
    std::cout << kRunsHeader << '\n';
    for (int rep = 0; rep < reps; ++rep) {
        cfg.repetition = rep;
        records.push_back(run_single(cfg));
        std::cout << format_record(records.back()) << '\n';
    }
    if (!o.out.empty()) {
        const std::filesystem::path dir = o.out;
        std::filesystem::create_directories(dir);
        write_runs(dir / "runs.csv", records);
        const auto best = std::min_element(records.begin(), records.end(),
                                           [](const RunRecord& a, const RunRecord& b) { return a.e_h1 < b.e_h1; });
        write_predictions(dir / "predictions.csv", *best);
    }
    return 0;
}

int cmd_sweep(const Options& o)
{
    SweepConfig sweep;
    if (!o.methods.empty())
        sweep.solvers = parse_all<Solver>(o.methods, parse_solver);
    if (!o.samplers.empty())
        sweep.samplers = parse_all<SamplingScheme>(o.samplers, parse_sampling);
    if (!o.precisions.empty())
        sweep.precisions = parse_all<Precision>(o.precisions, parse_precision);
    if (!o.epsilons.empty())
        sweep.epsilons = o.epsilons;
    if (!o.ks.empty())
        sweep.ks = o.ks;
    if (o.reps > 0)
        sweep.repetitions = o.reps;
    sweep.base_seed = o.seed;
    sweep.max_iterations = o.max_iters;
    if (!o.out.empty())
        sweep.output_dir = o.out;
    sweep.verbose = o.verbose;

    const auto result = run_sweep(sweep);
    std::cerr << "sweep: " << result.records.size() << " runs (" << result.computed << " computed, "
              << result.resumed << " resumed) -> " << (sweep.output_dir / "runs.csv").string() << '\n';
    return 0;
}

int cmd_analytic(const Options& o)
{
    if (o.epsilons.size() != 1)
        throw InvalidArgument("analytic needs exactly one --epsilon");
    if (o.points < 2)
        throw InvalidArgument("--points must be >= 2");
    const auto sol = solve_analytic(ProblemSpec::benchmark(o.epsilons[0]));
    std::ofstream file;
    if (!o.out.empty()) {
        file.open(o.out);
        if (!file)
            throw Error("cannot write " + o.out);
    }
    std::ostream& out = o.out.empty() ? std::cout : file;
    out << "x,u,du\n";
    for (int i = 0; i < o.points; ++i) {
        const double x = static_cast<double>(i) / (o.points - 1);
        const auto v = eval_analytic(sol, x);
        out << format_double(x) << ',' << format_double(v.value) << ',' << format_double(v.slope) << '\n';
    }
    return 0;
}

int cmd_check()
{
    bool ok = true;
    for (const auto& r : run_checks()) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Neural and finite-element solvers for 1D convection-diffusion with Robin data"};
    app.set_config("--config", "", "Flat key=value file; command-line flags override it");
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--method", o.methods, "v|vz|w|wz|rwz|fem (comma list for sweep)")->delimiter(',');
    app.add_option("--sampler", o.samplers, "u|r|e")->delimiter(',');
    app.add_option("--precision", o.precisions, "f16|f32|f64")->delimiter(',');
    app.add_option("--epsilon", o.epsilons, "diffusion coefficient(s)")->delimiter(',');
    app.add_option("--k", o.ks, "training points / FEM nodes")->delimiter(',');
    app.add_option("--reps", o.reps, "repetitions (solve: 1, sweep: 10 when unset)");
    app.add_option("--seed", o.seed, "base seed; repetition r uses seed + r");
    app.add_option("--out", o.out, "output directory (analytic: output file)");
    app.add_option("--max-iters", o.max_iters, "L-BFGS iteration cap (0 = default)");
    app.add_option("--threads", o.threads, "OpenMP threads (0 = runtime default)");
    app.add_option("--points", o.points, "analytic: number of grid points");
    app.add_flag("--verbose,-v", o.verbose, "log each completed run");

    auto* solve = app.add_subcommand("solve", "train or solve one grid point");
    auto* sweep = app.add_subcommand("sweep", "run a parameter grid, writing runs.csv and predictions.csv");
    auto* analytic = app.add_subcommand("analytic", "print the exact solution on a uniform grid");
    auto* check = app.add_subcommand("check", "run quick invariant checks");

    CLI11_PARSE(app, argc, argv);
    if (o.threads > 0)
        omp_set_num_threads(o.threads);

    try {
        if (solve->parsed())
            return cmd_solve(o);
        if (sweep->parsed())
            return cmd_sweep(o);
        if (analytic->parsed())
            return cmd_analytic(o);
        if (check->parsed())
            return cmd_check();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
