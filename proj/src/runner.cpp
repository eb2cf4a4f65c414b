#include "cdpinn/runner.hpp"

#include "cdpinn/csv.hpp"
#include "cdpinn/errors.hpp"
#include "cdpinn/fem.hpp"
#include "cdpinn/lbfgs.hpp"
#include "cdpinn/metrics.hpp"
#include "cdpinn/problem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>

namespace cdpinn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double fem_relative_residual(const FemSystem& sys)
{
    const auto mc = sys.apply(sys.coefficients);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < mc.size(); ++i) {
        num += (mc[i] - sys.rhs[i]) * (mc[i] - sys.rhs[i]);
        den += sys.rhs[i] * sys.rhs[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

RunRecord blank_record(const RunConfig& cfg)
{
    RunRecord r;
    r.run_id = cfg.run_id();
    r.method = std::string(to_string(cfg.solver));
    r.sampler = std::string(to_string(cfg.sampler));
    r.precision = std::string(to_string(cfg.precision));
    r.epsilon = cfg.epsilon;
    r.k_train = cfg.k;
    r.seed = cfg.seed();
    r.repetition = cfg.repetition;
    r.e_l2 = r.e_h1 = kInf;
    r.final_loss = kInf;
    return r;
}

void fill_prediction(RunRecord& r, const AnalyticSolution& sol, const Predictor& predict)
{
    const auto xs = prediction_grid();
    r.prediction.reserve(xs.size());
    for (double x : xs) {
        const Prediction p = predict(x);
        const auto exact = eval_analytic(sol, x);
        r.prediction.push_back({x, p.flagged ? kInf : p.u, p.flagged ? kInf : p.du, exact.value, exact.slope});
    }
}

RunRecord run_fem(const RunConfig& cfg)
{
    RunRecord r = blank_record(cfg);
    using Clock = std::chrono::steady_clock;
    try {
        const ProblemSpec spec = ProblemSpec::benchmark(cfg.epsilon);
        const auto sol = solve_analytic(spec);
        const auto t0 = Clock::now();
        FemSystem sys = assemble(spec, cfg.k);
        solve(sys);
        r.runtime_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        r.final_loss = fem_relative_residual(sys);
        const Predictor predict = [&](double x) {
            const auto v = eval_fem(sys, x);
            return Prediction{v.value, v.slope, false};
        };
        const auto report = compute_errors(predict, sol, cfg.k);
        r.e_l2 = report.e_l2;
        r.e_h1 = report.e_h1;
        r.status = report.overflow_flag ? "overflow" : "converged";
        if (cfg.keep_prediction)
            fill_prediction(r, sol, predict);
    } catch (const Error&) {
        r.status = "failed";
    }
    return r;
}

QuadratureRule build_rule(const RunConfig& cfg, const Formulation& form)
{
    switch (cfg.sampler) {
    case SamplingScheme::Uniform:
        return uniform_rule(cfg.k, form.domain_end);
    case SamplingScheme::Random:
        return random_rule(cfg.k, form.domain_end, cfg.seed());
    case SamplingScheme::Exponential:
        return exponential_rule(cfg.k, cfg.k, form.spec, cfg.seed());
    }
    throw InvalidArgument("unknown sampling scheme");
}

RunRecord run_network(const RunConfig& cfg, Method method)
{
    RunRecord r = blank_record(cfg);
    using Clock = std::chrono::steady_clock;
    try {
        const ProblemSpec spec = ProblemSpec::benchmark(cfg.epsilon);
        const auto sol = solve_analytic(spec);
        const Formulation form = Formulation::make(method, spec);
        QuadratureRule rule = build_rule(cfg, form);
        LossEngine engine(form, std::move(rule), cfg.arch, cfg.precision);
        NetworkParams params = init_params(cfg.arch, cfg.seed(), cfg.precision);

        LbfgsConfig opt = LbfgsConfig::for_precision(cfg.precision);
        if (cfg.max_iterations > 0)
            opt.max_iterations = cfg.max_iterations;

        const Objective objective = [&engine](std::span<const double> x, std::span<double> g) {
            return engine.evaluate(x, g).total;
        };
        const auto t0 = Clock::now();
        const OptimResult res = minimize(objective, params.theta, opt);
        r.runtime_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

        params.theta = res.x;
        params.round_to_precision();
        const LossBreakdown final_loss = engine.evaluate(params.theta);
        r.final_loss = final_loss.total;
        r.iterations = res.iterations;

        const TrainedModel model{form, params};
        const Predictor predict = [&model](double x) {
            const auto rec = reconstruct(model, x);
            return Prediction{rec.u, rec.du, rec.overflow};
        };
        const auto report = compute_errors(predict, sol, cfg.k);
        r.e_l2 = report.e_l2;
        r.e_h1 = report.e_h1;

        const FloatFlags flags = final_loss.flags;
        if (report.overflow_flag || flags.overflow || engine.rule().overflow)
            r.status = "overflow";
        else if (res.status == OptimStatus::Diverged)
            r.status = "diverged";
        else if (flags.underflow)
            r.status = "underflow";
        else
            r.status = std::string(to_string(res.status));
        if (cfg.keep_prediction)
            fill_prediction(r, sol, predict);
    } catch (const Error&) {
        r.status = "failed";
    }
    return r;
}

std::string group_key(const RunConfig& cfg)
{
    RunConfig g = cfg;
    g.repetition = 0;
    return g.run_id();
}

// Strict weak order on (e_h1, repetition) with NaN last.
bool better(const RunRecord& a, const RunRecord& b)
{
    const bool an = std::isnan(a.e_h1);
    const bool bn = std::isnan(b.e_h1);
    if (an != bn)
        return bn;
    if (!an && a.e_h1 != b.e_h1)
        return a.e_h1 < b.e_h1;
    return a.repetition < b.repetition;
}

void replace_file(const std::filesystem::path& tmp, const std::filesystem::path& dst)
{
    std::filesystem::rename(tmp, dst);
}

} // namespace

std::string_view to_string(Solver s)
{
    switch (s) {
    case Solver::V: return "v";
    case Solver::Vz: return "vz";
    case Solver::W: return "w";
    case Solver::Wz: return "wz";
    case Solver::RWz: return "rwz";
    case Solver::Fem: return "fem";
    }
    return "?";
}

Solver parse_solver(std::string_view s)
{
    if (s == "fem")
        return Solver::Fem;
    switch (parse_method(s)) {
    case Method::V: return Solver::V;
    case Method::Vz: return Solver::Vz;
    case Method::W: return Solver::W;
    case Method::Wz: return Solver::Wz;
    case Method::RWz: return Solver::RWz;
    }
    throw InvalidArgument("unknown method '" + std::string(s) + "'");
}

std::optional<Method> network_method(Solver s)
{
    switch (s) {
    case Solver::V: return Method::V;
    case Solver::Vz: return Method::Vz;
    case Solver::W: return Method::W;
    case Solver::Wz: return Method::Wz;
    case Solver::RWz: return Method::RWz;
    case Solver::Fem: return std::nullopt;
    }
    return std::nullopt;
}

RunConfig RunConfig::canonical() const
{
    RunConfig c = *this;
    if (solver == Solver::Fem) {
        c.sampler = SamplingScheme::Uniform;
        c.precision = Precision::Double;
        c.repetition = 0;
    }
    return c;
}

std::string RunConfig::run_id() const
{
    const RunConfig c = canonical();
    std::string id;
    id += to_string(c.solver);
    id += '-';
    id += to_string(c.sampler);
    id += '-';
    id += to_string(c.precision);
    id += "-eps" + format_double(c.epsilon);
    id += "-k" + std::to_string(c.k);
    id += "-r" + std::to_string(c.repetition);
    return id;
}

RunRecord run_single(const RunConfig& cfg)
{
    const RunConfig c = cfg.canonical();
    if (c.k < 1)
        throw InvalidArgument("K must be >= 1");
    if (!(c.epsilon > 0.0))
        throw InvalidArgument("epsilon must be positive");
    if (const auto m = network_method(c.solver))
        return run_network(c, *m);
    return run_fem(c);
}

std::vector<double> prediction_grid()
{
    std::vector<double> xs(201);
    for (int i = 0; i <= 200; ++i)
        xs[static_cast<std::size_t>(i)] = i / 200.0;
    return xs;
}

std::vector<double> log_spaced(double lo, double hi, int count)
{
    if (count < 1 || !(lo > 0.0) || !(hi >= lo))
        throw InvalidArgument("log_spaced needs count >= 1 and 0 < lo <= hi");
    if (count == 1)
        return {lo};
    std::vector<double> out(static_cast<std::size_t>(count));
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

void SweepConfig::validate() const
{
    if (epsilons.empty() || ks.empty() || solvers.empty() || samplers.empty() || precisions.empty())
        throw InvalidArgument("sweep grids must be nonempty");
    if (repetitions < 1)
        throw InvalidArgument("repetitions must be >= 1");
    for (double e : epsilons)
        if (!(e > 0.0) || !std::isfinite(e))
            throw InvalidArgument("epsilon values must be positive and finite");
    for (int k : ks)
        if (k < 1)
            throw InvalidArgument("K values must be >= 1");
}

std::vector<RunConfig> expand_grid(const SweepConfig& sweep)
{
    sweep.validate();
    std::vector<RunConfig> out;
    std::set<std::string> seen;
    for (Solver s : sweep.solvers)
        for (SamplingScheme smp : sweep.samplers)
            for (Precision p : sweep.precisions)
                for (double eps : sweep.epsilons)
                    for (int k : sweep.ks)
                        for (int rep = 0; rep < sweep.repetitions; ++rep) {
                            if (smp == SamplingScheme::Exponential && s != Solver::Wz && s != Solver::Fem)
                                continue;
                            RunConfig c;
                            c.solver = s;
                            c.sampler = smp;
                            c.precision = p;
                            c.epsilon = eps;
                            c.k = k;
                            c.repetition = rep;
                            c.base_seed = sweep.base_seed;
                            c.max_iterations = sweep.max_iterations;
                            c = c.canonical();
                            if (seen.insert(c.run_id()).second)
                                out.push_back(c);
                        }
    return out;
}

std::string format_record(const RunRecord& r)
{
    std::string line;
    line += csv_field(r.run_id) + ',';
    line += csv_field(r.method) + ',';
    line += csv_field(r.sampler) + ',';
    line += csv_field(r.precision) + ',';
    line += format_double(r.epsilon) + ',';
    line += std::to_string(r.k_train) + ',';
    line += std::to_string(r.seed) + ',';
    line += std::to_string(r.repetition) + ',';
    line += format_double(r.e_l2) + ',';
    line += format_double(r.e_h1) + ',';
    line += format_double(r.final_loss) + ',';
    line += std::to_string(r.iterations) + ',';
    line += format_double(r.runtime_ms) + ',';
    line += csv_field(r.status);
    return line;
}

RunRecord parse_record(std::string_view line)
{
    const auto f = split_csv_line(line);
    if (f.size() != 14)
        throw InvalidArgument("runs.csv row has " + std::to_string(f.size()) + " fields, expected 14");
    RunRecord r;
    r.run_id = f[0];
    r.method = f[1];
    r.sampler = f[2];
    r.precision = f[3];
    r.epsilon = parse_double(f[4]);
    r.k_train = std::stoi(f[5]);
    r.seed = std::stoull(f[6]);
    r.repetition = std::stoi(f[7]);
    r.e_l2 = parse_double(f[8]);
    r.e_h1 = parse_double(f[9]);
    r.final_loss = parse_double(f[10]);
    r.iterations = std::stoi(f[11]);
    r.runtime_ms = parse_double(f[12]);
    r.status = f[13];
    return r;
}

std::vector<RunRecord> read_runs(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kRunsHeader)
        throw InvalidArgument(path.string() + ": unexpected header");
    std::vector<RunRecord> out;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        // A row cut short by an interrupted append fails to parse; appends
        // happen one row at a time, so only the last line can be affected.
        try {
            out.push_back(parse_record(line));
        } catch (const std::exception&) {
            if (in.peek() != std::char_traits<char>::eof())
                throw;
        }
    }
    return out;
}

void write_runs(const std::filesystem::path& path, const std::vector<RunRecord>& records)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out << kRunsHeader << '\n';
        for (const auto& r : records)
            out << format_record(r) << '\n';
        if (!out.flush())
            throw Error("write failed: " + tmp.string());
    }
    replace_file(tmp, path);
}

SweepResult run_sweep(const SweepConfig& sweep)
{
    const auto grid = expand_grid(sweep);
    std::filesystem::create_directories(sweep.output_dir);
    const auto runs_path = sweep.output_dir / "runs.csv";
    const auto pred_path = sweep.output_dir / "predictions.csv";

    std::set<std::string> grid_ids;
    for (const auto& c : grid)
        grid_ids.insert(c.run_id());

    std::map<std::string, RunRecord> done;
    if (std::filesystem::exists(runs_path)) {
        auto previous = read_runs(runs_path);
        for (auto& r : previous)
            done.emplace(r.run_id, std::move(r));
        // Rewrite so that a truncated tail does not corrupt later appends.
        std::vector<RunRecord> keep;
        keep.reserve(done.size());
        for (const auto& c : grid)
            if (auto it = done.find(c.run_id()); it != done.end())
                keep.push_back(it->second);
        for (const auto& [id, r] : done)
            if (!grid_ids.count(id))
                keep.push_back(r);
        write_runs(runs_path, keep);
    } else {
        write_runs(runs_path, {});
    }

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!done.count(grid[i].run_id()))
            todo.push_back(i);

    SweepResult result;
    result.resumed = static_cast<int>(grid.size() - todo.size());
    std::vector<RunRecord> computed(grid.size());
    std::map<std::string, RunRecord> best;  // group -> best record with prediction

    std::ofstream append(runs_path, std::ios::app);
    if (!append)
        throw Error("cannot append to " + runs_path.string());

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(todo.size()); ++t) {
        const std::size_t i = todo[static_cast<std::size_t>(t)];
        RunConfig cfg = grid[i];
        cfg.keep_prediction = sweep.write_predictions;
        RunRecord rec = run_single(cfg);
#pragma omp critical(cdpinn_sweep_writer)
        {
            append << format_record(rec) << '\n';
            append.flush();
            if (sweep.verbose)
                std::cerr << rec.run_id << " " << rec.status << " e_h1=" << format_double(rec.e_h1) << '\n';
            if (sweep.write_predictions) {
                const std::string key = group_key(cfg);
                auto it = best.find(key);
                if (it == best.end() || better(rec, it->second))
                    best[key] = rec;
            }
            rec.prediction.clear();
            rec.prediction.shrink_to_fit();
            computed[i] = std::move(rec);
        }
    }
    append.close();
    result.computed = static_cast<int>(todo.size());

    result.records.reserve(grid.size());
    std::map<std::string, std::size_t> best_index;  // group -> index into records
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto it = done.find(grid[i].run_id());
        result.records.push_back(it != done.end() ? it->second : computed[i]);
        const std::string key = group_key(grid[i]);
        auto b = best_index.find(key);
        if (b == best_index.end() || better(result.records.back(), result.records[b->second]))
            best_index[key] = i;
    }
    // Rows from earlier sweeps over a different grid are kept after ours.
    std::vector<RunRecord> all = result.records;
    for (const auto& [id, r] : done)
        if (!grid_ids.count(id))
            all.push_back(r);
    write_runs(runs_path, all);

    if (sweep.write_predictions) {
        auto tmp = pred_path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            if (!out)
                throw Error("cannot write " + tmp.string());
            out << kPredictionsHeader << '\n';
            for (const auto& [key, idx] : best_index) {
                const RunRecord& winner = result.records[idx];
                std::vector<PredictionRow> rows;
                if (auto it = best.find(key); it != best.end() && it->second.run_id == winner.run_id) {
                    rows = it->second.prediction;
                } else {
                    // The winner came from an earlier, resumed sweep: recompute it.
                    RunConfig cfg = grid[idx];
                    cfg.keep_prediction = true;
                    rows = run_single(cfg).prediction;
                }
                for (const auto& p : rows)
                    out << csv_field(winner.run_id) << ',' << format_double(p.x) << ',' << format_double(p.u_pred)
                        << ',' << format_double(p.du_pred) << ',' << format_double(p.u_exact) << ','
                        << format_double(p.du_exact) << '\n';
            }
            if (!out.flush())
                throw Error("write failed: " + tmp.string());
        }
        replace_file(tmp, pred_path);
    }
    return result;
}

} // namespace cdpinn
