#include "cdpinn/lbfgs.hpp"

#include "cdpinn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace cdpinn {

LbfgsConfig LbfgsConfig::for_precision(Precision p)
{
    LbfgsConfig c;
    switch (p) {
    case Precision::Half:
        c.gradient_tolerance = 1e-3;
        break;
    case Precision::Single:
        c.gradient_tolerance = 1e-5;
        break;
    case Precision::Double:
        c.gradient_tolerance = 1e-8;
        break;
    }
    return c;
}

void LbfgsConfig::validate() const
{
    if (!(0.0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0))
        throw InvalidArgument("line search constants must satisfy 0 < c1 < c2 < 1");
    if (history_size < 1)
        throw InvalidArgument("history_size must be >= 1");
    if (max_iterations < 0 || max_line_search_steps < 1)
        throw InvalidArgument("iteration limits must be positive");
}

std::string_view to_string(OptimStatus s)
{
    switch (s) {
    case OptimStatus::Converged:
        return "converged";
    case OptimStatus::MaxIterations:
        return "max_iters";
    case OptimStatus::LineSearchFailure:
        return "line_search_failure";
    case OptimStatus::Diverged:
        return "diverged";
    }
    return "diverged";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

double norm_inf(std::span<const double> a)
{
    double m = 0.0;
    for (double v : a)
        m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(double f, std::span<const double> g)
{
    if (!std::isfinite(f))
        return false;
    return std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); });
}

// Minimizer of the cubic through (x1, f1, g1) and (x2, f2, g2), clamped to [lo, hi].
double cubic_minimizer(double x1, double f1, double g1, double x2, double f2, double g2, double lo, double hi)
{
    const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    const double d2_sq = d1 * d1 - g1 * g2;
    if (d2_sq >= 0.0 && std::isfinite(d2_sq)) {
        const double d2 = std::sqrt(d2_sq);
        double pos;
        if (x1 <= x2)
            pos = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2));
        else
            pos = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
        if (std::isfinite(pos))
            return std::clamp(pos, lo, hi);
    }
    return 0.5 * (lo + hi);
}

struct Trial {
    double step = 0.0;
    double f = 0.0;
    double slope = 0.0;
    std::vector<double> x;
    std::vector<double> g;
    bool finite = false;
};

enum class SearchOutcome { Accepted, Failed, NonFinite };

class LineSearch {
public:
    LineSearch(const Objective& obj, const LbfgsConfig& cfg, int& evaluations)
        : obj_(obj)
        , cfg_(cfg)
        , evaluations_(evaluations)
    {
    }

    SearchOutcome run(std::span<const double> x, double f0, double slope0, std::span<const double> d, double step0,
                      Trial& out)
    {
        x_ = x;
        d_ = d;
        f0_ = f0;
        slope0_ = slope0;
        steps_ = 0;
        saw_finite_ = false;

        Trial prev;
        prev.step = 0.0;
        prev.f = f0;
        prev.slope = slope0;
        prev.finite = true;
        double step = step0;
        bool first = true;
        while (steps_ < cfg_.max_line_search_steps) {
            Trial cur = evaluate(step);
            if (!cur.finite) {
                step = 0.5 * (prev.step + step);
                continue;
            }
            if (cur.f > f0_ + cfg_.wolfe_c1 * cur.step * slope0_ || (!first && cur.f >= prev.f))
                return zoom(prev, cur, out);
            if (std::abs(cur.slope) <= -cfg_.wolfe_c2 * slope0_) {
                out = std::move(cur);
                return SearchOutcome::Accepted;
            }
            if (cur.slope >= 0.0)
                return zoom(cur, prev, out);
            const double lo = cur.step + 0.01 * (cur.step - prev.step);
            const double hi = 10.0 * cur.step;
            step = cubic_minimizer(prev.step, prev.f, prev.slope, cur.step, cur.f, cur.slope, lo, hi);
            prev = std::move(cur);
            first = false;
        }
        return saw_finite_ ? SearchOutcome::Failed : SearchOutcome::NonFinite;
    }

private:
    Trial evaluate(double step)
    {
        Trial t;
        t.step = step;
        t.x.resize(x_.size());
        for (std::size_t i = 0; i < x_.size(); ++i)
            t.x[i] = x_[i] + step * d_[i];
        t.g.assign(x_.size(), 0.0);
        t.f = obj_(t.x, t.g);
        ++evaluations_;
        ++steps_;
        t.finite = all_finite(t.f, t.g);
        if (t.finite) {
            t.slope = dot(t.g, d_);
            saw_finite_ = true;
        }
        return t;
    }

    // Nocedal & Wright zoom: `lo` satisfies sufficient decrease with the lowest value so far.
    SearchOutcome zoom(Trial lo, Trial hi, Trial& out)
    {
        while (steps_ < cfg_.max_line_search_steps) {
            const double a = std::min(lo.step, hi.step);
            const double b = std::max(lo.step, hi.step);
            const double width = b - a;
            if (width <= std::numeric_limits<double>::epsilon() * std::max(1.0, b))
                break;
            double step;
            if (hi.finite)
                step = cubic_minimizer(lo.step, lo.f, lo.slope, hi.step, hi.f, hi.slope, a, b);
            else
                step = 0.5 * (a + b);
            // Keep the trial away from the interval ends.
            if (step - a < 0.1 * width || b - step < 0.1 * width)
                step = 0.5 * (a + b);
            Trial cur = evaluate(step);
            if (!cur.finite) {
                hi = std::move(cur);
                continue;
            }
            if (cur.f > f0_ + cfg_.wolfe_c1 * cur.step * slope0_ || cur.f >= lo.f) {
                hi = std::move(cur);
                continue;
            }
            if (std::abs(cur.slope) <= -cfg_.wolfe_c2 * slope0_) {
                out = std::move(cur);
                return SearchOutcome::Accepted;
            }
            if (cur.slope * (hi.step - lo.step) >= 0.0)
                hi = std::move(lo);
            lo = std::move(cur);
        }
        return saw_finite_ ? SearchOutcome::Failed : SearchOutcome::NonFinite;
    }

    const Objective& obj_;
    const LbfgsConfig& cfg_;
    int& evaluations_;
    std::span<const double> x_;
    std::span<const double> d_;
    double f0_ = 0.0;
    double slope0_ = 0.0;
    int steps_ = 0;
    bool saw_finite_ = false;
};

struct Correction {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

void two_loop(const std::deque<Correction>& memory, std::span<const double> g, std::vector<double>& d)
{
    d.assign(g.begin(), g.end());
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
        const auto& c = memory[i];
        alpha[i] = c.rho * dot(c.s, d);
        for (std::size_t j = 0; j < d.size(); ++j)
            d[j] -= alpha[i] * c.y[j];
    }
    if (!memory.empty()) {
        const auto& last = memory.back();
        const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
        for (double& v : d)
            v *= gamma;
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
        const auto& c = memory[i];
        const double beta = c.rho * dot(c.y, d);
        for (std::size_t j = 0; j < d.size(); ++j)
            d[j] += (alpha[i] - beta) * c.s[j];
    }
    for (double& v : d)
        v = -v;
}

} // namespace

OptimResult minimize(const Objective& objective, std::vector<double> x0, const LbfgsConfig& config)
{
    config.validate();
    OptimResult res;
    res.x = std::move(x0);
    std::vector<double> g(res.x.size(), 0.0);
    double f = objective(res.x, g);
    res.evaluations = 1;
    res.final_loss = f;
    if (!all_finite(f, g)) {
        res.status = OptimStatus::Diverged;
        return res;
    }
    if (norm_inf(g) <= config.gradient_tolerance) {
        res.status = OptimStatus::Converged;
        return res;
    }

    std::deque<Correction> memory;
    std::vector<double> d;
    LineSearch search(objective, config, res.evaluations);
    res.status = OptimStatus::MaxIterations;
    while (res.iterations < config.max_iterations) {
        two_loop(memory, g, d);
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            memory.clear();
            two_loop(memory, g, d);
            slope = dot(g, d);
        }
        double step0 = 1.0;
        if (memory.empty()) {
            const double l1 = std::accumulate(g.begin(), g.end(), 0.0, [](double a, double v) { return a + std::abs(v); });
            step0 = std::min(1.0, 1.0 / l1);
        }

        Trial next;
        SearchOutcome outcome = search.run(res.x, f, slope, d, step0, next);
        if (outcome != SearchOutcome::Accepted && !memory.empty()) {
            // Retry once along steepest descent before giving up.
            memory.clear();
            two_loop(memory, g, d);
            slope = dot(g, d);
            const double l1 = std::accumulate(g.begin(), g.end(), 0.0, [](double a, double v) { return a + std::abs(v); });
            outcome = search.run(res.x, f, slope, d, std::min(1.0, 1.0 / l1), next);
        }
        if (outcome == SearchOutcome::NonFinite) {
            res.status = OptimStatus::Diverged;
            break;
        }
        if (outcome == SearchOutcome::Failed) {
            res.status = OptimStatus::LineSearchFailure;
            break;
        }

        ++res.iterations;
        if (config.record_trace)
            res.trace.push_back({next.step, f, slope, next.f, next.slope});

        Correction c;
        c.s.resize(res.x.size());
        c.y.resize(res.x.size());
        for (std::size_t i = 0; i < res.x.size(); ++i) {
            c.s[i] = next.x[i] - res.x[i];
            c.y[i] = next.g[i] - g[i];
        }
        const double sy = dot(c.s, c.y);
        if (sy > std::numeric_limits<double>::epsilon() * dot(c.y, c.y)) {
            c.rho = 1.0 / sy;
            memory.push_back(std::move(c));
            if (static_cast<int>(memory.size()) > config.history_size)
                memory.pop_front();
        }

        const double f_old = f;
        res.x = std::move(next.x);
        g = std::move(next.g);
        f = next.f;
        res.final_loss = f;

        if (norm_inf(g) <= config.gradient_tolerance) {
            res.status = OptimStatus::Converged;
            break;
        }
        const double scale = std::max({std::abs(f_old), std::abs(f), 1.0});
        if ((f_old - f) / scale <= config.function_tolerance) {
            res.status = OptimStatus::Converged;
            break;
        }
    }
    return res;
}

} // namespace cdpinn
