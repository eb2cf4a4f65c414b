#include "cdpinn/detail/densities.hpp"
#include "cdpinn/errors.hpp"
#include "cdpinn/formulations.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace cdpinn {

struct LossEngine::Impl {
    virtual ~Impl() = default;
    virtual LossBreakdown evaluate(std::span<const double> theta, std::span<double> grad) = 0;

    Formulation form;
    QuadratureRule rule;
    Architecture arch;
    Precision precision = Precision::Double;
    Execution exec = Execution::Parallel;
    FloatFlags coefficient_flags;
};

namespace {

enum class Group : unsigned char { Bulk, Importance };

template <class Traits>
class EngineImpl final : public LossEngine::Impl {
public:
    using Real = typename Traits::Real;

    EngineImpl(const Formulation& f, const QuadratureRule& r, const Architecture& a, Precision p, Execution e)
        : constants_(f.spec, flags_)
    {
        form = f;
        rule = r;
        arch = a;
        precision = p;
        exec = e;
        const BulkPart bulk_part = r.scheme == SamplingScheme::Exponential ? BulkPart::Quadratic : BulkPart::Full;
        points_.reserve(r.bulk_points.size() + r.importance_points.size());
        for (std::size_t k = 0; k < r.bulk_points.size(); ++k)
            add_point(r.bulk_points[k], r.bulk_weights[k], bulk_part, Group::Bulk);
        for (std::size_t k = 0; k < r.importance_points.size(); ++k)
            add_point(r.importance_points[k], r.importance_weights[k], BulkPart::SourceOverDensity, Group::Importance);
        for (std::size_t m = 0; m < 2; ++m) {
            const Endpoint end = m == 0 ? Endpoint::Left : Endpoint::Right;
            boundary_[m] = {Traits::store(static_cast<Real>(r.boundary_points[m])),
                            narrow<Traits>(r.boundary_weights[m], flags_),
                            detail::boundary_coeffs<Traits>(f, end, flags_)};
        }
        coefficient_flags = flags_;

        const int threads = std::max(1, omp_get_max_threads());
        std::vector<double> zeros(a.parameter_count(), 0.0);
        evaluators_.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t)
            evaluators_.emplace_back(a, zeros);
        const std::size_t blocks = block_count();
        partials_.resize(blocks);
    }

    LossBreakdown evaluate(std::span<const double> theta, std::span<double> grad) override
    {
        if (theta.size() != arch.parameter_count())
            throw InvalidArgument("parameter vector does not match the architecture");
        if (!grad.empty() && grad.size() != theta.size())
            throw InvalidArgument("gradient buffer has the wrong size");
        const bool want_grad = !grad.empty();
        const std::size_t n_params = theta.size();

        Sums total;
        total.grad.assign(want_grad ? n_params : 0, Real(0));
        const std::size_t blocks = block_count();
        const bool parallel = exec == Execution::Parallel && blocks > 1 && !omp_in_parallel()
            && omp_get_max_threads() > 1;

        if (exec == Execution::Serial) {
            auto& ev = evaluators_[0];
            ev.set_parameters(theta);
            accumulate_range(ev, 0, points_.size(), total, want_grad);
        } else {
            if (parallel) {
                for (auto& e : evaluators_)
                    e.set_parameters(theta);
#pragma omp parallel for schedule(static) num_threads(static_cast<int>(evaluators_.size()))
                for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b)
                    run_block(evaluators_[static_cast<std::size_t>(omp_get_thread_num())],
                              static_cast<std::size_t>(b), want_grad, n_params);
            } else {
                evaluators_[0].set_parameters(theta);
                for (std::size_t b = 0; b < blocks; ++b)
                    run_block(evaluators_[0], b, want_grad, n_params);
            }
            // Fixed-order reduction: identical bits for any thread count.
            for (std::size_t b = 0; b < blocks; ++b) {
                const auto& p = partials_[b];
                total.bulk += p.bulk;
                total.importance += p.importance;
                for (std::size_t i = 0; i < total.grad.size(); ++i)
                    total.grad[i] += p.grad[i];
            }
        }

        auto& ev = evaluators_[0];
        for (const auto& bp : boundary_) {
            const auto t = ev.forward(bp.y);
            const auto d = detail::boundary<Traits>(form.method, constants_, bp.coeffs, t.value, t.dvalue);
            total.boundary += bp.weight * d.value;
            if (want_grad)
                ev.backward({bp.weight * d.d_value, bp.weight * d.d_slope, Real(0)}, total.grad);
        }

        const Real bulk = total.bulk + total.importance;
        const Real sum = bulk + total.boundary;
        LossBreakdown out;
        out.total = static_cast<double>(sum);
        out.bulk = static_cast<double>(bulk);
        out.boundary = static_cast<double>(total.boundary);
        out.importance = static_cast<double>(total.importance);
        out.flags = coefficient_flags;
        if (std::isinf(sum) || std::isinf(bulk) || std::isinf(total.boundary))
            out.flags.overflow = true;
        if (want_grad) {
            for (std::size_t i = 0; i < n_params; ++i) {
                grad[i] = static_cast<double>(total.grad[i]);
                if (std::isinf(grad[i]))
                    out.flags.overflow = true;
            }
        }
        return out;
    }

private:
    struct Point {
        Real x;
        Real weight;
        detail::BulkCoeffs<Real> coeffs;
        BulkPart part;
        Group group;
    };

    struct BoundaryPoint {
        Real y;
        Real weight;
        detail::BoundaryCoeffs<Real> coeffs;
    };

    struct Sums {
        Real bulk{};
        Real importance{};
        Real boundary{};
        std::vector<Real> grad;
    };

    void add_point(double x, double w, BulkPart part, Group group)
    {
        points_.push_back({Traits::store(static_cast<Real>(x)), narrow<Traits>(w, flags_),
                           detail::bulk_coeffs<Traits>(form, x, flags_), part, group});
    }

    std::size_t block_count() const
    {
        return std::max<std::size_t>(1, (points_.size() + kLossBlockSize - 1) / kLossBlockSize);
    }

    void run_block(Evaluator<Traits>& ev, std::size_t b, bool want_grad, std::size_t n_params)
    {
        auto& p = partials_[b];
        p.bulk = Real(0);
        p.importance = Real(0);
        p.grad.assign(want_grad ? n_params : 0, Real(0));
        const std::size_t lo = b * kLossBlockSize;
        const std::size_t hi = std::min(points_.size(), lo + kLossBlockSize);
        accumulate_range(ev, lo, hi, p, want_grad);
    }

    void accumulate_range(Evaluator<Traits>& ev, std::size_t lo, std::size_t hi, Sums& s, bool want_grad)
    {
        for (std::size_t k = lo; k < hi; ++k) {
            const auto& pt = points_[k];
            const auto t = ev.forward(pt.x);
            const auto d = detail::bulk<Traits>(form.method, constants_, pt.coeffs, t, pt.part);
            if (pt.group == Group::Bulk)
                s.bulk += pt.weight * d.value;
            else
                s.importance += pt.weight * d.value;
            if (want_grad)
                ev.backward({pt.weight * d.d_value, pt.weight * d.d_slope, pt.weight * d.d_curvature}, s.grad);
        }
    }

    FloatFlags flags_;
    detail::Constants<Traits> constants_;
    std::vector<Point> points_;
    BoundaryPoint boundary_[2];
    std::vector<Evaluator<Traits>> evaluators_;
    std::vector<Sums> partials_;
};

} // namespace

LossEngine::LossEngine(Formulation form, QuadratureRule rule, Architecture arch, Precision precision, Execution exec)
{
    check_rule(form, rule);
    arch.validate();
    dispatch_precision(precision, [&](auto traits) {
        using T = decltype(traits);
        impl_ = std::make_unique<EngineImpl<T>>(form, rule, arch, precision, exec);
    });
}

LossEngine::~LossEngine() = default;
LossEngine::LossEngine(LossEngine&&) noexcept = default;
LossEngine& LossEngine::operator=(LossEngine&&) noexcept = default;

LossBreakdown LossEngine::evaluate(std::span<const double> theta, std::span<double> grad)
{
    return impl_->evaluate(theta, grad);
}

const Formulation& LossEngine::formulation() const { return impl_->form; }
const QuadratureRule& LossEngine::rule() const { return impl_->rule; }
Precision LossEngine::precision() const { return impl_->precision; }
std::size_t LossEngine::parameter_count() const { return impl_->arch.parameter_count(); }
FloatFlags LossEngine::coefficient_flags() const { return impl_->coefficient_flags; }

} // namespace cdpinn
