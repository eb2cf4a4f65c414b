#pragma once

#include "cdpinn/network.hpp"
#include "cdpinn/precision.hpp"
#include "cdpinn/problem.hpp"
#include "cdpinn/sampling.hpp"

#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace cdpinn {

/// V: strong residual on u. Vz: strong residual on z = u e^{-V/(2 eps)}.
/// W: energy of z expressed through u. Wz: energy of z.
/// RWz: energy of the rescaled z on (0, 1/eps).
enum class Method { V, Vz, W, Wz, RWz };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct Formulation {
    Method method = Method::V;
    ProblemSpec spec;
    double domain_end = 1.0;  ///< 1, or 1/eps for RWz
    CoercivityReport coercivity;

    /// Validates the problem data. Coercivity is evaluated and reported for every
    /// method; a violated condition does not prevent construction.
    static Formulation make(Method method, const ProblemSpec& spec);

    bool is_energy() const { return method == Method::W || method == Method::Wz || method == Method::RWz; }
    bool coercive() const { return coercivity.ok(); }
};

/// Value of a pointwise loss density and its partials with respect to
/// (psi, psi', psi'').
template <class Real>
struct Density {
    Real value{};
    Real d_value{};
    Real d_slope{};
    Real d_curvature{};
};

// Pointwise densities in double precision. `x` is the coordinate of the
// formulation's own domain (y in (0, 1/eps) for RWz).
Density<double> residual_v(const ProblemSpec& spec, const EvalTriple& t, double x);
Density<double> boundary_v(const ProblemSpec& spec, double value, double dvalue, Endpoint e);
Density<double> residual_vz(const ProblemSpec& spec, const EvalTriple& t, double x, FloatFlags& flags);
Density<double> boundary_vz(const ProblemSpec& spec, double value, double dvalue, Endpoint e, FloatFlags& flags);
Density<double> energy_wz(const ProblemSpec& spec, const EvalTriple& t, double x, FloatFlags& flags);
Density<double> energy_boundary_wz(const ProblemSpec& spec, double value, Endpoint e, FloatFlags& flags);
Density<double> energy_w(const ProblemSpec& spec, const EvalTriple& t, double x, FloatFlags& flags);
Density<double> energy_boundary_w(const ProblemSpec& spec, double value, double dvalue, Endpoint e, FloatFlags& flags);
Density<double> energy_rwz(const ProblemSpec& spec, const EvalTriple& t, double y, FloatFlags& flags);
Density<double> energy_boundary_rwz(const ProblemSpec& spec, double value, Endpoint e, FloatFlags& flags);

/// Which part of the bulk density a quadrature point carries.
enum class BulkPart {
    Full,
    Quadratic,          ///< energy without the source term
    SourceOverDensity,  ///< source term divided by e^{-V/(2 eps)} (importance points)
};

/// Dispatches on the formulation's method.
Density<double> bulk_density(const Formulation& form, double x, const EvalTriple& t, FloatFlags& flags,
                             BulkPart part = BulkPart::Full);
Density<double> boundary_density(const Formulation& form, Endpoint e, double value, double dvalue, FloatFlags& flags);

/// Sums of the discrete loss.
struct LossBreakdown {
    double total = 0.0;
    double bulk = 0.0;        ///< includes `importance`
    double boundary = 0.0;
    double importance = 0.0;  ///< importance-sampled source part (exponential scheme)
    FloatFlags flags;

    bool finite() const;
};

enum class Execution {
    Serial,    ///< reference: one sequential sweep over all points
    Parallel,  ///< fixed blocks reduced in block order; OpenMP across blocks
};

/// Deterministic block size of the parallel reduction.
inline constexpr std::size_t kLossBlockSize = 128;

/// Reusable evaluator of the discrete loss and its parameter gradient.
/// Exponential coefficients at the quadrature points are computed once in
/// double precision and narrowed to the working precision.
class LossEngine {
public:
    LossEngine(Formulation form, QuadratureRule rule, Architecture arch, Precision precision,
               Execution exec = Execution::Parallel);
    ~LossEngine();
    LossEngine(LossEngine&&) noexcept;
    LossEngine& operator=(LossEngine&&) noexcept;

    /// Evaluate at theta (narrowed to the working precision). If `grad` is
    /// non-empty it receives the gradient. Non-finite results are returned,
    /// not thrown.
    LossBreakdown evaluate(std::span<const double> theta, std::span<double> grad = {});

    const Formulation& formulation() const;
    const QuadratureRule& rule() const;
    Precision precision() const;
    std::size_t parameter_count() const;
    /// Flags raised while narrowing the per-point coefficients.
    FloatFlags coefficient_flags() const;

    struct Impl;  // per-precision kernel, defined in the source file

private:
    std::unique_ptr<Impl> impl_;
};

/// Throws SamplerMismatch if the rule cannot discretize the formulation.
void check_rule(const Formulation& form, const QuadratureRule& rule);

/// Evaluate J_hat; throws NonFinite if the result is NaN/inf.
LossBreakdown discrete_loss(const Formulation& form, const NetworkParams& params, const QuadratureRule& rule,
                            Execution exec = Execution::Parallel);

std::pair<LossBreakdown, std::vector<double>> discrete_loss_grad(const Formulation& form, const NetworkParams& params,
                                                                 const QuadratureRule& rule,
                                                                 Execution exec = Execution::Parallel);

/// J_hat of an arbitrary function given by its triple, in double precision.
/// Used to evaluate the loss at exact or perturbed solutions.
template <class Fn>
LossBreakdown loss_of_function(const Formulation& form, const QuadratureRule& rule, Fn&& triple_at);

struct TrainedModel {
    Formulation formulation;
    NetworkParams params;
};

struct Reconstruction {
    double u = 0.0;
    double du = 0.0;
    bool overflow = false;  ///< exponential or network output not finite
};

/// Map the network back to (u, u') at x in [0,1]; throws DomainError otherwise.
Reconstruction reconstruct(const TrainedModel& model, double x);

// ---------------------------------------------------------------------------

template <class Fn>
LossBreakdown loss_of_function(const Formulation& form, const QuadratureRule& rule, Fn&& triple_at)
{
    check_rule(form, rule);
    LossBreakdown out;
    const BulkPart bulk_part = rule.scheme == SamplingScheme::Exponential ? BulkPart::Quadratic : BulkPart::Full;
    double part1 = 0.0;
    for (std::size_t k = 0; k < rule.bulk_points.size(); ++k) {
        const double x = rule.bulk_points[k];
        part1 += rule.bulk_weights[k] * bulk_density(form, x, triple_at(x), out.flags, bulk_part).value;
    }
    for (std::size_t k = 0; k < rule.importance_points.size(); ++k) {
        const double x = rule.importance_points[k];
        out.importance += rule.importance_weights[k]
            * bulk_density(form, x, triple_at(x), out.flags, BulkPart::SourceOverDensity).value;
    }
    for (std::size_t m = 0; m < rule.boundary_points.size(); ++m) {
        const double y = rule.boundary_points[m];
        const auto t = triple_at(y);
        const Endpoint e = m == 0 ? Endpoint::Left : Endpoint::Right;
        out.boundary += rule.boundary_weights[m] * boundary_density(form, e, t.value, t.dvalue, out.flags).value;
    }
    out.bulk = part1 + out.importance;
    out.total = out.bulk + out.boundary;
    return out;
}

} // namespace cdpinn
