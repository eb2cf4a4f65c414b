#include "cdpinn/formulations.hpp"

#include "cdpinn/detail/densities.hpp"
#include "cdpinn/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cdpinn {

std::string_view to_string(Method m)
{
    switch (m) {
    case Method::V:
        return "v";
    case Method::Vz:
        return "vz";
    case Method::W:
        return "w";
    case Method::Wz:
        return "wz";
    case Method::RWz:
        return "rwz";
    }
    return "v";
}

Method parse_method(std::string_view s)
{
    if (s == "v" || s == "V")
        return Method::V;
    if (s == "vz" || s == "Vz")
        return Method::Vz;
    if (s == "w" || s == "W")
        return Method::W;
    if (s == "wz" || s == "Wz")
        return Method::Wz;
    if (s == "rwz" || s == "RWz")
        return Method::RWz;
    throw InvalidArgument("unknown method '" + std::string(s) + "' (expected v|vz|w|wz|rwz)");
}

Formulation Formulation::make(Method method, const ProblemSpec& spec)
{
    spec.validate();
    Formulation f;
    f.method = method;
    f.spec = spec;
    f.domain_end = method == Method::RWz ? 1.0 / spec.epsilon : 1.0;
    f.coercivity = check_coercivity(spec);
    return f;
}

bool LossBreakdown::finite() const
{
    return std::isfinite(total) && std::isfinite(bulk) && std::isfinite(boundary);
}

Density<double> bulk_density(const Formulation& form, double x, const EvalTriple& t, FloatFlags& flags, BulkPart part)
{
    const detail::Constants<DoubleTraits> k(form.spec, flags);
    const auto c = detail::bulk_coeffs<DoubleTraits>(form, x, flags);
    return detail::bulk<DoubleTraits>(form.method, k, c, t, part);
}

Density<double> boundary_density(const Formulation& form, Endpoint e, double value, double dvalue, FloatFlags& flags)
{
    const detail::Constants<DoubleTraits> k(form.spec, flags);
    const auto c = detail::boundary_coeffs<DoubleTraits>(form, e, flags);
    return detail::boundary<DoubleTraits>(form.method, k, c, value, dvalue);
}

namespace {

Formulation formulation_for(Method m, const ProblemSpec& spec)
{
    return Formulation::make(m, spec);
}

} // namespace

Density<double> residual_v(const ProblemSpec& spec, const EvalTriple& t, double x)
{
    FloatFlags flags;
    return bulk_density(formulation_for(Method::V, spec), x, t, flags);
}

Density<double> boundary_v(const ProblemSpec& spec, double value, double dvalue, Endpoint e)
{
    FloatFlags flags;
    return boundary_density(formulation_for(Method::V, spec), e, value, dvalue, flags);
}

Density<double> residual_vz(const ProblemSpec& spec, const EvalTriple& t, double x, FloatFlags& flags)
{
    return bulk_density(formulation_for(Method::Vz, spec), x, t, flags);
}

Density<double> boundary_vz(const ProblemSpec& spec, double value, double dvalue, Endpoint e, FloatFlags& flags)
{
    return boundary_density(formulation_for(Method::Vz, spec), e, value, dvalue, flags);
}

Density<double> energy_wz(const ProblemSpec& spec, const EvalTriple& t, double x, FloatFlags& flags)
{
    return bulk_density(formulation_for(Method::Wz, spec), x, t, flags);
}

Density<double> energy_boundary_wz(const ProblemSpec& spec, double value, Endpoint e, FloatFlags& flags)
{
    return boundary_density(formulation_for(Method::Wz, spec), e, value, 0.0, flags);
}

Density<double> energy_w(const ProblemSpec& spec, const EvalTriple& t, double x, FloatFlags& flags)
{
    return bulk_density(formulation_for(Method::W, spec), x, t, flags);
}

Density<double> energy_boundary_w(const ProblemSpec& spec, double value, double dvalue, Endpoint e, FloatFlags& flags)
{
    return boundary_density(formulation_for(Method::W, spec), e, value, dvalue, flags);
}

Density<double> energy_rwz(const ProblemSpec& spec, const EvalTriple& t, double y, FloatFlags& flags)
{
    return bulk_density(formulation_for(Method::RWz, spec), y, t, flags);
}

Density<double> energy_boundary_rwz(const ProblemSpec& spec, double value, Endpoint e, FloatFlags& flags)
{
    return boundary_density(formulation_for(Method::RWz, spec), e, value, 0.0, flags);
}

void check_rule(const Formulation& form, const QuadratureRule& rule)
{
    const double rel = std::abs(rule.domain_end - form.domain_end) / form.domain_end;
    if (!(rel <= 1e-12))
        throw SamplerMismatch("quadrature domain end " + std::to_string(rule.domain_end)
                              + " does not match formulation domain end " + std::to_string(form.domain_end));
    if (rule.scheme == SamplingScheme::Exponential && form.method != Method::Wz)
        throw SamplerMismatch("the exponential sampler only applies to the Wz formulation");
    if (rule.bulk_points.size() != rule.bulk_weights.size()
        || rule.importance_points.size() != rule.importance_weights.size()
        || rule.boundary_points.size() != 2 || rule.boundary_weights.size() != 2)
        throw SamplerMismatch("malformed quadrature rule");
}

LossBreakdown discrete_loss(const Formulation& form, const NetworkParams& params, const QuadratureRule& rule,
                            Execution exec)
{
    LossEngine engine(form, rule, params.arch, params.precision, exec);
    const auto out = engine.evaluate(params.theta);
    if (!out.finite())
        throw NonFinite("discrete loss is not finite");
    return out;
}

std::pair<LossBreakdown, std::vector<double>> discrete_loss_grad(const Formulation& form, const NetworkParams& params,
                                                                 const QuadratureRule& rule, Execution exec)
{
    LossEngine engine(form, rule, params.arch, params.precision, exec);
    std::vector<double> grad(params.theta.size());
    const auto out = engine.evaluate(params.theta, grad);
    if (!out.finite())
        throw NonFinite("discrete loss is not finite");
    for (double g : grad)
        if (!std::isfinite(g))
            throw NonFinite("discrete loss gradient is not finite");
    return {out, std::move(grad)};
}

Reconstruction reconstruct(const TrainedModel& model, double x)
{
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError("reconstruction point " + std::to_string(x) + " outside [0,1]");
    const auto& form = model.formulation;
    const auto& s = form.spec;
    const double eps = s.epsilon;
    Reconstruction r;
    const double at = form.method == Method::RWz ? x / eps : x;
    EvalTriple psi;
    try {
        psi = forward_triple(model.params, at);
    } catch (const NonFinite&) {
        r.overflow = true;
        r.u = r.du = std::numeric_limits<double>::infinity();
        return r;
    }
    FloatFlags flags;
    switch (form.method) {
    case Method::V:
    case Method::W:
        r.u = psi.value;
        r.du = psi.dvalue;
        break;
    case Method::Vz:
    case Method::Wz: {
        const auto pot = potential_derivs(s, x);
        const double w = detail::guarded_exp_double(pot.v / (2.0 * eps), flags);
        r.u = w * psi.value;
        r.du = w * (pot.dv / (2.0 * eps) * psi.value + psi.dvalue);
        break;
    }
    case Method::RWz: {
        // u(x) = eps e^{V~(y)/2} psi(y), u'(x) = e^{V~/2}(V~'/2 psi + psi')
        const auto pot = potential_derivs(s, x);
        const double vt = pot.v / eps;
        const double dvt = pot.dv;
        const double w = detail::guarded_exp_double(vt / 2.0, flags);
        r.u = eps * w * psi.value;
        r.du = w * (0.5 * dvt * psi.value + psi.dvalue);
        break;
    }
    }
    r.overflow = flags.overflow || !std::isfinite(r.u) || !std::isfinite(r.du);
    return r;
}

} // namespace cdpinn
