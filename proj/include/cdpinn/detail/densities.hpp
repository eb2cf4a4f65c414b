#pragma once

// Pointwise loss densities in a working precision. Exponential factors are
// evaluated in double precision and narrowed once per quadrature point.

#include "cdpinn/formulations.hpp"

#include <cmath>
#include <limits>

namespace cdpinn::detail {

template <class Traits>
struct Constants {
    using Real = typename Traits::Real;
    Real epsilon{}, F{}, f{}, lambda{}, one_minus_lambda{};

    Constants(const ProblemSpec& s, FloatFlags& flags)
        : epsilon(narrow<Traits>(s.epsilon, flags))
        , F(narrow<Traits>(s.F, flags))
        , f(narrow<Traits>(s.f, flags))
        , lambda(narrow<Traits>(s.lambda, flags))
        , one_minus_lambda(narrow<Traits>(1.0 - s.lambda, flags))
    {
    }
};

/// e^{exponent} narrowed to the working precision; exponents beyond the
/// guard threshold are reported instead of evaluated.
template <class Traits>
typename Traits::Real guarded_exp(double exponent, FloatFlags& flags)
{
    using Real = typename Traits::Real;
    if (exponent > kExponentLimit) {
        flags.overflow = true;
        return std::numeric_limits<Real>::infinity();
    }
    if (exponent < -kExponentLimit) {
        flags.underflow = true;
        return Real(0);
    }
    return narrow<Traits>(std::exp(exponent), flags);
}

/// Same guard, result kept in double.
inline double guarded_exp_double(double exponent, FloatFlags& flags)
{
    if (exponent > kExponentLimit) {
        flags.overflow = true;
        return std::numeric_limits<double>::infinity();
    }
    if (exponent < -kExponentLimit) {
        flags.underflow = true;
        return 0.0;
    }
    return std::exp(exponent);
}

template <class Real>
struct BulkCoeffs {
    Real q{};                 ///< zeroth-order coefficient of the symmetrized operator
    Real source{};            ///< f e^{-V/(2 eps)} / eps (f e^{-V~/2} for RWz)
    Real source_over_density{};
    Real weight{};            ///< e^{-V/(2 eps)} (W only)
    Real shift{};             ///< -V'/(2 eps) (W only)
};

template <class Real>
struct BoundaryCoeffs {
    Real flux{};    ///< alpha n (strong forms)
    Real value{};   ///< Robin value coefficient (strong) or boundary energy coefficient
    Real data{};    ///< right-hand side g term
    Real weight{};  ///< e^{-V/(2 eps)} (W only)
};

template <class Traits>
BulkCoeffs<typename Traits::Real> bulk_coeffs(const Formulation& form, double x, FloatFlags& flags)
{
    using Real = typename Traits::Real;
    const auto& s = form.spec;
    const double eps = s.epsilon;
    BulkCoeffs<Real> c;
    switch (form.method) {
    case Method::V:
        break;
    case Method::Vz:
    case Method::Wz:
    case Method::W: {
        const auto pot = potential_derivs(s, x);
        c.q = narrow<Traits>(pot.ddv / (2.0 * eps) + pot.dv * pot.dv / (4.0 * eps * eps), flags);
        const double e = guarded_exp_double(-pot.v / (2.0 * eps), flags);
        c.source = narrow<Traits>(s.f * e / eps, flags);
        c.source_over_density = narrow<Traits>(s.f / eps, flags);
        if (form.method == Method::W) {
            c.weight = narrow<Traits>(e, flags);
            c.shift = narrow<Traits>(-pot.dv / (2.0 * eps), flags);
        }
        break;
    }
    case Method::RWz: {
        // V~(y) = V(eps y)/eps
        const auto pot = potential_derivs(s, eps * x);
        const double vt = pot.v / eps;
        const double dvt = pot.dv;
        const double ddvt = eps * pot.ddv;
        c.q = narrow<Traits>(ddvt / 2.0 + dvt * dvt / 4.0, flags);
        c.source = narrow<Traits>(s.f * guarded_exp_double(-vt / 2.0, flags), flags);
        c.source_over_density = narrow<Traits>(s.f, flags);
        break;
    }
    }
    return c;
}

template <class Traits>
BoundaryCoeffs<typename Traits::Real> boundary_coeffs(const Formulation& form, Endpoint end, FloatFlags& flags)
{
    using Real = typename Traits::Real;
    const auto& s = form.spec;
    const double eps = s.epsilon;
    const double n = outward_normal(end);
    const double g = end == Endpoint::Left ? s.g0 : s.g1;
    BoundaryCoeffs<Real> c;
    switch (form.method) {
    case Method::V:
        c.flux = narrow<Traits>(s.alpha * n, flags);
        c.value = narrow<Traits>(s.kappa, flags);
        c.data = narrow<Traits>(g, flags);
        break;
    case Method::Vz: {
        const double x = end == Endpoint::Left ? 0.0 : 1.0;
        const auto pot = potential_derivs(s, x);
        c.flux = narrow<Traits>(s.alpha * n, flags);
        c.value = narrow<Traits>(s.kappa + s.alpha / (2.0 * eps) * pot.dv * n, flags);
        c.data = narrow<Traits>(guarded_exp_double(-pot.v / (2.0 * eps), flags) * g, flags);
        break;
    }
    case Method::Wz:
    case Method::W: {
        const double x = end == Endpoint::Left ? 0.0 : 1.0;
        const auto pot = potential_derivs(s, x);
        const double e = guarded_exp_double(-pot.v / (2.0 * eps), flags);
        c.value = narrow<Traits>(s.kappa / s.alpha + pot.dv * n / (2.0 * eps), flags);
        c.data = narrow<Traits>(e * g / s.alpha, flags);
        if (form.method == Method::W)
            c.weight = narrow<Traits>(e, flags);
        break;
    }
    case Method::RWz: {
        const double y = end == Endpoint::Left ? 0.0 : form.domain_end;
        const auto pot = potential_derivs(s, eps * y);
        const double vt = pot.v / eps;
        const double dvt = pot.dv;
        c.value = narrow<Traits>(eps * s.kappa / s.alpha + 0.5 * dvt * n, flags);
        c.data = narrow<Traits>(guarded_exp_double(-vt / 2.0, flags) * g / s.alpha, flags);
        break;
    }
    }
    return c;
}

// Energy 1/2 (v'^2 + q v^2) - source v with the requested part.
template <class Real>
Density<Real> z_energy(const BulkCoeffs<Real>& c, Real v, Real dv, BulkPart part)
{
    Density<Real> d;
    switch (part) {
    case BulkPart::Full:
        d.value = Real(0.5) * (dv * dv + c.q * v * v) - c.source * v;
        d.d_value = c.q * v - c.source;
        d.d_slope = dv;
        break;
    case BulkPart::Quadratic:
        d.value = Real(0.5) * (dv * dv + c.q * v * v);
        d.d_value = c.q * v;
        d.d_slope = dv;
        break;
    case BulkPart::SourceOverDensity:
        d.value = -c.source_over_density * v;
        d.d_value = -c.source_over_density;
        break;
    }
    return d;
}

template <class Traits>
Density<typename Traits::Real> bulk(Method method, const Constants<Traits>& k, const BulkCoeffs<typename Traits::Real>& c,
                                    const Triple<typename Traits::Real>& t, BulkPart part)
{
    using Real = typename Traits::Real;
    Density<Real> d;
    switch (method) {
    case Method::V: {
        // lambda |-eps psi'' + F psi' - f|^2
        const Real r = -k.epsilon * t.ddvalue + k.F * t.dvalue - k.f;
        d.value = k.lambda * r * r;
        d.d_slope = Real(2) * k.lambda * r * k.F;
        d.d_curvature = Real(-2) * k.lambda * r * k.epsilon;
        break;
    }
    case Method::Vz: {
        // lambda |-psi'' + q psi - f e^{-V/(2 eps)}/eps|^2
        const Real r = -t.ddvalue + c.q * t.value - c.source;
        d.value = k.lambda * r * r;
        d.d_value = Real(2) * k.lambda * r * c.q;
        d.d_curvature = Real(-2) * k.lambda * r;
        break;
    }
    case Method::Wz:
    case Method::RWz:
        d = z_energy(c, t.value, t.dvalue, part);
        break;
    case Method::W: {
        // z = e psi, z' = e (psi' + shift psi)
        const Real v = c.weight * t.value;
        const Real dv = c.weight * (t.dvalue + c.shift * t.value);
        const auto inner = z_energy(c, v, dv, part);
        d.value = inner.value;
        d.d_value = inner.d_value * c.weight + inner.d_slope * c.weight * c.shift;
        d.d_slope = inner.d_slope * c.weight;
        break;
    }
    }
    return d;
}

template <class Traits>
Density<typename Traits::Real> boundary(Method method, const Constants<Traits>& k,
                                        const BoundaryCoeffs<typename Traits::Real>& c, typename Traits::Real value,
                                        typename Traits::Real dvalue)
{
    using Real = typename Traits::Real;
    Density<Real> d;
    switch (method) {
    case Method::V:
    case Method::Vz: {
        const Real r = c.flux * dvalue + c.value * value - c.data;
        d.value = k.one_minus_lambda * r * r;
        d.d_value = Real(2) * k.one_minus_lambda * r * c.value;
        d.d_slope = Real(2) * k.one_minus_lambda * r * c.flux;
        break;
    }
    case Method::Wz:
    case Method::RWz:
        d.value = Real(0.5) * c.value * value * value - c.data * value;
        d.d_value = c.value * value - c.data;
        break;
    case Method::W: {
        const Real v = c.weight * value;
        d.value = Real(0.5) * c.value * v * v - c.data * v;
        d.d_value = (c.value * v - c.data) * c.weight;
        break;
    }
    }
    return d;
}

} // namespace cdpinn::detail
