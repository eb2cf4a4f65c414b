#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace cdpinn {

enum class Precision { Half, Single, Double };

std::string_view to_string(Precision p);
/// Accepts f16/f32/f64 and half/single/double.
Precision parse_precision(std::string_view s);

/// Round a float to the nearest IEEE binary16 value (ties to even),
/// returned as float. Values beyond the half range become +-inf.
float round_to_half(float x);

/// Largest finite and smallest normal magnitude of each working precision.
double precision_max(Precision p);
double precision_min_normal(Precision p);

/// Sticky exception-like flags raised while narrowing exponentials or
/// accumulating in a working precision.
struct FloatFlags {
    bool overflow = false;
    bool underflow = false;

    FloatFlags& operator|=(const FloatFlags& o)
    {
        overflow = overflow || o.overflow;
        underflow = underflow || o.underflow;
        return *this;
    }
    bool any() const { return overflow || underflow; }
};

// Working-precision traits. Half precision is emulated: arithmetic in float,
// with values rounded to binary16 wherever they are stored.
struct DoubleTraits {
    using Real = double;
    static constexpr Precision kind = Precision::Double;
    static Real store(Real x) { return x; }
};

struct SingleTraits {
    using Real = float;
    static constexpr Precision kind = Precision::Single;
    static Real store(Real x) { return x; }
};

struct HalfTraits {
    using Real = float;
    static constexpr Precision kind = Precision::Half;
    static Real store(Real x) { return round_to_half(x); }
};

/// Narrow a double-precision value into the working precision, raising
/// overflow if a finite value becomes infinite and underflow if a nonzero
/// value lands below the smallest normal number.
template <class Traits>
typename Traits::Real narrow(double x, FloatFlags& flags)
{
    using Real = typename Traits::Real;
    const Real r = Traits::store(static_cast<Real>(x));
    if (std::isfinite(x) && !std::isfinite(r))
        flags.overflow = true;
    else if (x != 0.0 && std::isfinite(x) && std::abs(static_cast<double>(r)) < precision_min_normal(Traits::kind))
        flags.underflow = true;
    return r;
}

/// Calls fn(Traits{}) with the traits type matching p.
template <class Fn>
decltype(auto) dispatch_precision(Precision p, Fn&& fn)
{
    switch (p) {
    case Precision::Half:
        return fn(HalfTraits{});
    case Precision::Single:
        return fn(SingleTraits{});
    case Precision::Double:
        break;
    }
    return fn(DoubleTraits{});
}

/// Round a double to the nearest value representable in p.
double round_to_precision(double x, Precision p);

} // namespace cdpinn
