#include "cdpinn/precision.hpp"

#include "cdpinn/errors.hpp"

#include <cfloat>
#include <cmath>
#include <string>

namespace cdpinn {

std::string_view to_string(Precision p)
{
    switch (p) {
    case Precision::Half:
        return "f16";
    case Precision::Single:
        return "f32";
    case Precision::Double:
        return "f64";
    }
    return "f64";
}

Precision parse_precision(std::string_view s)
{
    if (s == "f16" || s == "half")
        return Precision::Half;
    if (s == "f32" || s == "single")
        return Precision::Single;
    if (s == "f64" || s == "double")
        return Precision::Double;
    throw InvalidArgument("unknown precision '" + std::string(s) + "' (expected f16|f32|f64)");
}

float round_to_half(float x)
{
    if (!std::isfinite(x) || x == 0.0f)
        return x;
    constexpr float kMaxHalf = 65504.0f;
    constexpr float kMinNormal = 6.103515625e-05f;  // 2^-14
    const float mag = std::abs(x);
    float rounded;
    if (mag < kMinNormal) {
        // Subnormal range: fixed spacing 2^-24.
        rounded = std::nearbyint(mag * 16777216.0f) / 16777216.0f;
    } else {
        int exp = 0;
        const float m = std::frexp(mag, &exp);  // m in [0.5, 1)
        rounded = std::ldexp(std::nearbyint(std::ldexp(m, 11)), exp - 11);
    }
    if (rounded > kMaxHalf)
        rounded = std::numeric_limits<float>::infinity();
    return std::copysign(rounded, x);
}

double precision_max(Precision p)
{
    switch (p) {
    case Precision::Half:
        return 65504.0;
    case Precision::Single:
        return FLT_MAX;
    case Precision::Double:
        break;
    }
    return DBL_MAX;
}

double precision_min_normal(Precision p)
{
    switch (p) {
    case Precision::Half:
        return 6.103515625e-05;
    case Precision::Single:
        return FLT_MIN;
    case Precision::Double:
        break;
    }
    return DBL_MIN;
}

double round_to_precision(double x, Precision p)
{
    switch (p) {
    case Precision::Half:
        return round_to_half(static_cast<float>(x));
    case Precision::Single:
        return static_cast<float>(x);
    case Precision::Double:
        break;
    }
    return x;
}

} // namespace cdpinn
