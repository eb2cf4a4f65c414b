#pragma once

#include "cdpinn/precision.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace cdpinn {

/// Feedforward tanh network R -> R with widths (1, p_1, ..., p_L, 1).
struct Architecture {
    std::vector<int> widths{1, 10, 10, 1};

    /// Two hidden tanh layers of width 10.
    static Architecture standard() { return {}; }

    int hidden_layers() const { return static_cast<int>(widths.size()) - 2; }
    int affine_layers() const { return static_cast<int>(widths.size()) - 1; }
    std::size_t parameter_count() const;

    /// Offset of A_l (row-major, widths[l+1] x widths[l]) in the flat vector;
    /// b_l follows immediately.
    std::size_t matrix_offset(int layer) const;
    std::size_t offset_offset(int layer) const { return matrix_offset(layer) + rows(layer) * cols(layer); }
    std::size_t rows(int layer) const { return static_cast<std::size_t>(widths[layer + 1]); }
    std::size_t cols(int layer) const { return static_cast<std::size_t>(widths[layer]); }

    void validate() const;
    bool operator==(const Architecture&) const = default;
};

template <class Real>
struct Triple {
    Real value{};
    Real dvalue{};
    Real ddvalue{};
};

/// (psi(x), psi'(x), psi''(x)).
using EvalTriple = Triple<double>;

/// Flat parameter vector theta = (A_0, b_0, A_1, b_1, ..., A_L, b_L).
/// Entries are always representable in `precision`.
struct NetworkParams {
    Architecture arch;
    Precision precision = Precision::Double;
    std::vector<double> theta;

    /// Re-round every entry to the working precision.
    void round_to_precision();
};

/// Glorot-uniform matrices, zero offsets.
NetworkParams init_params(const Architecture& arch, std::uint64_t seed, Precision precision);

/// Network evaluation in a fixed working precision. Keeps the intermediate
/// state of the last forward pass so that `backward` can run afterwards.
template <class Traits>
class Evaluator {
public:
    using Real = typename Traits::Real;

    Evaluator(const Architecture& arch, std::span<const double> theta);

    /// Narrow new parameters into the working precision.
    void set_parameters(std::span<const double> theta);

    Triple<Real> forward(Real x);

    /// grad += d(seed . triple)/d theta for the last forward point.
    void backward(const Triple<Real>& seed, std::span<Real> grad);

    const Architecture& architecture() const { return arch_; }
    std::size_t parameter_count() const { return theta_.size(); }

private:
    struct LayerState {
        std::vector<Real> a, da, dda;  // pre-activation triple
        std::vector<Real> t, dt, ddt;  // post-activation triple (hidden layers)
    };

    Architecture arch_;
    std::vector<Real> theta_;
    std::vector<LayerState> layers_;
    Real input_{};
    // adjoint scratch
    std::vector<Real> bar_a_, bar_da_, bar_dda_, bar_t_, bar_dt_, bar_ddt_;
};

extern template class Evaluator<DoubleTraits>;
extern template class Evaluator<SingleTraits>;
extern template class Evaluator<HalfTraits>;

/// Evaluates the network triple in the parameter precision.
/// Throws NonFinite if any output is NaN or infinite.
EvalTriple forward_triple(const NetworkParams& params, double x);

struct ParamGradients {
    std::vector<double> value;    ///< d psi / d theta
    std::vector<double> dvalue;   ///< d psi' / d theta
    std::vector<double> ddvalue;  ///< d psi'' / d theta
};

ParamGradients grad_params(const NetworkParams& params, double x);

/// Text snapshot: a header line "# widths=1,10,10,1 precision=f32", then one
/// entry per line in flat order (A_0 row-major, b_0, A_1, ...).
void save_params(std::ostream& os, const NetworkParams& params);
NetworkParams load_params(std::istream& is);

} // namespace cdpinn
