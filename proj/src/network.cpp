#include "cdpinn/network.hpp"

#include "cdpinn/csv.hpp"
#include "cdpinn/errors.hpp"
#include "cdpinn/rng.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace cdpinn {

std::size_t Architecture::parameter_count() const
{
    std::size_t n = 0;
    for (int l = 0; l < affine_layers(); ++l)
        n += rows(l) * cols(l) + rows(l);
    return n;
}

std::size_t Architecture::matrix_offset(int layer) const
{
    std::size_t n = 0;
    for (int l = 0; l < layer; ++l)
        n += rows(l) * cols(l) + rows(l);
    return n;
}

void Architecture::validate() const
{
    if (widths.size() < 2)
        throw InvalidArgument("architecture needs at least input and output widths");
    if (widths.front() != 1 || widths.back() != 1)
        throw InvalidArgument("input and output widths must be 1");
    for (int w : widths)
        if (w < 1)
            throw InvalidArgument("layer widths must be >= 1");
}

void NetworkParams::round_to_precision()
{
    for (double& v : theta)
        v = cdpinn::round_to_precision(v, precision);
}

NetworkParams init_params(const Architecture& arch, std::uint64_t seed, Precision precision)
{
    arch.validate();
    NetworkParams p{arch, precision, std::vector<double>(arch.parameter_count(), 0.0)};
    Rng rng(seed, kStreamInit);
    for (int l = 0; l < arch.affine_layers(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(arch.cols(l) + arch.rows(l)));
        const std::size_t a0 = arch.matrix_offset(l);
        for (std::size_t i = 0; i < arch.rows(l) * arch.cols(l); ++i)
            p.theta[a0 + i] = rng.uniform(-limit, limit);
    }
    p.round_to_precision();
    return p;
}

template <class Traits>
Evaluator<Traits>::Evaluator(const Architecture& arch, std::span<const double> theta)
    : arch_(arch)
{
    arch_.validate();
    if (theta.size() != arch_.parameter_count())
        throw InvalidArgument("parameter vector has " + std::to_string(theta.size()) + " entries, architecture needs "
                              + std::to_string(arch_.parameter_count()));
    layers_.resize(static_cast<std::size_t>(arch_.affine_layers()));
    std::size_t widest = 1;
    for (int l = 0; l < arch_.affine_layers(); ++l) {
        const std::size_t n = arch_.rows(l);
        auto& s = layers_[static_cast<std::size_t>(l)];
        s.a.resize(n);
        s.da.resize(n);
        s.dda.resize(n);
        s.t.resize(n);
        s.dt.resize(n);
        s.ddt.resize(n);
        widest = std::max(widest, n);
    }
    for (auto* v : {&bar_a_, &bar_da_, &bar_dda_, &bar_t_, &bar_dt_, &bar_ddt_})
        v->resize(widest);
    set_parameters(theta);
}

template <class Traits>
void Evaluator<Traits>::set_parameters(std::span<const double> theta)
{
    if (theta.size() != arch_.parameter_count())
        throw InvalidArgument("parameter vector size does not match the architecture");
    theta_.resize(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i)
        theta_[i] = Traits::store(static_cast<Real>(theta[i]));
}

template <class Traits>
Triple<typename Traits::Real> Evaluator<Traits>::forward(Real x)
{
    input_ = Traits::store(x);
    const int n_layers = arch_.affine_layers();
    for (int l = 0; l < n_layers; ++l) {
        auto& s = layers_[static_cast<std::size_t>(l)];
        const std::size_t rows = arch_.rows(l);
        const std::size_t cols = arch_.cols(l);
        const Real* A = theta_.data() + arch_.matrix_offset(l);
        const Real* b = theta_.data() + arch_.offset_offset(l);
        for (std::size_t i = 0; i < rows; ++i) {
            Real v = b[i];
            Real dv = 0;
            Real ddv = 0;
            if (l == 0) {
                // input triple (x, 1, 0)
                v += A[i] * input_;
                dv = A[i];
            } else {
                const auto& prev = layers_[static_cast<std::size_t>(l - 1)];
                const Real* row = A + i * cols;
                for (std::size_t j = 0; j < cols; ++j) {
                    v += row[j] * prev.t[j];
                    dv += row[j] * prev.dt[j];
                    ddv += row[j] * prev.ddt[j];
                }
            }
            s.a[i] = Traits::store(v);
            s.da[i] = Traits::store(dv);
            s.dda[i] = Traits::store(ddv);
        }
        if (l + 1 == n_layers)
            break;
        for (std::size_t i = 0; i < rows; ++i) {
            const Real t = std::tanh(s.a[i]);
            const Real sech2 = Real(1) - t * t;
            s.t[i] = Traits::store(t);
            s.dt[i] = Traits::store(sech2 * s.da[i]);
            s.ddt[i] = Traits::store(sech2 * s.dda[i] - Real(2) * t * sech2 * s.da[i] * s.da[i]);
        }
    }
    const auto& out = layers_.back();
    return {out.a[0], out.da[0], out.dda[0]};
}

template <class Traits>
void Evaluator<Traits>::backward(const Triple<Real>& seed, std::span<Real> grad)
{
    const int n_layers = arch_.affine_layers();
    bar_a_[0] = seed.value;
    bar_da_[0] = seed.dvalue;
    bar_dda_[0] = seed.ddvalue;
    for (int l = n_layers - 1; l >= 0; --l) {
        const std::size_t rows = arch_.rows(l);
        const std::size_t cols = arch_.cols(l);
        const Real* A = theta_.data() + arch_.matrix_offset(l);
        Real* gA = grad.data() + arch_.matrix_offset(l);
        Real* gb = grad.data() + arch_.offset_offset(l);
        if (l == 0) {
            for (std::size_t i = 0; i < rows; ++i) {
                gA[i] += bar_a_[i] * input_ + bar_da_[i];
                gb[i] += bar_a_[i];
            }
            break;
        }
        const auto& prev = layers_[static_cast<std::size_t>(l - 1)];
        for (std::size_t j = 0; j < cols; ++j) {
            bar_t_[j] = 0;
            bar_dt_[j] = 0;
            bar_ddt_[j] = 0;
        }
        for (std::size_t i = 0; i < rows; ++i) {
            const Real ba = bar_a_[i];
            const Real bda = bar_da_[i];
            const Real bdda = bar_dda_[i];
            Real* growA = gA + i * cols;
            const Real* row = A + i * cols;
            for (std::size_t j = 0; j < cols; ++j) {
                growA[j] += ba * prev.t[j] + bda * prev.dt[j] + bdda * prev.ddt[j];
                bar_t_[j] += row[j] * ba;
                bar_dt_[j] += row[j] * bda;
                bar_ddt_[j] += row[j] * bdda;
            }
            gb[i] += ba;
        }
        // Through the activation of layer l-1:
        //   t = tanh(a), t' = s a', t'' = s a'' - 2 t s a'^2, s = 1 - t^2.
        for (std::size_t j = 0; j < cols; ++j) {
            const Real t = prev.t[j];
            const Real s = Real(1) - t * t;
            const Real da = prev.da[j];
            const Real dda = prev.dda[j];
            bar_a_[j] = bar_t_[j] * s - bar_dt_[j] * Real(2) * t * s * da
                - bar_ddt_[j] * (Real(2) * t * s * dda + Real(2) * s * (Real(1) - Real(3) * t * t) * da * da);
            bar_da_[j] = bar_dt_[j] * s - bar_ddt_[j] * Real(4) * t * s * da;
            bar_dda_[j] = bar_ddt_[j] * s;
        }
    }
}

template class Evaluator<DoubleTraits>;
template class Evaluator<SingleTraits>;
template class Evaluator<HalfTraits>;

namespace {

void require_finite(const EvalTriple& t)
{
    if (!std::isfinite(t.value) || !std::isfinite(t.dvalue) || !std::isfinite(t.ddvalue))
        throw NonFinite("network evaluation produced a non-finite value");
}

} // namespace

EvalTriple forward_triple(const NetworkParams& params, double x)
{
    if (!std::isfinite(x))
        throw InvalidArgument("network input must be finite");
    return dispatch_precision(params.precision, [&](auto traits) {
        using T = decltype(traits);
        using Real = typename T::Real;
        Evaluator<T> ev(params.arch, params.theta);
        const auto r = ev.forward(static_cast<Real>(x));
        EvalTriple out{static_cast<double>(r.value), static_cast<double>(r.dvalue), static_cast<double>(r.ddvalue)};
        require_finite(out);
        return out;
    });
}

ParamGradients grad_params(const NetworkParams& params, double x)
{
    if (!std::isfinite(x))
        throw InvalidArgument("network input must be finite");
    return dispatch_precision(params.precision, [&](auto traits) {
        using T = decltype(traits);
        using Real = typename T::Real;
        Evaluator<T> ev(params.arch, params.theta);
        const auto r = ev.forward(static_cast<Real>(x));
        require_finite({static_cast<double>(r.value), static_cast<double>(r.dvalue), static_cast<double>(r.ddvalue)});
        const std::size_t n = params.theta.size();
        ParamGradients g;
        const Triple<Real> seeds[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
        std::vector<double>* outs[3] = {&g.value, &g.dvalue, &g.ddvalue};
        std::vector<Real> buf(n);
        for (int c = 0; c < 3; ++c) {
            std::fill(buf.begin(), buf.end(), Real(0));
            ev.backward(seeds[c], buf);
            outs[c]->assign(buf.begin(), buf.end());
            for (double v : *outs[c])
                if (!std::isfinite(v))
                    throw NonFinite("parameter gradient produced a non-finite value");
        }
        return g;
    });
}

void save_params(std::ostream& os, const NetworkParams& params)
{
    os << "# widths=";
    for (std::size_t i = 0; i < params.arch.widths.size(); ++i)
        os << (i ? "," : "") << params.arch.widths[i];
    os << " precision=" << to_string(params.precision) << '\n';
    for (double v : params.theta)
        os << format_double(v) << '\n';
}

NetworkParams load_params(std::istream& is)
{
    std::string header;
    if (!std::getline(is, header) || header.rfind("# widths=", 0) != 0)
        throw InvalidArgument("parameter snapshot: missing header line");
    const auto space = header.find(" precision=");
    if (space == std::string::npos)
        throw InvalidArgument("parameter snapshot: header lacks precision");
    NetworkParams p;
    p.arch.widths.clear();
    std::stringstream ws(header.substr(9, space - 9));
    std::string item;
    while (std::getline(ws, item, ','))
        p.arch.widths.push_back(std::stoi(item));
    p.arch.validate();
    p.precision = parse_precision(header.substr(space + 11));
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        p.theta.push_back(parse_double(line));
    }
    if (p.theta.size() != p.arch.parameter_count())
        throw InvalidArgument("parameter snapshot has the wrong number of entries");
    return p;
}

} // namespace cdpinn
