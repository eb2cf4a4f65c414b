#include "cdpinn/errors.hpp"
#include "cdpinn/network.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace cdpinn;

namespace {

// Plain forward pass of a tanh MLP in the documented flat layout.
double reference_forward(const Architecture& arch, const std::vector<double>& theta, double x)
{
    std::vector<double> h{x};
    std::size_t off = 0;
    for (int l = 0; l < arch.affine_layers(); ++l) {
        const int rows = arch.widths[l + 1];
        const int cols = arch.widths[l];
        std::vector<double> next(rows);
        for (int i = 0; i < rows; ++i) {
            double a = theta[off + rows * cols + i];
            for (int j = 0; j < cols; ++j)
                a += theta[off + i * cols + j] * h[j];
            next[i] = l + 1 < arch.affine_layers() ? std::tanh(a) : a;
        }
        off += rows * cols + rows;
        h = next;
    }
    return h[0];
}

} // namespace

TEST_CASE("standard architecture has 141 parameters")
{
    const auto arch = Architecture::standard();
    CHECK(arch.parameter_count() == 141);
    CHECK(arch.hidden_layers() == 2);
    CHECK(arch.matrix_offset(0) == 0);
    CHECK(arch.offset_offset(0) == 10);
    CHECK(arch.matrix_offset(1) == 20);
    CHECK(arch.matrix_offset(2) == 130);
    CHECK((Architecture{{1, 5, 1}}.parameter_count()) == 16);
    CHECK_THROWS_AS((Architecture{{2, 5, 1}}.validate()), InvalidArgument);
}

TEST_CASE("initialization: Glorot bounds, zero offsets, deterministic per seed")
{
    const auto arch = Architecture::standard();
    const auto p = init_params(arch, 7, Precision::Double);
    REQUIRE(p.theta.size() == 141);
    for (int l = 0; l < arch.affine_layers(); ++l) {
        const double bound = std::sqrt(6.0 / (arch.cols(l) + arch.rows(l)));
        for (std::size_t k = 0; k < arch.rows(l) * arch.cols(l); ++k)
            CHECK(std::abs(p.theta[arch.matrix_offset(l) + k]) <= bound);
        for (std::size_t k = 0; k < arch.rows(l); ++k)
            CHECK(p.theta[arch.offset_offset(l) + k] == 0.0);
    }
    CHECK(init_params(arch, 7, Precision::Double).theta == p.theta);
    CHECK(init_params(arch, 8, Precision::Double).theta != p.theta);
    const auto h = init_params(arch, 7, Precision::Half);
    for (double v : h.theta)
        CHECK(static_cast<double>(round_to_half(static_cast<float>(v))) == v);
}

TEST_CASE("forward value matches a plain implementation")
{
    const auto p = init_params(Architecture::standard(), 3, Precision::Double);
    for (double x : {-1.0, 0.0, 0.25, 0.9, 20.0})
        CHECK(forward_triple(p, x).value == doctest::Approx(reference_forward(p.arch, p.theta, x)).epsilon(1e-14));
}

TEST_CASE("input derivatives match central differences")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto p = init_params(Architecture::standard(), seed, Precision::Double);
        const double h = 1e-4;
        for (double x : {0.05, 0.5, 0.95}) {
            const auto t = forward_triple(p, x);
            const double f1 = (reference_forward(p.arch, p.theta, x + h) - reference_forward(p.arch, p.theta, x - h))
                / (2 * h);
            const double f2 = (reference_forward(p.arch, p.theta, x + h) - 2 * reference_forward(p.arch, p.theta, x)
                               + reference_forward(p.arch, p.theta, x - h))
                / (h * h);
            CHECK(t.dvalue == doctest::Approx(f1).epsilon(1e-7).scale(1.0));
            CHECK(t.ddvalue == doctest::Approx(f2).epsilon(1e-4).scale(1.0));
        }
    }
}

TEST_CASE("parameter gradients of the triple match central differences")
{
    auto p = init_params(Architecture::standard(), 11, Precision::Double);
    // nonzero offsets so their derivatives are exercised too
    for (std::size_t i = 0; i < p.theta.size(); ++i)
        p.theta[i] += 0.05 * std::sin(1.0 + i);
    const double x = 0.37;
    const auto g = grad_params(p, x);
    for (std::size_t i = 0; i < p.theta.size(); ++i) {
        const double h = 1e-6;
        auto q = p;
        q.theta[i] += h;
        const auto tp = forward_triple(q, x);
        q.theta[i] -= 2 * h;
        const auto tm = forward_triple(q, x);
        CHECK(g.value[i] == doctest::Approx((tp.value - tm.value) / (2 * h)).epsilon(1e-6).scale(1e-3));
        CHECK(g.dvalue[i] == doctest::Approx((tp.dvalue - tm.dvalue) / (2 * h)).epsilon(1e-6).scale(1e-3));
        CHECK(g.ddvalue[i] == doctest::Approx((tp.ddvalue - tm.ddvalue) / (2 * h)).epsilon(1e-6).scale(1e-3));
    }
}

TEST_CASE("backward accumulates a weighted combination")
{
    const auto p = init_params(Architecture::standard(), 2, Precision::Double);
    Evaluator<DoubleTraits> ev(p.arch, p.theta);
    ev.forward(0.4);
    std::vector<double> grad(p.theta.size(), 1.0);
    ev.backward({2.0, -1.0, 0.5}, grad);
    const auto g = grad_params(p, 0.4);
    for (std::size_t i = 0; i < grad.size(); ++i)
        CHECK(grad[i] == doctest::Approx(1.0 + 2.0 * g.value[i] - g.dvalue[i] + 0.5 * g.ddvalue[i]));
}

TEST_CASE("reduced precision evaluation stays close to double")
{
    const auto p = init_params(Architecture::standard(), 4, Precision::Single);
    Evaluator<SingleTraits> single(p.arch, p.theta);
    Evaluator<HalfTraits> half(p.arch, p.theta);
    const auto d = forward_triple(p, 0.6);
    CHECK(single.forward(0.6f).value == doctest::Approx(d.value).epsilon(1e-5).scale(1.0));
    CHECK(half.forward(0.6f).value == doctest::Approx(d.value).epsilon(5e-2).scale(1.0));
}

TEST_CASE("non-finite output throws")
{
    auto p = init_params(Architecture::standard(), 0, Precision::Double);
    p.theta.back() = NAN;
    CHECK_THROWS_AS(forward_triple(p, 0.5), NonFinite);
}

TEST_CASE("save and load round trip")
{
    const auto p = init_params(Architecture::standard(), 5, Precision::Single);
    std::stringstream ss;
    save_params(ss, p);
    const std::string text = ss.str();
    CHECK(text.rfind("# widths=1,10,10,1 precision=f32\n", 0) == 0);
    const auto q = load_params(ss);
    CHECK(q.arch == p.arch);
    CHECK(q.precision == p.precision);
    CHECK(q.theta == p.theta);

    std::stringstream bad("# widths=1,10,10,1 precision=f64\n0.5\n");
    CHECK_THROWS_AS(load_params(bad), InvalidArgument);
}
