#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "d2sac/checkpoint.hpp"
#include "d2sac/graph.hpp"
#include "d2sac/math.hpp"
#include "d2sac/nn.hpp"
#include "oracles.hpp"

using namespace d2sac;
using namespace d2sac::nn;

TEST_CASE("mish matches the closed form") {
    CHECK(mish(0.0) == 0.0);
    // x tanh(ln(1+e^x)) at x=1, frozen from an arbitrary-precision evaluation.
    CHECK(mish(1.0) == doctest::Approx(0.86509838826731035).epsilon(1e-14));
    CHECK(std::fabs(mish(-100.0)) < 1e-40);
    CHECK(std::isfinite(mish(700.0)));
    CHECK(std::isfinite(mish(-700.0)));
    // Independent long-double oracle across the well-conditioned range.
    for (double x = -25.0; x <= 25.0; x += 0.173) {
        const double ref = static_cast<double>(oracles::mish_reference(static_cast<long double>(x)));
        CHECK(mish(x) == doctest::Approx(ref).epsilon(1e-13));
    }
}

TEST_CASE("mish is monotone for x >= 0 and bounded below near -0.3089") {
    double prev = mish(0.0);
    for (double x = 0.01; x <= 40.0; x += 0.01) {
        const double m = mish(x);
        CHECK(m >= prev);
        prev = m;
    }
    double global_min = 0.0;
    for (double x = -20.0; x <= 5.0; x += 1e-3) global_min = std::min(global_min, mish(x));
    CHECK(global_min > -0.3089);
    CHECK(global_min < -0.3088);
}

TEST_CASE("sinusoidal positional embedding") {
    const Tensor z = sinusoidal_pos_emb(0, 16);
    for (int k = 0; k < 8; ++k) {
        CHECK(z.at(0, k) == 0.0);
        CHECK(z.at(0, 8 + k) == 1.0);
    }
    const Tensor one = sinusoidal_pos_emb(1, 16);
    CHECK(one.at(0, 0) == doctest::Approx(std::sin(1.0)).epsilon(1e-15));
    const Tensor five = sinusoidal_pos_emb(5, 16);
    for (int k = 0; k < 16; ++k) {
        CHECK(five.at(0, k) >= -1.0);
        CHECK(five.at(0, k) <= 1.0);
    }
    CHECK(sinusoidal_pos_emb(3, 16).values() == sinusoidal_pos_emb(3, 16).values());
    CHECK_THROWS_AS(sinusoidal_pos_emb(1, 7), std::invalid_argument);
}

TEST_CASE("stack forward: identity, bias pass-through, critic topology") {
    Rng rng(7);
    SUBCASE("identity layer maps v to v") {
        DenseLayer l;
        l.weights = Tensor(3, 3);
        l.biases = Tensor(1, 3);
        for (int i = 0; i < 3; ++i) l.weights.at(i, i) = 1.0;
        Stack s{{l}};
        Tensor v = Tensor::row({0.5, -2.0, 3.25});
        const Tensor out = s.forward(v);
        for (int i = 0; i < 3; ++i) CHECK(out.at(0, i) == v.at(0, i));
    }
    SUBCASE("zero weights emit the activated bias") {
        DenseLayer l;
        l.weights = Tensor(2, 4);
        l.biases = Tensor(1, 2);
        l.biases.at(0, 0) = 1.0;
        l.biases.at(0, 1) = -1.0;
        l.activation = Activation::Tanh;
        Stack s{{l}};
        const Tensor out = s.forward(Tensor::row({9.0, 8.0, 7.0, 6.0}));
        CHECK(out.at(0, 0) == doctest::Approx(std::tanh(1.0)));
        CHECK(out.at(0, 1) == doctest::Approx(std::tanh(-1.0)));
    }
    SUBCASE("critic topology: 42-dim state to 20 Q-values") {
        Stack critic = make_stack({42, 256, 256, 20}, {Activation::Mish, Activation::Mish, Activation::None}, rng);
        Tensor state(1, 42, 0.3);
        const Tensor q = critic.forward(state);
        CHECK(q.rows() == 1);
        CHECK(q.cols() == 20);
        CHECK(q.all_finite());
    }
    SUBCASE("dimension mismatch rejected") {
        Stack s = make_stack({4, 3}, {Activation::None}, rng);
        CHECK_THROWS_AS(s.forward(Tensor(1, 5)), std::invalid_argument);
    }
}

TEST_CASE("forward is deterministic given identical parameters and inputs") {
    Rng rng(11);
    Stack s = make_stack({6, 8, 3}, {Activation::Mish, Activation::Tanh}, rng);
    Tensor x(4, 6);
    Rng xr(3);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = draw_normal(xr);
    const Tensor a = s.forward(x);
    const Tensor b = s.forward(x);
    CHECK(a.values() == b.values());
}

TEST_CASE("backward: linear case and detach") {
    SUBCASE("loss = w * x with x = 3 gives dloss/dw = 3") {
        Tensor w(1, 1);
        w.at(0, 0) = 2.0;
        w.requires_grad = true;
        ComputeGraph g;
        Var wv = g.param(w);
        Var xv = g.input(Tensor::row({3.0}));
        Var loss = g.mean_all(g.mul(wv, xv));
        g.backward(loss);
        CHECK(g.grad_for(w).at(0, 0) == 3.0);
    }
    SUBCASE("detached path contributes zero gradient") {
        Tensor w(1, 1);
        w.at(0, 0) = 2.0;
        w.requires_grad = true;
        ComputeGraph g;
        Var wv = g.param(w);
        Var cut = g.detach(g.mul(wv, g.input(Tensor::row({3.0}))));
        Var loss = g.mean_all(g.mul(cut, g.input(Tensor::row({5.0}))));
        g.backward(loss);
        CHECK(g.grad_for(w).at(0, 0) == 0.0);
    }
    SUBCASE("unused parameters get zero gradients") {
        Tensor w(2, 2, 1.0);
        w.requires_grad = true;
        Tensor u(2, 2, 1.0);
        u.requires_grad = true;
        ComputeGraph g;
        Var wv = g.param(w);
        g.param(u);
        Var loss = g.mean_all(wv);
        g.backward(loss);
        CHECK(g.grad_for(u).values() == std::vector<double>{0, 0, 0, 0});
        CHECK(g.grad_for(w).at(0, 0) == doctest::Approx(0.25));
    }
    SUBCASE("non-scalar loss rejected") {
        Tensor w(2, 2, 1.0);
        w.requires_grad = true;
        ComputeGraph g;
        Var wv = g.param(w);
        CHECK_THROWS_AS(g.backward(wv), std::invalid_argument);
    }
}

namespace {

// Scalar head for gradient checks: mean of softmax-weighted log pass.
double chain_eval(Stack& s, const Tensor& x) {
    ComputeGraph g;
    Var h = s.forward(g, g.input(x));
    Var p = g.softmax_rows(h);
    Var obj = g.row_dot(p, g.log(p));
    return g.scalar(g.mean_all(obj));
}

}  // namespace

TEST_CASE("substrate gradients match central finite differences") {
    Rng rng(23);
    SUBCASE("linear ops at h=1e-6, tolerance 1e-6") {
        Stack s = make_stack({5, 4}, {Activation::None}, rng);
        Tensor x(3, 5);
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = draw_normal(rng);
        Tensor target(3, 4);
        for (std::size_t i = 0; i < target.size(); ++i) target.data()[i] = draw_normal(rng);

        auto loss_eval = [&]() {
            ComputeGraph g;
            Var out = s.forward(g, g.input(x));
            Var diff = g.axpby(out, 1.0, g.input(target), -1.0);
            return g.scalar(g.mean_all(g.mul(diff, diff)));
        };
        std::vector<Tensor*> params;
        s.collect_params(params);
        ComputeGraph g;
        Var out = s.forward(g, g.input(x));
        Var diff = g.axpby(out, 1.0, g.input(target), -1.0);
        Var loss = g.mean_all(g.mul(diff, diff));
        g.backward(loss);
        std::vector<const Tensor*> analytic;
        for (Tensor* p : params) analytic.push_back(&g.grad_for(*p));
        const auto fd = oracles::finite_difference_grads(params, loss_eval, 1e-6);
        CHECK(oracles::max_rel_error(analytic, fd, 1e-2) < 1e-6);
    }
    SUBCASE("nonlinear chains (mish, tanh, softmax, log, concat) at 1e-3") {
        Stack s = make_stack({6, 7, 4}, {Activation::Mish, Activation::Tanh}, rng);
        Tensor x(3, 6);
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = draw_normal(rng);
        auto loss_eval = [&]() { return chain_eval(s, x); };
        std::vector<Tensor*> params;
        s.collect_params(params);
        ComputeGraph g;
        Var h = s.forward(g, g.input(x));
        Var p = g.softmax_rows(h);
        Var loss = g.mean_all(g.row_dot(p, g.log(p)));
        g.backward(loss);
        std::vector<const Tensor*> analytic;
        for (Tensor* q : params) analytic.push_back(&g.grad_for(*q));
        const auto fd = oracles::finite_difference_grads(params, loss_eval, 1e-5);
        CHECK(oracles::max_rel_error(analytic, fd, 1e-3) < 1e-3);
    }
}

TEST_CASE("softmax rows: nonnegative, normalized") {
    Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        Tensor x(3, 9);
        for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = draw_normal(rng) * 30.0;
        Tensor p;
        kernels::softmax_rows(x, p);
        for (int r = 0; r < 3; ++r) {
            double sum = 0.0;
            for (int c = 0; c < 9; ++c) {
                CHECK(p.at(r, c) >= 0.0);
                sum += p.at(r, c);
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("adam steps") {
    SUBCASE("zero gradient, zero decay: parameters unchanged") {
        Tensor p(2, 2, 1.5);
        p.requires_grad = true;
        Tensor g(2, 2, 0.0);
        AdamState st;
        CHECK(adam_step({&p}, {&g}, st, 1e-4, 0.0));
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.data()[i] == 1.5);
    }
    SUBCASE("first step with unit gradient moves by about -lr") {
        Tensor p(1, 1, 0.0);
        Tensor g(1, 1, 1.0);
        AdamState st;
        CHECK(adam_step({&p}, {&g}, st, 1e-4, 0.0));
        CHECK(p.at(0, 0) == doctest::Approx(-1e-4).epsilon(1e-7));
    }
    SUBCASE("decoupled weight decay: p=1, grad=0 -> 1 - lr*wd") {
        Tensor p(1, 1, 1.0);
        Tensor g(1, 1, 0.0);
        AdamState st;
        CHECK(adam_step({&p}, {&g}, st, 1e-4, 1e-4));
        CHECK(p.at(0, 0) == doctest::Approx(1.0 - 1e-8).epsilon(1e-15));
    }
    SUBCASE("non-finite gradient rejects the step untouched") {
        Tensor p(1, 2, 3.0);
        Tensor g(1, 2, 0.5);
        g.at(0, 1) = std::nan("");
        AdamState st;
        CHECK_FALSE(adam_step({&p}, {&g}, st, 1e-4, 0.0));
        CHECK(p.at(0, 0) == 3.0);
        CHECK(p.at(0, 1) == 3.0);
        CHECK(st.step == 0);
    }
    SUBCASE("step counter strictly increases") {
        Tensor p(1, 1, 0.0);
        Tensor g(1, 1, 0.1);
        AdamState st;
        for (long k = 1; k <= 5; ++k) {
            CHECK(adam_step({&p}, {&g}, st, 1e-3, 0.0));
            CHECK(st.step == k);
        }
    }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    Rng rng(99);
    Stack s = make_stack({7, 5, 3}, {Activation::Mish, Activation::Tanh}, rng);
    const auto path = std::filesystem::temp_directory_path() / "d2sac_ckpt_test.bin";
    std::vector<const DenseLayer*> layers;
    for (const auto& l : s.layers) layers.push_back(&l);
    save_checkpoint(path, layers);
    const auto loaded = load_checkpoint(path);
    REQUIRE(loaded.size() == s.layers.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].activation == s.layers[i].activation);
        CHECK(loaded[i].weights.values() == s.layers[i].weights.values());
        CHECK(loaded[i].biases.values() == s.layers[i].biases.values());
    }
    std::filesystem::remove(path);
}

TEST_CASE("soft update") {
    Tensor online(1, 1, 1.0), target(1, 1, 0.0);
    SUBCASE("tau=1 copies") {
        soft_update({&online}, {&target}, 1.0);
        CHECK(target.at(0, 0) == 1.0);
    }
    SUBCASE("tau=0.005 interpolates") {
        soft_update({&online}, {&target}, 0.005);
        CHECK(target.at(0, 0) == doctest::Approx(0.005).epsilon(1e-15));
    }
    SUBCASE("repeated updates converge geometrically") {
        double gap_prev = 1.0;
        for (int k = 0; k < 50; ++k) {
            soft_update({&online}, {&target}, 0.1);
            const double gap = std::fabs(online.at(0, 0) - target.at(0, 0));
            CHECK(gap == doctest::Approx(gap_prev * 0.9).epsilon(1e-12));
            gap_prev = gap;
        }
    }
}
