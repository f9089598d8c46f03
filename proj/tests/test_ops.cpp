#include <doctest.h>

#include <cmath>

#include "ssag/grad_check.hpp"
#include "ssag/ops.hpp"
#include "ssag/rng.hpp"

using namespace ssag;

namespace {

Tensor randn(std::vector<int> shape, Rng& rng, bool rg = false, double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape), rg);
    for (double& v : t.values()) v = scale * rng.gaussian();
    return t;
}

} // namespace

TEST_CASE("affine identity and scalar arithmetic") {
    // x=[3], W=[[1]], b=[0] -> [3]
    Tensor y = affine(Tensor::from({1, 1}, {3.0}), Tensor::from({1, 1}, {1.0}), Tensor::from({1}, {0.0}));
    CHECK(y.at(0) == doctest::Approx(3.0));
    // x=[3], W=[[2]], b=[1] -> [7]
    Tensor y2 = affine(Tensor::from({1, 1}, {3.0}), Tensor::from({1, 1}, {2.0}), Tensor::from({1}, {1.0}));
    CHECK(y2.at(0) == doctest::Approx(7.0));
}

TEST_CASE("affine dimension error names both shapes") {
    Tensor x = Tensor::zeros({1, 2});
    Tensor W = Tensor::zeros({3, 1});
    Tensor b = Tensor::zeros({1});
    try {
        affine(x, W, b);
        FAIL("expected dimension_error");
    } catch (const dimension_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[1x2]") != std::string::npos);
        CHECK(msg.find("[3x1]") != std::string::npos);
    }
}

TEST_CASE("conv2d identity kernel") {
    Tensor x = Tensor::from({1, 1, 1, 1}, {5.0});
    Tensor k = Tensor::from({1, 1, 1, 1}, {1.0});
    CHECK(conv2d(x, k, 1, 0).at(0) == doctest::Approx(5.0));
}

TEST_CASE("conv2d all-ones kernel sums a constant input") {
    Tensor x = Tensor::full({1, 1, 4, 4}, 2.5);
    Tensor k = Tensor::full({1, 1, 3, 3}, 1.0);
    Tensor y = conv2d(x, k, 1, 0);
    CHECK(y.shape() == std::vector<int>{1, 1, 2, 2});
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.at(i) == doctest::Approx(9.0 * 2.5));
}

TEST_CASE("conv2d output shape formula") {
    Tensor x = Tensor::zeros({1, 1, 4, 4});
    Tensor k = Tensor::zeros({1, 1, 2, 2});
    CHECK(conv2d(x, k, 2, 0).shape() == std::vector<int>{1, 1, 2, 2});
}

TEST_CASE("conv2d kernel larger than padded input") {
    Tensor x = Tensor::zeros({1, 1, 2, 2});
    Tensor k = Tensor::zeros({1, 1, 5, 5});
    CHECK_THROWS_AS(conv2d(x, k, 1, 0), dimension_error);
}

TEST_CASE("batch_norm zero-variance and shift") {
    Tensor x = Tensor::full({4, 2}, 3.0);
    Tensor gamma = Tensor::full({2}, 1.0);
    BnState state(2);
    SUBCASE("constant batch, beta 0 -> all zeros") {
        Tensor beta = Tensor::zeros({2});
        Tensor y = batch_norm(x, gamma, beta, state, Mode::Train);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.at(i) == doctest::Approx(0.0));
    }
    SUBCASE("constant batch, beta 2 -> all twos") {
        Tensor beta = Tensor::full({2}, 2.0);
        Tensor y = batch_norm(x, gamma, beta, state, Mode::Train);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.at(i) == doctest::Approx(2.0));
    }
}

TEST_CASE("batch_norm eval mode depends only on running state") {
    Tensor gamma = Tensor::full({1}, 1.0);
    Tensor beta = Tensor::zeros({1});
    BnState state(1);
    state.run_mean[0] = 10.0;
    state.run_var[0] = 4.0;
    Tensor a = batch_norm(Tensor::from({2, 1}, {12.0, 12.0}), gamma, beta, state, Mode::Eval);
    Tensor b = batch_norm(Tensor::from({2, 1}, {12.0, 99.0}), gamma, beta, state, Mode::Eval);
    // the first row's output is identical whatever else sits in the batch
    CHECK(a.at(0) == doctest::Approx(b.at(0)));
    CHECK(a.at(0) == doctest::Approx((12.0 - 10.0) / std::sqrt(4.0 + 1e-5)));
    // eval mode leaves the running state untouched
    CHECK(state.run_mean[0] == 10.0);
}

TEST_CASE("batch_norm rejects non-positive eps") {
    Tensor x = Tensor::zeros({2, 1});
    Tensor gamma = Tensor::full({1}, 1.0);
    Tensor beta = Tensor::zeros({1});
    BnState state(1);
    CHECK_THROWS_AS(batch_norm(x, gamma, beta, state, Mode::Train, 0.1, 0.0), config_error);
}

TEST_CASE("activation fixed points") {
    Tensor z = Tensor::from({3}, {0.0, 0.0, -1.0});
    CHECK(tanh(z).at(0) == doctest::Approx(0.0));
    CHECK(sigmoid(z).at(1) == doctest::Approx(0.5));
    CHECK(relu(z).at(2) == doctest::Approx(0.0));
}

TEST_CASE("softmax symmetry and row sums") {
    Tensor y = softmax(Tensor::from({1, 3}, {0.0, 0.0, 0.0}));
    for (int j = 0; j < 3; ++j) CHECK(y.at2(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));

    Rng rng(3);
    Tensor r = softmax(randn({8, 5}, rng));
    for (int i = 0; i < 8; ++i) {
        double s = 0.0;
        for (int j = 0; j < 5; ++j) s += r.at2(i, j);
        CHECK(std::fabs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("sigmoid outputs stay inside (0,1)") {
    Rng rng(4);
    Tensor y = sigmoid(randn({100}, rng, false, 5.0));
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(y.at(i) > 0.0);
        CHECK(y.at(i) < 1.0);
    }
}

TEST_CASE("sigmoid gradient at 0 is 0.25, against finite differences") {
    Tensor x = Tensor::scalar(0.0, true);
    Tape tape;
    TapeScope scope(tape);
    backward(sum(sigmoid(x)));
    auto f = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const double h = 1e-6;
    const double numeric = (f(h) - f(-h)) / (2 * h);
    CHECK(x.grad()[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(x.grad()[0] == doctest::Approx(numeric).epsilon(1e-8));
}

TEST_CASE("bce_loss closed forms") {
    CHECK(bce_loss(Tensor::from({1}, {0.5}), {1.0}).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss(Tensor::from({1}, {1.0 - kLogClamp}), {1.0}).item() == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(bce_loss(Tensor::from({1}, {0.8}), {1.0}).item() == doctest::Approx(0.223144).epsilon(1e-6));
}

TEST_CASE("ce_loss closed forms and index error") {
    // uniform probabilities -> ln k
    Tensor uniform = Tensor::full({1, 4}, 0.25);
    CHECK(ce_loss(uniform, {2}).item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    // one-hot correct row -> ~0
    Tensor onehot = Tensor::from({1, 3}, {0.0, 1.0, 0.0});
    CHECK(ce_loss(onehot, {1}).item() == doctest::Approx(0.0).epsilon(1e-6));
    // correct-class probability 0.9
    Tensor p = Tensor::from({1, 2}, {0.9, 0.1});
    CHECK(ce_loss(p, {0}).item() == doctest::Approx(0.105361).epsilon(1e-5));
    CHECK_THROWS_AS(ce_loss(p, {2}), index_error);
}

TEST_CASE("grad_check on a polynomial is near exact") {
    Tensor x = Tensor::scalar(3.0, true);
    ParamList params{{"x", x}};
    auto report = grad_check([&]() { return mul(x, x); }, params, 1e-3, 1e-9);
    CHECK(report.pass);
    CHECK(report.max_relative_error < 1e-9);
}

TEST_CASE("grad_check flags a corrupted backward rule") {
    Rng rng(5);
    Tensor x = randn({3, 3}, rng, true);
    Tensor probe = randn({3, 3}, rng);
    ParamList params{{"x", x}};
    debug_inject_backward_fault(true);
    auto report = grad_check([&]() { return sum(mul(tanh(x), probe)); }, params, 1e-4, 1e-4);
    debug_inject_backward_fault(false);
    CHECK_FALSE(report.pass);
    CHECK(report.max_relative_error > 1e-3);
}

TEST_CASE("grad_check rejects non-positive step") {
    Tensor x = Tensor::scalar(1.0, true);
    ParamList params{{"x", x}};
    CHECK_THROWS_AS(grad_check([&]() { return mul(x, x); }, params, 0.0, 1e-4), contract_error);
}

TEST_CASE("every primitive matches finite differences over random shapes and seeds") {
    // 100 randomized cases spread across the primitive set
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const int n = rng.uniform_int(1, 4);
        const int din = rng.uniform_int(1, 5);
        const int dout = rng.uniform_int(1, 4);

        { // affine
            Tensor x = randn({n, din}, rng, true);
            Tensor W = randn({din, dout}, rng, true, 0.7);
            Tensor b = randn({dout}, rng, true, 0.2);
            Tensor probe = randn({n, dout}, rng);
            ParamList params{{"x", x}, {"W", W}, {"b", b}};
            auto rep = grad_check([&]() { return sum(mul(affine(x, W, b), probe)); }, params, 1e-4, 1e-4);
            CHECK_MESSAGE(rep.pass, "affine seed ", seed, " err ", rep.max_relative_error);
            ++checked;
        }
        { // activations stacked
            Tensor x = randn({n, din}, rng, true);
            for (double& v : x.values())
                if (std::fabs(v) < 0.05) v += 0.1;
            Tensor probe = randn({n, din}, rng);
            ParamList params{{"x", x}};
            auto rep = grad_check(
                [&]() { return sum(mul(relu(tanh(sigmoid(x))), probe)); }, params, 1e-4, 1e-4);
            CHECK_MESSAGE(rep.pass, "activations seed ", seed, " err ", rep.max_relative_error);
            ++checked;
        }
        { // softmax + ce
            Tensor x = randn({n, 3}, rng, true);
            std::vector<int> labels;
            for (int i = 0; i < n; ++i) labels.push_back(rng.uniform_int(0, 2));
            ParamList params{{"x", x}};
            auto rep = grad_check([&]() { return ce_loss(softmax(x), labels); }, params, 1e-4, 1e-4);
            CHECK_MESSAGE(rep.pass, "softmax-ce seed ", seed, " err ", rep.max_relative_error);
            ++checked;
        }
        { // conv + bn
            const int h = rng.uniform_int(3, 5);
            Tensor x = randn({2, 2, h, h}, rng, true);
            Tensor kern = randn({2, 2, 3, 3}, rng, true, 0.4);
            Tensor gamma = randn({2}, rng, true, 0.3);
            Tensor beta = randn({2}, rng, true, 0.2);
            auto state = std::make_shared<BnState>(2);
            const int oh = (h + 2 - 3) / 1 + 1;
            Tensor probe = randn({2, 2, oh, oh}, rng);
            ParamList params{{"x", x}, {"k", kern}, {"gamma", gamma}, {"beta", beta}};
            auto rep = grad_check(
                [&]() { return sum(mul(batch_norm(conv2d(x, kern, 1, 1), gamma, beta, *state, Mode::Train), probe)); },
                params, 1e-4, 1e-4);
            CHECK_MESSAGE(rep.pass, "conv-bn seed ", seed, " err ", rep.max_relative_error);
            ++checked;
        }
        { // movement ops: concat, slice, reshape, grouped sum, repeat
            Tensor a = randn({2, 3}, rng, true);
            Tensor b = randn({2, 2}, rng, true);
            Tensor g = randn({2, 1}, rng, true);
            Tensor probe = randn({1, 4}, rng);
            ParamList params{{"a", a}, {"b", b}, {"g", g}};
            auto rep = grad_check(
                [&]() {
                    Tensor joined = concat_cols({a, b});         // 2 x 5
                    Tensor s = slice_cols(joined, 1, 2);         // 2 x 2
                    Tensor gated = mul(s, repeat_cols(g, 2));    // 2 x 2
                    Tensor flat = reshape(gated, {4, 1});        // 4 x 1
                    Tensor grouped = sum_rows_grouped(flat, 2);  // 2 x 1
                    return sum(mul(reshape(grouped, {1, 2}), slice_cols(probe, 0, 2)));
                },
                params, 1e-4, 1e-4);
            CHECK_MESSAGE(rep.pass, "movement seed ", seed, " err ", rep.max_relative_error);
            ++checked;
        }
    }
    CHECK(checked == 100);
}
