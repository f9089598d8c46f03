#include <doctest.h>

#include <cmath>

#include "ssag/gce.hpp"
#include "ssag/grad_check.hpp"

using namespace ssag;

namespace {

std::vector<double> vec(std::initializer_list<double> v) { return std::vector<double>(v); }

} // namespace

TEST_CASE("queue push, eviction and order") {
    ContextQueue q(3, 1);
    CHECK(q.fill() == 0);
    q.push(vec({1.0}));
    CHECK(q.fill() == 1);
    CHECK(q.entry(1) == vec({1.0}));

    q.push(vec({2.0}));
    q.push(vec({3.0}));
    // entries newest-first: s_{t-1}=3, s_{t-2}=2, s_{t-3}=1
    CHECK(q.entry(1) == vec({3.0}));
    CHECK(q.entry(3) == vec({1.0}));

    q.push(vec({4.0})); // evicts the oldest (1)
    CHECK(q.entry(1) == vec({4.0}));
    CHECK(q.entry(2) == vec({3.0}));
    CHECK(q.entry(3) == vec({2.0}));
    CHECK(q.fill() == 3);
}

TEST_CASE("queue rejects wrong dimensions") {
    ContextQueue q(2, 3);
    CHECK_THROWS_AS(q.push(vec({1.0})), contract_error);
    CHECK_THROWS_AS(ContextQueue(0, 1), config_error);
}

TEST_CASE("queue reset clears to zero padding and is idempotent") {
    ContextQueue q(2, 2);
    q.push(vec({1.0, 2.0}));
    q.reset();
    CHECK(q.fill() == 0);
    CHECK(q.entry(1) == vec({0.0, 0.0}));
    q.reset();
    CHECK(q.fill() == 0);
    CHECK(q.concat() == std::vector<double>(4, 0.0));
}

TEST_CASE("concat is oldest-first with zero padding") {
    ContextQueue q(3, 1);
    q.push(vec({5.0}));
    q.push(vec({7.0}));
    // layout [s_{t-3}, s_{t-2}, s_{t-1}] = [0, 5, 7]
    CHECK(q.concat() == vec({0.0, 5.0, 7.0}));
}

TEST_CASE("queue semantics after more pushes than capacity") {
    Rng rng(3);
    ContextQueue q(5, 2);
    std::vector<std::vector<double>> pushed;
    for (int i = 0; i < 17; ++i) {
        std::vector<double> s{rng.gaussian(), rng.gaussian()};
        pushed.push_back(s);
        q.push(s);
    }
    for (int j = 1; j <= 5; ++j) CHECK(q.entry(j) == pushed[pushed.size() - static_cast<std::size_t>(j)]);
}

TEST_CASE("gau scalar example: d=1, m=1, s=0.5") {
    Rng rng(1);
    GceParams p = init_gce(1, 1, GateMode::Scalar, rng);
    p.embed.values() = {1.0};
    p.gate_weights.values() = {0.0};
    ContextQueue q(1, 1);
    q.push(vec({0.5}));
    Tensor r = gau_forward(q, p, 1);
    CHECK(r.at(0) == doctest::Approx(0.231059).epsilon(1e-5));
    // h = tanh(0.5), q = sigma(0) = 0.5
    CHECK(r.at(0) == doctest::Approx(std::tanh(0.5) * 0.5).epsilon(1e-12));
}

TEST_CASE("gau of a zero state is zero regardless of the gate") {
    Rng rng(2);
    GceParams p = init_gce(3, 2, GateMode::Scalar, rng);
    ContextQueue q(3, 2);
    q.push(vec({0.0, 0.0}));
    q.push(vec({1.0, -1.0}));
    // position 2 holds the zero state
    Tensor r = gau_forward(q, p, 2);
    CHECK(r.at(0) == 0.0);
    CHECK(r.at(1) == 0.0);
}

TEST_CASE("gate values lie in (0,1)") {
    Rng rng(4);
    GceParams p = init_gce(4, 3, GateMode::Scalar, rng);
    ContextQueue q(4, 3);
    for (int i = 0; i < 4; ++i) q.push(vec({rng.gaussian(), rng.gaussian(), rng.gaussian()}));
    Tensor rows = Tensor::from({1, 12}, q.concat());
    Tensor gates = sigmoid(matmul(rows, p.gate_weights, true));
    for (std::size_t i = 0; i < gates.size(); ++i) {
        CHECK(gates.at(i) > 0.0);
        CHECK(gates.at(i) < 1.0);
    }
}

TEST_CASE("zero queue gives exactly zero context") {
    Rng rng(5);
    GceParams p = init_gce(4, 3, GateMode::Scalar, rng);
    ContextQueue q(4, 3);
    Tensor c = gce_forward(q, p);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c.at(i) == 0.0);

    // and after a reset of a used queue
    q.push(vec({1.0, 2.0, 3.0}));
    q.reset();
    Tensor c2 = gce_forward(q, p);
    for (std::size_t i = 0; i < c2.size(); ++i) CHECK(c2.at(i) == 0.0);
}

TEST_CASE("grouped summation aggregates gated vectors") {
    // aggregation of r vectors [1,0],[0,1],[2,2] -> [3,3]
    Tensor rows = Tensor::from({3, 2}, {1, 0, 0, 1, 2, 2});
    Tensor c = sum_rows_grouped(rows, 3);
    CHECK(c.at(0) == doctest::Approx(3.0));
    CHECK(c.at(1) == doctest::Approx(3.0));
}

TEST_CASE("gate rows map to queue positions oldest-first") {
    Rng rng(14);
    GceParams p = init_gce(2, 1, GateMode::Scalar, rng);
    p.embed.values() = {1.0};
    // row 0 gates the oldest slot, row 1 the newest; make them opposite
    p.gate_weights.values() = {8.0, 8.0, -8.0, -8.0};
    ContextQueue q(2, 1);
    q.push({0.5}); // becomes the oldest after the next push
    q.push({0.5});
    // newest (j=1) uses row 1: gate ~ sigmoid(-8) ~ 0
    CHECK(gau_forward(q, p, 1).at(0) < 0.01);
    // oldest (j=2) uses row 0: gate ~ sigmoid(+8) ~ 1
    CHECK(gau_forward(q, p, 2).at(0) == doctest::Approx(std::tanh(0.5)).epsilon(1e-2));
}

TEST_CASE("gce_forward equals the sum of its gau outputs") {
    Rng rng(6);
    GceParams p = init_gce(3, 2, GateMode::Scalar, rng);
    ContextQueue q(3, 2);
    for (int i = 0; i < 3; ++i) q.push(vec({rng.gaussian(), rng.gaussian()}));
    Tensor c = gce_forward(q, p);
    double expect0 = 0.0, expect1 = 0.0;
    for (int j = 1; j <= 3; ++j) {
        Tensor r = gau_forward(q, p, j);
        expect0 += r.at(0);
        expect1 += r.at(1);
    }
    CHECK(c.at(0) == doctest::Approx(expect0).epsilon(1e-12));
    CHECK(c.at(1) == doctest::Approx(expect1).epsilon(1e-12));
}

TEST_CASE("context magnitude stays below queue capacity") {
    // states drawn from the operating range of real hidden activations;
    // pre-activations stay inside the region where tanh and sigmoid are
    // strictly inside their open ranges in double precision
    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const int m = rng.uniform_int(1, 6);
        const int d = rng.uniform_int(1, 4);
        GceParams p = init_gce(m, d, GateMode::Scalar, rng);
        ContextQueue q(m, d);
        const int pushes = rng.uniform_int(0, 2 * m);
        for (int i = 0; i < pushes; ++i) {
            std::vector<double> s;
            for (int j = 0; j < d; ++j) s.push_back(rng.uniform(-1.5, 1.5));
            q.push(s);
        }
        Tensor c = gce_forward(q, p);
        for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::fabs(c.at(i)) < static_cast<double>(m));
    }
}

TEST_CASE("permuting queue entries changes the context in general") {
    Rng rng(8);
    int changed = 0;
    const int trials = 50;
    for (int trial = 0; trial < trials; ++trial) {
        GceParams p = init_gce(3, 2, GateMode::Scalar, rng);
        std::vector<std::vector<double>> states;
        for (int i = 0; i < 3; ++i) states.push_back({rng.gaussian(), rng.gaussian()});

        ContextQueue q1(3, 2);
        for (const auto& s : states) q1.push(s);
        ContextQueue q2(3, 2);
        for (int i = 2; i >= 0; --i) q2.push(states[static_cast<std::size_t>(i)]);

        Tensor c1 = gce_forward(q1, p);
        Tensor c2 = gce_forward(q2, p);
        if (std::fabs(c1.at(0) - c2.at(0)) > 1e-9 || std::fabs(c1.at(1) - c2.at(1)) > 1e-9) ++changed;
    }
    CHECK(changed == trials);
}

TEST_CASE("gce gradient check over weights and entries") {
    Rng rng(9);
    for (GateMode mode : {GateMode::Scalar, GateMode::Vector}) {
        GceParams p = init_gce(3, 2, mode, rng);
        Tensor rows = Tensor::zeros({2, 6}, true);
        for (double& v : rows.values()) v = 0.5 * rng.gaussian();
        Tensor probe = Tensor::zeros({2, 2});
        for (double& v : probe.values()) v = rng.gaussian();
        ParamList params = p.params();
        params.push_back({"entries", rows});
        auto rep = grad_check([&]() { return sum(mul(gce_forward_rows(rows, p), probe)); }, params, 1e-4, 1e-4);
        CHECK_MESSAGE(rep.pass, "gce gate mode ", mode == GateMode::Scalar ? "scalar" : "vector", " err ",
                      rep.max_relative_error);
    }
}

TEST_CASE("lstm zero queue with zero-initialized cell gives zero output") {
    Rng rng(10);
    LstmParams p = init_lstm(3, rng); // bias starts at zero
    ContextQueue q(4, 3);
    Tensor c = lstm_context(q, p);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c.at(i) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("lstm over a single entry equals one cell step from zero state") {
    Rng rng(11);
    LstmParams p = init_lstm(2, rng);
    ContextQueue q(1, 2);
    q.push({0.3, -0.7});
    Tensor via_queue = lstm_context(q, p);

    // manual single step, h0 = c0 = 0
    Tensor x = Tensor::from({1, 2}, {0.3, -0.7});
    Tensor h0 = Tensor::zeros({1, 2});
    Tensor gates = affine(concat_cols({x, h0}), p.weight, p.bias);
    Tensor ig = sigmoid(slice_cols(gates, 0, 2));
    Tensor cg = tanh(slice_cols(gates, 4, 2));
    Tensor og = sigmoid(slice_cols(gates, 6, 2));
    Tensor cell = mul(ig, cg);
    Tensor expect = mul(og, tanh(cell));
    CHECK(via_queue.at(0) == doctest::Approx(expect.at(0)).epsilon(1e-12));
    CHECK(via_queue.at(1) == doctest::Approx(expect.at(1)).epsilon(1e-12));
}

TEST_CASE("lstm gradient check") {
    Rng rng(12);
    LstmParams p = init_lstm(2, rng);
    Tensor rows = Tensor::zeros({2, 6}, true);
    for (double& v : rows.values()) v = 0.5 * rng.gaussian();
    Tensor probe = Tensor::zeros({2, 2});
    for (double& v : probe.values()) v = rng.gaussian();
    ParamList params = p.params();
    params.push_back({"entries", rows});
    auto rep = grad_check([&]() { return sum(mul(lstm_context_rows(rows, p, 3), probe)); }, params, 1e-4, 1e-4);
    CHECK_MESSAGE(rep.pass, "lstm err ", rep.max_relative_error);
}

TEST_CASE("gce parameter counts are reported") {
    Rng rng(13);
    GceParams p = init_gce(4, 3, GateMode::Scalar, rng);
    CHECK(p.parameter_count() == 3 * 3 + 4 * 12);
    GceParams pv = init_gce(4, 3, GateMode::Vector, rng);
    CHECK(pv.parameter_count() == 3 * 3 + 12 * 12);
    LstmParams l = init_lstm(3, rng);
    CHECK(l.parameter_count() == 6 * 12 + 12);
}
