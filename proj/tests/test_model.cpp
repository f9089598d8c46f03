#include <doctest.h>

#include <cmath>

#include "ssag/grad_check.hpp"
#include "ssag/model.hpp"

using namespace ssag;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg = default_model_config({5}, 3);
    cfg.d = 4;
    cfg.m = 3;
    cfg.noise_dim = 2;
    cfg.fusion_width = 6;
    cfg.trunk_width = 6;
    cfg.encoder_widths = {4, 4};
    return cfg;
}

Tensor randn(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.values()) v = scale * rng.gaussian();
    return t;
}

} // namespace

TEST_CASE("init_params is deterministic and validates config") {
    const ModelConfig cfg = tiny_config();
    ModelParams a = init_params(cfg, 42);
    ModelParams b = init_params(cfg, 42);
    const ParamList pa = a.all_params();
    const ParamList pb = b.all_params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].name == pb[i].name);
        CHECK(pa[i].tensor.values() == pb[i].tensor.values()); // bit identical
    }

    ModelConfig bad = cfg;
    bad.k = 0;
    CHECK_THROWS_AS(init_params(bad, 1), config_error);
    ModelConfig bad_d = cfg;
    bad_d.encoder_widths = {4, 7}; // last width must equal d
    CHECK_THROWS_AS(init_params(bad_d, 1), config_error);
}

TEST_CASE("parameter count matches the closed-form sum") {
    const ModelConfig cfg = tiny_config();
    ModelParams mp = init_params(cfg, 1);
    CHECK(mp.trainable_parameter_count() == analytic_parameter_count(cfg));

    ModelConfig img = default_model_config({1, 8, 8}, 4);
    img.d = 6;
    img.m = 2;
    img.encoder_widths = {3, 4};
    ModelParams mi = init_params(img, 2);
    CHECK(mi.trainable_parameter_count() == analytic_parameter_count(img));

    ModelConfig lstm_cfg = tiny_config();
    lstm_cfg.context = ContextKind::Lstm;
    ModelParams ml = init_params(lstm_cfg, 3);
    CHECK(ml.trainable_parameter_count() == analytic_parameter_count(lstm_cfg));
}

TEST_CASE("generator output has code length k in (0,1) and is repeatable") {
    const ModelConfig cfg = tiny_config();
    ModelParams mp = init_params(cfg, 7);
    Rng rng(3);
    Tensor x = randn({2, 5}, rng);
    Tensor z = randn({2, 2}, rng);
    Tensor c = Tensor::zeros({2, 4});

    Generator::Out out1 = mp.generator.forward(cfg, x, z, c, Mode::Train);
    CHECK(out1.code.shape() == std::vector<int>{2, 3});
    CHECK(out1.hidden.shape() == std::vector<int>{2, 4});
    for (std::size_t i = 0; i < out1.code.size(); ++i) {
        CHECK(out1.code.at(i) > 0.0);
        CHECK(out1.code.at(i) < 1.0);
    }
    Generator::Out out2 = mp.generator.forward(cfg, x, z, c, Mode::Train);
    CHECK(out1.code.values() == out2.code.values());
}

TEST_CASE("different noise draws generally change the code") {
    // single-frame forwards run in eval mode (train-mode batch statistics are
    // meaningless for a batch of one)
    const ModelConfig cfg = tiny_config();
    ModelParams mp = init_params(cfg, 7);
    Rng rng(5);
    Tensor x = randn({1, 5}, rng);
    Tensor c = Tensor::zeros({1, 4});
    int differing = 0;
    Generator::Out base = mp.generator.forward(cfg, x, randn({1, 2}, rng), c, Mode::Eval);
    for (int trial = 0; trial < 10; ++trial) {
        Generator::Out out = mp.generator.forward(cfg, x, randn({1, 2}, rng), c, Mode::Eval);
        for (int j = 0; j < 3; ++j)
            if (std::fabs(out.code.at2(0, j) - base.code.at2(0, j)) > 1e-9) {
                ++differing;
                break;
            }
    }
    CHECK(differing >= 1);
}

TEST_CASE("discriminator heads: simplex rows, open-interval score, code sensitivity") {
    const ModelConfig cfg = tiny_config();
    ModelParams mp = init_params(cfg, 11);
    Rng rng(6);
    Tensor x = randn({3, 5}, rng);
    Tensor codes = Tensor::from({3, 3}, {0.2, 0.5, 0.3, 0.9, 0.05, 0.05, 0.1, 0.1, 0.8});

    Discriminator::Out out = mp.discriminator.forward(x, codes, Mode::Train);
    for (int i = 0; i < 3; ++i) {
        double s = 0.0;
        for (int j = 0; j < 3; ++j) s += out.class_probs.at2(i, j);
        CHECK(std::fabs(s - 1.0) < 1e-12);
        CHECK(out.real_prob.at2(i, 0) > 0.0);
        CHECK(out.real_prob.at2(i, 0) < 1.0);
    }

    // perturbing only the code must change both heads
    int changed = 0;
    for (int trial = 0; trial < 10; ++trial) {
        Tensor bumped = codes.detach();
        bumped.values()[static_cast<std::size_t>(trial) % bumped.size()] += 0.05;
        Discriminator::Out out2 = mp.discriminator.forward(x, bumped, Mode::Train);
        bool adv_change = false, cls_change = false;
        for (std::size_t i = 0; i < out2.real_prob.size(); ++i)
            if (std::fabs(out2.real_prob.at(i) - out.real_prob.at(i)) > 1e-12) adv_change = true;
        for (std::size_t i = 0; i < out2.class_probs.size(); ++i)
            if (std::fabs(out2.class_probs.at(i) - out.class_probs.at(i)) > 1e-12) cls_change = true;
        if (adv_change && cls_change) ++changed;
    }
    CHECK(changed == 10);
}

TEST_CASE("x-only classifier mode ignores the code for the class head") {
    ModelConfig cfg = tiny_config();
    cfg.classifier_sees_code = false;
    ModelParams mp = init_params(cfg, 11);
    Rng rng(6);
    Tensor x = randn({2, 5}, rng);
    Tensor c1 = Tensor::from({2, 3}, {0.2, 0.5, 0.3, 0.9, 0.05, 0.05});
    Tensor c2 = Tensor::from({2, 3}, {0.7, 0.1, 0.2, 0.3, 0.3, 0.4});
    Discriminator::Out o1 = mp.discriminator.forward(x, c1, Mode::Eval);
    Discriminator::Out o2 = mp.discriminator.forward(x, c2, Mode::Eval);
    CHECK(o1.class_probs.values() == o2.class_probs.values());
    // the adversarial head still consumes the code
    bool adv_change = false;
    for (std::size_t i = 0; i < o1.real_prob.size(); ++i)
        if (o1.real_prob.at(i) != o2.real_prob.at(i)) adv_change = true;
    CHECK(adv_change);
}

TEST_CASE("end-to-end gradient check through both networks") {
    const ModelConfig cfg = tiny_config();
    auto mp = std::make_shared<ModelParams>(init_params(cfg, 13));
    Rng rng(8);
    auto x = randn({2, 5}, rng);
    auto z = randn({2, 2}, rng);
    auto queue_rows = randn({2, 12}, rng, 0.5);
    std::vector<int> labels{0, 2};

    ParamList params = mp->all_params();
    auto rep = grad_check(
        [=]() {
            Tensor c = mp->context_from_rows(queue_rows, 2);
            Generator::Out gen = mp->generator.forward(mp->config, x, z, c, Mode::Train);
            Discriminator::Out d = mp->discriminator.forward(x, gen.code, Mode::Train);
            Tensor loss = bce_loss(d.real_prob, {1.0, 1.0});
            return add(loss, scale(ce_loss(d.class_probs, labels), 100.0));
        },
        params, 1e-4, 1e-4);
    CHECK_MESSAGE(rep.pass, "end-to-end err ", rep.max_relative_error, " at ", rep.worst_param);
}

TEST_CASE("image encoder forward and gradient check") {
    ModelConfig cfg = default_model_config({1, 8, 8}, 3);
    cfg.d = 4;
    cfg.m = 0;
    cfg.context = ContextKind::None;
    cfg.noise_dim = 2;
    cfg.fusion_width = 5;
    cfg.trunk_width = 5;
    cfg.encoder_widths = {2, 3};
    auto mp = std::make_shared<ModelParams>(init_params(cfg, 21));
    Rng rng(9);
    auto x = randn({2, 1, 8, 8}, rng);
    auto z = randn({2, 2}, rng);
    Tensor c = Tensor::zeros({2, 4});

    Generator::Out out = mp->generator.forward(cfg, x, z, c, Mode::Train);
    CHECK(out.code.shape() == std::vector<int>{2, 3});
    CHECK(out.hidden.shape() == std::vector<int>{2, 4});

    ParamList params = mp->generator.params();
    std::vector<int> labels{1, 2};
    // h = 1e-5: the conv + channel-BN composition has enough curvature that
    // central differences at 1e-4 leave ~1e-4 truncation error
    auto rep = grad_check(
        [=]() {
            Generator::Out gen = mp->generator.forward(cfg, x, z, Tensor::zeros({2, 4}), Mode::Train);
            return ce_loss(softmax(gen.code), labels);
        },
        params, 1e-5, 1e-4);
    CHECK_MESSAGE(rep.pass, "image encoder err ", rep.max_relative_error);
}

TEST_CASE("head independence: cgan and ssa-gan share initialization") {
    // identical seeds give identical generators whether or not the
    // classification objective will be used
    const ModelConfig cfg = tiny_config();
    ModelParams ssa = init_params(cfg, 99);
    ModelParams cgan = init_params(cfg, 99);
    Rng rng(10);
    Tensor x = randn({1, 5}, rng);
    Tensor z = randn({1, 2}, rng);
    Tensor queue_rows = randn({1, 12}, rng, 0.5);

    Tensor ca = ssa.context_from_rows(queue_rows, 1);
    Tensor cb = cgan.context_from_rows(queue_rows, 1);
    CHECK(ca.values() == cb.values());
    Generator::Out ga = ssa.generator.forward(cfg, x, z, ca, Mode::Eval);
    Generator::Out gb = cgan.generator.forward(cfg, x, z, cb, Mode::Eval);
    CHECK(ga.code.values() == gb.code.values());
    Discriminator::Out da = ssa.discriminator.forward(x, ga.code, Mode::Eval);
    Discriminator::Out db = cgan.discriminator.forward(x, gb.code, Mode::Eval);
    CHECK(da.real_prob.values() == db.real_prob.values());
}
