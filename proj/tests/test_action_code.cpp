#include <doctest.h>

#include <cmath>

#include "ssag/action_code.hpp"
#include "ssag/rng.hpp"

using namespace ssag;

TEST_CASE("encode places 255 at the class index") {
    const ActionCode c3 = encode_action(3, 7);
    CHECK(c3.values == std::vector<double>{0, 0, 0, 255, 0, 0, 0});
    const ActionCode c5 = encode_action(5, 7);
    CHECK(c5.values == std::vector<double>{0, 0, 0, 0, 0, 255, 0});
    const ActionCode c0 = encode_action(0, 2);
    CHECK(c0.values == std::vector<double>{255, 0});
}

TEST_CASE("encode rejects out-of-range classes and tiny k") {
    CHECK_THROWS_AS(encode_action(7, 7), index_error);
    CHECK_THROWS_AS(encode_action(0, 1), config_error);
}

TEST_CASE("decode is argmax with low-index tie break") {
    CHECK(decode_action(encode_action(5, 7)) == 5);
    CHECK(decode_action(ActionCode{{0.1, 0.7, 0.2}}) == 1);
    CHECK(decode_action(ActionCode{{0.5, 0.5, 0.5}}) == 0);
}

TEST_CASE("normalize converts between forms and round trips") {
    const ActionCode ext{{255.0, 0.0}};
    const ActionCode internal = normalize_action(ext, CodeForm::ToInternal);
    CHECK(internal.values == std::vector<double>{1.0, 0.0});
    CHECK(normalize_action(internal, CodeForm::ToExternal).values == std::vector<double>{255.0, 0.0});

    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        ActionCode code;
        for (int i = 0; i < 6; ++i) code.values.push_back(rng.uniform(0.0, 255.0));
        const ActionCode round = normalize_action(normalize_action(code, CodeForm::ToInternal), CodeForm::ToExternal);
        for (std::size_t i = 0; i < code.values.size(); ++i)
            CHECK(std::fabs(round.values[i] - code.values[i]) < 1e-12);
    }
}

TEST_CASE("decode(encode(c,k)) == c exhaustively for k in 2..64") {
    for (int k = 2; k <= 64; ++k)
        for (int c = 0; c < k; ++c) CHECK(decode_action(encode_action(c, k)) == c);
}

TEST_CASE("encode output has L1 norm 255") {
    for (int k = 2; k <= 16; ++k)
        for (int c = 0; c < k; ++c) {
            double l1 = 0.0;
            for (double v : encode_action(c, k).values) l1 += std::fabs(v);
            CHECK(l1 == 255.0);
        }
}

TEST_CASE("decode is invariant under positive scaling") {
    Rng rng(10);
    for (int trial = 0; trial < 200; ++trial) {
        ActionCode code;
        const int k = rng.uniform_int(2, 12);
        for (int i = 0; i < k; ++i) code.values.push_back(rng.uniform(0.0, 1.0));
        const int base = decode_action(code);
        ActionCode scaled = code;
        const double s = rng.uniform(0.01, 50.0);
        for (double& v : scaled.values) v *= s;
        CHECK(decode_action(scaled) == base);
    }
}

TEST_CASE("batch encoding produces internal one-hot rows") {
    const auto rows = encode_batch_internal({2, 0}, 3);
    CHECK(rows == std::vector<double>{0, 0, 1, 1, 0, 0});
    CHECK_THROWS_AS(encode_batch_internal({3}, 3), index_error);
}

TEST_CASE("byte serialization rounds and clamps") {
    const auto bytes = code_to_bytes(ActionCode{{1.0, 0.0, 0.5, 1.2}});
    CHECK(bytes == std::vector<unsigned char>{255, 0, 128, 255});
}
