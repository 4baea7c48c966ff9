#include "fedfair/model.hpp"

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

using namespace fedfair;

TEST_CASE("parameter layout for a two-hidden-feature spec") {
    ModelSpec spec{{4, 8, 3}};
    CHECK(param_count(spec) == 67);  // 4*8+8 weights+biases, then 8*3+3

    const auto ranges = layer_ranges(spec);
    REQUIRE(ranges.size() == 2);
    CHECK(ranges[0].w_begin == 0);
    CHECK(ranges[0].b_begin == 32);
    CHECK(ranges[0].end == 40);
    CHECK(ranges[1].w_begin == 40);
    CHECK(ranges[1].b_begin == 64);
    CHECK(ranges[1].end == 67);

    const IndexRange top = final_layer_range(spec);
    CHECK(top.begin == 40);
    CHECK(top.end == 67);
}

TEST_CASE("spec validation") {
    const ModelSpec only_input{{5}};
    const ModelSpec zero_width{{5, 0, 3}};
    const ModelSpec one_class{{5, 1}};
    const ModelSpec smallest{{5, 2}};
    CHECK_THROWS_AS(only_input.validate(), std::invalid_argument);
    CHECK_THROWS_AS(zero_width.validate(), std::invalid_argument);
    CHECK_THROWS_AS(one_class.validate(), std::invalid_argument);
    CHECK_NOTHROW(smallest.validate());
}

TEST_CASE("init is deterministic, bounded, and seed sensitive") {
    ModelSpec spec{{6, 5, 4}};
    const ParamVector a = init_params(spec, 42);
    const ParamVector b = init_params(spec, 42);
    REQUIRE(a.size() == param_count(spec));
    CHECK(a.values == b.values);

    const ParamVector c = init_params(spec, 43);
    CHECK(a.values != c.values);

    for (const LayerRange& r : layer_ranges(spec)) {
        const double limit = std::sqrt(6.0 / (r.fan_in + r.fan_out));
        for (size_t i = r.w_begin; i < r.b_begin; ++i) {
            CHECK(a[i] >= -limit);
            CHECK(a[i] <= limit);
        }
        for (size_t i = r.b_begin; i < r.end; ++i) CHECK(a[i] == 0.0);
    }
}

TEST_CASE("forward on zero parameters gives zero logits") {
    ModelSpec spec{{3, 4, 2}};
    ParamVector zero;
    zero.values.assign(param_count(spec), 0.0);
    const Batch b = oracle::random_batch(5, 3, 2, 7);
    const Matrix logits = forward(zero, spec, b.features);
    for (double v : logits.data) CHECK(v == 0.0);
}

TEST_CASE("forward matches a hand-evaluated single-hidden-unit net") {
    ModelSpec spec{{1, 1, 2}};
    ParamVector p;
    p.values = {0.7,          // w1 (1x1)
                0.25,         // b1
                1.5, -2.0,    // w2 (1x2)
                0.1, -0.3};   // b2
    Matrix x(2, 1);
    x.at(0, 0) = 0.4;
    x.at(1, 0) = -1.2;
    const Matrix logits = forward(p, spec, x);
    for (size_t r = 0; r < 2; ++r) {
        const double a1 = std::tanh(0.7 * x.at(r, 0) + 0.25);
        CHECK(logits.at(r, 0) == doctest::Approx(a1 * 1.5 + 0.1).epsilon(1e-14));
        CHECK(logits.at(r, 1) == doctest::Approx(a1 * -2.0 - 0.3).epsilon(1e-14));
    }
}

TEST_CASE("forward rejects mismatched widths") {
    ModelSpec spec{{3, 2}};
    ParamVector p = init_params(spec, 1);
    Matrix wide(2, 4);
    CHECK_THROWS_AS(forward(p, spec, wide), std::invalid_argument);
    ParamVector truncated = p;
    truncated.values.pop_back();
    Matrix ok(2, 3);
    CHECK_THROWS_AS(forward(truncated, spec, ok), std::invalid_argument);
}

TEST_CASE("duplicated rows produce duplicated logits") {
    ModelSpec spec{{4, 6, 3}};
    const ParamVector p = init_params(spec, 9);
    Batch b = oracle::random_batch(1, 4, 3, 11);
    Batch twice;
    twice.features = Matrix(2, 4);
    for (size_t j = 0; j < 4; ++j) {
        twice.features.at(0, j) = b.features.at(0, j);
        twice.features.at(1, j) = b.features.at(0, j);
    }
    const Matrix logits = forward(p, spec, twice.features);
    for (size_t j = 0; j < 3; ++j) CHECK(logits.at(0, j) == logits.at(1, j));
}

TEST_CASE("softmax against the direct exp/sum oracle") {
    const std::vector<double> z{1.0, 2.0, 3.0};
    const auto p = softmax(z, 1.0);
    const double e1 = std::exp(1.0), e2 = std::exp(2.0), e3 = std::exp(3.0);
    const double s = e1 + e2 + e3;
    CHECK(p[0] == doctest::Approx(e1 / s).epsilon(1e-13));
    CHECK(p[1] == doctest::Approx(e2 / s).epsilon(1e-13));
    CHECK(p[2] == doctest::Approx(e3 / s).epsilon(1e-13));
    // frozen values
    CHECK(p[0] == doctest::Approx(0.09003057317038046).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.24472847105479764).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(0.66524095577482186).epsilon(1e-12));
}

TEST_CASE("softmax edge behaviour") {
    const auto uniform = softmax(std::vector<double>{0.4, 0.4, 0.4, 0.4}, 1.0);
    for (double v : uniform) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

    // very large temperature flattens towards uniform
    const auto flat = softmax(std::vector<double>{1.0, 2.0, 3.0}, 1e9);
    for (double v : flat) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-5));

    // max shift keeps huge logits finite
    const auto big = softmax(std::vector<double>{1000.0, 999.0}, 1.0);
    CHECK(std::isfinite(big[0]));
    CHECK(big[0] + big[1] == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(softmax(std::vector<double>{1.0, 2.0}, 0.0), std::invalid_argument);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(softmax(std::vector<double>{1.0, inf}, 1.0), TrainingDiverged);
}

TEST_CASE("softmax rows sum to one across random draws") {
    Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> z(5);
        for (double& v : z) v = rng.uniform(-30.0, 30.0);
        const auto p = softmax(z, rng.uniform(0.1, 10.0));
        double s = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            s += v;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("cross entropy values") {
    Matrix logits(1, 4);  // uniform logits: loss is log(k)
    const std::vector<int> y0{2};
    CHECK(cross_entropy(logits, y0) == doctest::Approx(std::log(4.0)).epsilon(1e-13));

    Matrix confident(1, 4);
    confident.at(0, 1) = 50.0;
    CHECK(cross_entropy(confident, {1}) < 1e-15);
    CHECK(cross_entropy(confident, {1}) >= 0.0);

    // two-row batch averages the single-row losses
    Matrix two(2, 4);
    two.at(0, 1) = 3.0;
    two.at(1, 2) = -1.5;
    Matrix first(1, 4), second(1, 4);
    for (size_t j = 0; j < 4; ++j) {
        first.at(0, j) = two.at(0, j);
        second.at(0, j) = two.at(1, j);
    }
    const double mean_of_rows =
        0.5 * (cross_entropy(first, {1}) + cross_entropy(second, {0}));
    CHECK(cross_entropy(two, {1, 0}) == doctest::Approx(mean_of_rows).epsilon(1e-13));

    CHECK_THROWS_AS(cross_entropy(two, {1}), std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(two, {1, 4}), std::out_of_range);
    CHECK_THROWS_AS(cross_entropy(two, {1, -1}), std::out_of_range);
}

TEST_CASE("cross entropy is non-negative on random inputs") {
    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        Matrix logits(4, 6);
        for (double& v : logits.data) v = rng.uniform(-20.0, 20.0);
        std::vector<int> y(4);
        for (int& v : y) v = static_cast<int>(rng.below(6));
        CHECK(cross_entropy(logits, y) >= 0.0);
    }
}

TEST_CASE("cross-entropy gradient matches central differences") {
    ModelSpec spec{{5, 7, 4}};
    const ParamVector p = init_params(spec, 3);
    const Batch batch = oracle::random_batch(6, 5, 4, 4);
    const CompositeLoss ce = plain_cross_entropy();
    const ParamVector g = grad(p, spec, batch, ce);
    const auto f = [&](const ParamVector& q) { return loss_value(q, spec, batch, ce); };
    CHECK(oracle::max_grad_rel_err(f, p, g, 200, 5) < 1e-4);
}

TEST_CASE("gradient is exactly zero for weights fed by an all-zero feature") {
    ModelSpec spec{{3, 4, 2}};
    const ParamVector p = init_params(spec, 8);
    Batch b = oracle::random_batch(5, 3, 2, 9);
    for (size_t r = 0; r < b.size(); ++r) b.features.at(r, 1) = 0.0;  // freeze feature 1
    const ParamVector g = grad(p, spec, b, plain_cross_entropy());
    const auto ranges = layer_ranges(spec);
    const size_t fo = static_cast<size_t>(ranges[0].fan_out);
    for (size_t o = 0; o < fo; ++o) CHECK(g[ranges[0].w_begin + 1 * fo + o] == 0.0);
}

TEST_CASE("loss and gradient are permutation invariant over batch rows") {
    ModelSpec spec{{4, 5, 3}};
    const ParamVector p = init_params(spec, 21);
    const Batch b = oracle::random_batch(7, 4, 3, 22);
    std::vector<size_t> perm{3, 0, 6, 1, 5, 2, 4};
    const Batch shuffled = gather_rows(b, perm);

    const CompositeLoss ce = plain_cross_entropy();
    ParamVector g1, g2;
    const double l1 = loss_and_grad(p, spec, b, ce, g1);
    const double l2 = loss_and_grad(p, spec, shuffled, ce, g2);
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
    for (size_t i = 0; i < g1.size(); ++i)
        CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-11));
}

TEST_CASE("duplicating every row leaves the mean gradient unchanged") {
    ModelSpec spec{{4, 5, 3}};
    const ParamVector p = init_params(spec, 31);
    const Batch b = oracle::random_batch(4, 4, 3, 32);
    std::vector<size_t> twice{0, 1, 2, 3, 0, 1, 2, 3};
    const Batch doubled = gather_rows(b, twice);

    const ParamVector g1 = grad(p, spec, b, plain_cross_entropy());
    const ParamVector g2 = grad(p, spec, doubled, plain_cross_entropy());
    for (size_t i = 0; i < g1.size(); ++i)
        CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-12));
}

TEST_CASE("sgd_step without momentum is a plain gradient step") {
    ParamVector p;
    p.values = {1.0, -2.0, 0.5};
    ParamVector g;
    g.values = {0.5, 0.25, -1.0};
    SgdConfig cfg;
    cfg.lr = 0.1;
    SgdState st;
    sgd_step(p, g, cfg, st);
    CHECK(p[0] == 1.0 - 0.1 * 0.5);
    CHECK(p[1] == -2.0 - 0.1 * 0.25);
    CHECK(p[2] == 0.5 - 0.1 * -1.0);
}

TEST_CASE("two momentum steps with constant gradient accumulate 1 + 1.9 steps") {
    ParamVector p;
    p.values = {0.5};
    ParamVector g;
    g.values = {0.25};
    SgdConfig cfg;
    cfg.lr = 1.0;
    cfg.momentum = 0.9;
    SgdState st;
    sgd_step(p, g, cfg, st);
    sgd_step(p, g, cfg, st);
    CHECK(p[0] == 0.5 - 0.25 - (0.9 * 0.25 + 0.25));
}

TEST_CASE("weight decay enters the velocity, not the loss") {
    ParamVector p;
    p.values = {2.0};
    ParamVector g;
    g.values = {0.0};
    SgdConfig cfg;
    cfg.lr = 0.5;
    cfg.weight_decay = 0.1;
    SgdState st;
    sgd_step(p, g, cfg, st);
    CHECK(p[0] == 2.0 - 0.5 * (0.1 * 2.0));
}

TEST_CASE("sgd_step honours the active range and rejects bad layouts") {
    ParamVector p;
    p.values = {1.0, 1.0, 1.0, 1.0};
    ParamVector g;
    g.values = {1.0, 1.0, 1.0, 1.0};
    SgdConfig cfg;
    cfg.lr = 0.5;
    cfg.weight_decay = 0.25;
    SgdState st;
    const IndexRange active{1, 3};
    sgd_step(p, g, cfg, st, &active);
    CHECK(p[0] == 1.0);
    CHECK(p[3] == 1.0);
    CHECK(p[1] != 1.0);
    CHECK(p[2] != 1.0);

    ParamVector short_g;
    short_g.values = {1.0};
    SgdState st2;
    CHECK_THROWS_AS(sgd_step(p, short_g, cfg, st2), std::invalid_argument);
}

TEST_CASE("run_sgd is deterministic and honours the degenerate settings") {
    ModelSpec spec{{4, 6, 3}};
    const Batch train = oracle::random_batch(20, 4, 3, 55);
    SgdConfig cfg;
    cfg.lr = 0.2;
    cfg.batch_size = 5;
    cfg.epochs = 3;
    const auto make_loss = [](const Batch&) { return plain_cross_entropy(); };

    ParamVector a = init_params(spec, 1);
    ParamVector b = init_params(spec, 1);
    Rng ra(99), rb(99);
    run_sgd(a, spec, train, cfg, ra, make_loss);
    run_sgd(b, spec, train, cfg, rb, make_loss);
    CHECK(a.values == b.values);

    ParamVector frozen_lr = init_params(spec, 1);
    SgdConfig zero_lr = cfg;
    zero_lr.lr = 0.0;
    Rng rc(99);
    run_sgd(frozen_lr, spec, train, zero_lr, rc, make_loss);
    CHECK(frozen_lr.values == init_params(spec, 1).values);

    ParamVector frozen_ep = init_params(spec, 1);
    SgdConfig zero_ep = cfg;
    zero_ep.epochs = 0;
    Rng rd(99);
    run_sgd(frozen_ep, spec, train, zero_ep, rd, make_loss);
    CHECK(frozen_ep.values == init_params(spec, 1).values);

    Batch none;
    Rng re(99);
    ParamVector q = init_params(spec, 1);
    CHECK_THROWS_AS(run_sgd(q, spec, none, cfg, re, make_loss), std::invalid_argument);
}

TEST_CASE("run_sgd reduces the loss on separable data") {
    ModelSpec spec{{2, 8, 2}};
    Batch train;
    train.features = Matrix(40, 2);
    train.labels.resize(40);
    Rng rng(5);
    for (size_t i = 0; i < 40; ++i) {
        const int y = static_cast<int>(i % 2);
        train.features.at(i, 0) = (y == 0 ? -2.0 : 2.0) + 0.3 * rng.normal();
        train.features.at(i, 1) = (y == 0 ? 1.5 : -1.5) + 0.3 * rng.normal();
        train.labels[i] = y;
    }
    ParamVector p = init_params(spec, 2);
    const double before = loss_value(p, spec, train, plain_cross_entropy());
    SgdConfig cfg;
    cfg.lr = 0.3;
    cfg.batch_size = 8;
    cfg.epochs = 30;
    Rng rng2(6);
    run_sgd(p, spec, train, cfg, rng2, [](const Batch&) { return plain_cross_entropy(); });
    const double after = loss_value(p, spec, train, plain_cross_entropy());
    CHECK(after < before);
    CHECK(after < 0.1);
}

TEST_CASE("strict SgdConfig validation flags bad fields with their key path") {
    SgdConfig cfg;
    cfg.lr = 0.0;
    CHECK_THROWS_WITH_AS(cfg.validate("local"), "local.lr must be positive",
                         std::invalid_argument);
    cfg.lr = 0.1;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate("local"), std::invalid_argument);
}
