#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "imgnb/estimators.hpp"

using namespace imgnb;

namespace {

UserEstimatorConfig small_cfg() {
    UserEstimatorConfig cfg;
    cfg.d1 = 2;
    cfg.d2 = 2;
    cfg.hidden = {6, 6};
    cfg.train.lr = 0.05;
    cfg.train.epochs = 10;
    cfg.train.buffer = 64;
    return cfg;
}

ArmProfile arm0() { return ArmProfile{0, {0.8, 0.1}}; }
ContextVec ctx0() { return {0.3, 0.6}; }

void zero_nets(UserEstimatorBank& bank) {
    for (std::size_t u = 0; u < bank.users(); ++u) {
        bank.exploit_net(u) = EstimatorNet::zeros(bank.exploit_net(u).layer_dims());
        bank.explore_net(u) = EstimatorNet::zeros(bank.explore_net(u).layer_dims());
    }
}

}  // namespace

TEST_CASE("estimate_probs: zero-initialized nets give the zero vector") {
    Rng rng(1);
    UserEstimatorBank bank(3, small_cfg(), rng);
    zero_nets(bank);
    for (double p : bank.estimate_probs(arm0(), ctx0())) CHECK(p == 0.0);
}

TEST_CASE("estimate_probs: heavy training on label 1 pushes the estimate up") {
    Rng rng(2);
    UserEstimatorBank bank(1, small_cfg(), rng);
    std::vector<double> prev_losses;
    for (int round = 0; round < 40; ++round) {
        const auto losses = bank.train_round(ctx0(), {arm0()}, {1.0});
        prev_losses.push_back(losses.exploit[0]);
    }
    CHECK(bank.estimate_probs(arm0(), ctx0())[0] >= 0.9);
    // exploit loss strictly decreases over the first rounds
    for (int i = 1; i < 5; ++i) CHECK(prev_losses[i] < prev_losses[i - 1]);
}

TEST_CASE("estimate_probs: element u ignores other users' networks") {
    Rng rng(3);
    UserEstimatorBank bank(3, small_cfg(), rng);
    const auto before = bank.estimate_probs(arm0(), ctx0());
    bank.exploit_net(1) = EstimatorNet::zeros(bank.exploit_net(1).layer_dims());
    const auto after = bank.estimate_probs(arm0(), ctx0());
    CHECK(after[0] == before[0]);
    CHECK(after[2] == before[2]);
}

TEST_CASE("estimate_probs outputs stay in [0, 1]") {
    Rng rng(4);
    UserEstimatorBank bank(5, small_cfg(), rng);
    for (int trial = 0; trial < 20; ++trial) {
        ArmProfile arm{0, {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)}};
        ContextVec ctx = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        for (double p : bank.estimate_probs(arm, ctx)) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("estimate_gains: zero explore nets give zero gains") {
    Rng rng(5);
    UserEstimatorBank bank(3, small_cfg(), rng);
    for (std::size_t u = 0; u < 3; ++u)
        bank.explore_net(u) = EstimatorNet::zeros(bank.explore_net(u).layer_dims());
    for (double g : bank.estimate_gains(arm0(), ctx0())) CHECK(g == 0.0);
}

TEST_CASE("pooled gradient length matches the declared explore input dim") {
    Rng rng(6);
    UserEstimatorConfig cfg = small_cfg();
    UserEstimatorBank bank(2, cfg, rng);
    const std::size_t params = bank.exploit_net(0).param_count();
    CHECK(bank.pooled_dim() == (params + bank.pool_step() - 1) / bank.pool_step());
    CHECK(bank.pooled_dim() <= 64);
    for (std::size_t u = 0; u < 2; ++u) {
        const FlatGradient g =
            grad_wrt_params(bank.exploit_net(u), std::vector<double>{1, 0, 0, 1});
        CHECK(avg_pool(g.values, bank.pool_step()).size() == bank.explore_net(u).input_dim());
    }
}

TEST_CASE("estimate_gains change when the exploit net moves") {
    Rng rng(7);
    UserEstimatorBank bank(2, small_cfg(), rng);
    const auto before = bank.estimate_gains(arm0(), ctx0());
    // move user 0's exploit net only; its gradient (the explore input) moves
    std::vector<double> x = {0.8, 0.1, 0.3, 0.6};
    sgd_step(bank.exploit_net(0), x, std::vector<double>{1.0}, 0.5);
    const auto after = bank.estimate_gains(arm0(), ctx0());
    CHECK(after[0] != before[0]);
    CHECK(after[1] == before[1]);
}

TEST_CASE("train_round: zero labels on zero nets change nothing") {
    Rng rng(8);
    UserEstimatorBank bank(2, small_cfg(), rng);
    zero_nets(bank);
    const auto losses = bank.train_round(ctx0(), {arm0()}, {0.0, 0.0});
    for (double l : losses.exploit) CHECK(l == 0.0);
    for (double l : losses.explore) CHECK(l == 0.0);
    for (double p : bank.estimate_probs(arm0(), ctx0())) CHECK(p == 0.0);
}

TEST_CASE("train_round: explore samples are taken at pre-update parameters") {
    Rng rng(9);
    UserEstimatorBank bank(1, small_cfg(), rng);
    for (int round = 0; round < 3; ++round) bank.train_round(ctx0(), {arm0()}, {1.0});

    // expectation computed before the round trains h1
    std::vector<double> x = {0.8, 0.1, 0.3, 0.6};
    const double expected_target = 1.0 - clip01(fc_forward(bank.exploit_net(0), x)[0]);
    const FlatGradient g = grad_wrt_params(bank.exploit_net(0), x);
    const std::vector<double> expected_input = avg_pool(g.values, bank.pool_step());

    bank.train_round(ctx0(), {arm0()}, {1.0});
    const Sample& s = bank.explore_buffer(0).items().back();
    CHECK(s.target[0] == expected_target);
    CHECK(s.x == expected_input);

    // and the post-update residual differs, so the ordering is observable
    const double post_target = 1.0 - clip01(fc_forward(bank.exploit_net(0), x)[0]);
    CHECK(post_target != expected_target);
}

TEST_CASE("train_round: one sample per chosen arm lands in each buffer") {
    Rng rng(10);
    UserEstimatorBank bank(2, small_cfg(), rng);
    ArmProfile a{0, {1.0, 0.0}}, b{1, {0.0, 1.0}};
    bank.train_round(ctx0(), {a, b}, {1.0, 0.0});
    CHECK(bank.exploit_buffer(0).size() == 2);
    CHECK(bank.explore_buffer(0).size() == 2);
    CHECK(bank.exploit_buffer(1).size() == 2);
}

TEST_CASE("train_round rejects label vectors of the wrong length") {
    Rng rng(11);
    UserEstimatorBank bank(2, small_cfg(), rng);
    CHECK_THROWS_AS(bank.train_round(ctx0(), {arm0()}, {1.0}), std::invalid_argument);
}
