#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "flow_actor.hpp"
#include "mlp.hpp"
#include "rng.hpp"

using namespace fpo;

namespace {

// Velocity net that ignores its input: v(x, tau | s) = c.
FlowActor constant_field(int d, int D, const Vec& c, int flow_steps,
                         ExploreConfig ex) {
  Mlp net({d + D + 1, D}, Activation::kIdentity);
  const std::size_t w_count = static_cast<std::size_t>(d + D + 1) * D;
  for (int i = 0; i < D; ++i)
    net.params()[w_count + static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)];
  return FlowActor(d, D, std::move(net), flow_steps, ex);
}

// v(x, tau | s) = -x.
FlowActor decay_field(int d, int D, int flow_steps) {
  Mlp net({d + D + 1, D}, Activation::kIdentity);
  const int in = d + D + 1;
  for (int i = 0; i < D; ++i)
    net.params()[static_cast<std::size_t>(i * in + d + i)] = -1.0;
  return FlowActor(d, D, std::move(net), flow_steps, ExploreConfig{});
}

}  // namespace

TEST_CASE("velocity: input assembled as [s, x, tau]") {
  const int d = 2, D = 3;
  Mlp net({d + D + 1, D}, Activation::kIdentity);
  const int in = d + D + 1;
  // v0 = s1, v1 = x2, v2 = tau.
  net.params()[static_cast<std::size_t>(0 * in + 1)] = 1.0;
  net.params()[static_cast<std::size_t>(1 * in + d + 2)] = 1.0;
  net.params()[static_cast<std::size_t>(2 * in + d + D)] = 1.0;
  FlowActor actor(d, D, std::move(net), 4, ExploreConfig{});
  const Vec s = {10.0, 20.0};
  const Vec x = {1.0, 2.0, 3.0};
  const Vec v = actor.velocity(x, 0.75, s);
  CHECK(v[0] == doctest::Approx(20.0));
  CHECK(v[1] == doctest::Approx(3.0));
  CHECK(v[2] == doctest::Approx(0.75));
}

TEST_CASE("explore: constant field telescopes to x + K*eta*c") {
  const Vec c = {1.0, -2.0};
  ExploreConfig ex;
  ex.steps = 3;
  ex.step_size = 0.1;
  ex.noise = 0.0;
  FlowActor actor = constant_field(2, 2, c, 4, ex);
  Rng rng(0);
  const Vec out = actor.explore({0.5, 0.5}, std::vector<double>{0.0, 0.0}, rng);
  CHECK(out[0] == doctest::Approx(0.5 + 0.3 * 1.0));
  CHECK(out[1] == doctest::Approx(0.5 + 0.3 * (-2.0)));
}

TEST_CASE("explore: zero noise is deterministic, noise consumes rng") {
  Rng init(4);
  FlowActor actor(3, 4, {16}, 8, ExploreConfig{4, 0.05, 0.0, 1.0}, init);
  const Vec s = {0.1, 0.2, 0.3};
  Rng r1(9), r2(9);
  const Vec a = actor.explore({0.1, 0.1, 0.1, 0.1}, s, r1);
  const Vec b = actor.explore({0.1, 0.1, 0.1, 0.1}, s, r2);
  CHECK(a == b);
  CHECK(r1.next_u64() == r2.next_u64());

  actor.explore_config().noise = 0.05;
  Rng r3(9), r4(9);
  const Vec n1 = actor.explore({0.1, 0.1, 0.1, 0.1}, s, r3);
  const Vec n2 = actor.explore({0.1, 0.1, 0.1, 0.1}, s, r4);
  CHECK(n1 == n2);
  CHECK(n1 != a);
}

TEST_CASE("explore: K steps equal K manual single steps") {
  Rng init(21);
  FlowActor actor(2, 3, {12}, 6, ExploreConfig{3, 0.07, 0.02, 1.0}, init);
  const Vec s = {0.4, -0.4};
  const Vec start = {0.3, -0.2, 0.1};
  Rng ra(123);
  const Vec whole = actor.explore(start, s, ra);

  FlowActor stepper = actor;
  stepper.explore_config().steps = 1;
  Rng rb(123);
  Vec x = start;
  for (int k = 0; k < 3; ++k) x = stepper.explore(std::move(x), s, rb);
  CHECK(whole == x);
}

TEST_CASE("sample_latent: linear decay field matches closed form") {
  const int N = 128;
  FlowActor actor = decay_field(1, 2, N);
  Rng rng(33);
  const auto [x1, x0] = actor.sample_latent(std::vector<double>{0.0}, rng);
  const double factor = std::pow(1.0 - 1.0 / N, N);
  CHECK(x1[0] == doctest::Approx(x0[0] * factor).epsilon(1e-10));
  CHECK(x1[1] == doctest::Approx(x0[1] * factor).epsilon(1e-10));
  // The N-step Euler contraction approaches exp(-1).
  CHECK(std::abs(factor - std::exp(-1.0)) < 2e-3);
}

TEST_CASE("sample_latent: bit-reproducible given the rng state") {
  Rng init(8);
  FlowActor actor(3, 4, {16, 16}, 8, ExploreConfig{}, init);
  const Vec s = {0.5, -0.5, 0.25};
  Rng r1(77), r2(77);
  const auto [a1, a0] = actor.sample_latent(s, r1);
  const auto [b1, b0] = actor.sample_latent(s, r2);
  CHECK(a1 == b1);
  CHECK(a0 == b0);
  const auto [c1, c0] = actor.sample_latent(s, r1);
  CHECK(c1 != a1);
}

TEST_CASE("draw_cfm_samples: shapes, tau range, m >= 1 enforced") {
  Rng init(14);
  FlowActor actor(2, 3, {8}, 4, ExploreConfig{}, init);
  Rng rng(5);
  const auto draws = actor.draw_cfm_samples(16, rng);
  REQUIRE(draws.size() == 16);
  for (const auto& dr : draws) {
    CHECK(dr.x0.size() == 3);
    CHECK(dr.tau >= kCfmTauLo);
    CHECK(dr.tau <= kCfmTauHi);
  }
  CHECK_THROWS_AS((void)actor.draw_cfm_samples(0, rng), std::invalid_argument);
}

TEST_CASE("cfm_loss: zero field gives mean |x1 - x0|^2") {
  const int d = 1, D = 2;
  Mlp net({d + D + 1, D}, Activation::kIdentity);
  FlowActor actor(d, D, std::move(net), 4, ExploreConfig{});
  std::vector<CfmSample> draws(2);
  draws[0] = {{1.0, 0.0}, 0.5};
  draws[1] = {{0.0, 2.0}, 0.25};
  const Vec x1 = {3.0, 4.0};
  // |x1 - x0|^2: draw 0: 4 + 16 = 20; draw 1: 9 + 4 = 13.
  const double loss = actor.cfm_loss(std::vector<double>{0.0}, x1, draws);
  CHECK(loss == doctest::Approx((20.0 + 13.0) / 2.0));
}

TEST_CASE("cfm_loss: non-negative and frozen draws re-evaluate bit-identically") {
  Rng init(91);
  FlowActor actor(3, 4, {16}, 8, ExploreConfig{}, init);
  Rng rng(6);
  const Vec s = {0.1, -0.2, 0.3};
  for (int i = 0; i < 20; ++i) {
    Vec x1(4);
    rng.normal_fill(x1);
    const auto draws = actor.draw_cfm_samples(4, rng);
    const double a = actor.cfm_loss(s, x1, draws);
    const double b = actor.cfm_loss(s, x1, draws);
    CHECK(a >= 0.0);
    CHECK(a == b);
  }
}

TEST_CASE("cfm_loss: perfect field gives zero loss") {
  // Target x1 = 0: straight-line target velocity is (x1 - x0) = -x0 and
  // x_tau = (1 - tau) x0, so v(x, tau) = -x / (1 - tau) is exact. Checked
  // at a single fixed tau where a linear net can realize it.
  const int d = 1, D = 2;
  Mlp net({d + D + 1, D}, Activation::kIdentity);
  const int in = d + D + 1;
  const double tau = 0.5;
  for (int i = 0; i < D; ++i)
    net.params()[static_cast<std::size_t>(i * in + d + i)] = -1.0 / (1.0 - tau);
  FlowActor actor(d, D, std::move(net), 4, ExploreConfig{});
  std::vector<CfmSample> draws(1);
  draws[0] = {{0.7, -1.3}, tau};
  const double loss =
      actor.cfm_loss(std::vector<double>{0.0}, Vec{0.0, 0.0}, draws);
  CHECK(loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cfm_loss_grad: matches finite differences and scales with weight") {
  Rng init(55);
  FlowActor actor(2, 3, {10}, 4, ExploreConfig{}, init);
  Rng rng(7);
  const Vec s = {0.3, -0.6};
  Vec x1(3);
  rng.normal_fill(x1);
  const auto draws = actor.draw_cfm_samples(3, rng);

  Vec analytic(actor.net().param_count(), 0.0);
  const double loss = actor.cfm_loss_grad(s, x1, draws, 1.0, analytic);
  CHECK(loss == doctest::Approx(actor.cfm_loss(s, x1, draws)));

  auto loss_fn = [&](const Vec& p) {
    FlowActor probe = actor;
    probe.net().params() = p;
    return probe.cfm_loss(s, x1, draws);
  };
  CHECK(grad_check(loss_fn, analytic, actor.net().params(), 1e-6) < 1e-6);

  Vec scaled(actor.net().param_count(), 0.0);
  actor.cfm_loss_grad(s, x1, draws, -2.5, scaled);
  for (std::size_t i = 0; i < analytic.size(); ++i)
    CHECK(scaled[i] == doctest::Approx(-2.5 * analytic[i]).epsilon(1e-12));
}

TEST_CASE("actor_grad_from_ratio: weighted sum over items") {
  Rng init(66);
  FlowActor actor(2, 2, {8}, 4, ExploreConfig{}, init);
  Rng rng(3);
  std::vector<Vec> states = {{0.1, 0.2}, {-0.4, 0.5}};
  std::vector<Vec> latents(2, Vec(2));
  std::vector<std::vector<CfmSample>> draws;
  for (auto& x : latents) rng.normal_fill(x);
  draws.push_back(actor.draw_cfm_samples(2, rng));
  draws.push_back(actor.draw_cfm_samples(2, rng));
  const double w0 = 0.8, w1 = -1.7;

  std::vector<CfmBatchItem> items(2);
  items[0] = {states[0], latents[0], draws[0], w0};
  items[1] = {states[1], latents[1], draws[1], w1};
  const Vec got = actor_grad_from_ratio(actor, items);

  Vec expect(actor.net().param_count(), 0.0);
  actor.cfm_loss_grad(states[0], latents[0], draws[0], w0, expect);
  actor.cfm_loss_grad(states[1], latents[1], draws[1], w1, expect);
  REQUIRE(got.size() == expect.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("constructor validation") {
  Rng init(1);
  CHECK_THROWS_AS(FlowActor(0, 2, {8}, 4, ExploreConfig{}, init),
                  std::invalid_argument);
  CHECK_THROWS_AS(FlowActor(2, 2, {8}, 0, ExploreConfig{}, init),
                  std::invalid_argument);
  // Wrong net shape for the wrap-an-existing-net constructor.
  Mlp bad({3, 2}, Activation::kTanh);
  CHECK_THROWS_AS(FlowActor(2, 2, std::move(bad), 4, ExploreConfig{}),
                  std::invalid_argument);
}
