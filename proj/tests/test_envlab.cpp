#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "envlab.hpp"
#include "rng.hpp"

using namespace fpo;

TEST_CASE("pointreach: double-integrator closed form before any cap") {
  PointReachEnv env(4, 120, 0.15, RewardMode::kSparse);
  env.reset_pinned({0.0, 0.0, 0.0, 0.0, 1.4, 1.4});
  const Vec a = {0.5, -0.25};
  const double dt = PointReachEnv::kDt;
  for (int k = 1; k <= 5; ++k) {
    env.step(a);
    const double factor = dt * dt * k * (k + 1) / 2.0;
    CHECK(env.state()[0] == doctest::Approx(0.5 * factor).epsilon(1e-12));
    CHECK(env.state()[1] == doctest::Approx(-0.25 * factor).epsilon(1e-12));
    CHECK(env.state()[2] == doctest::Approx(0.5 * dt * k).epsilon(1e-12));
    CHECK(env.state()[3] == doctest::Approx(-0.25 * dt * k).epsilon(1e-12));
  }
}

TEST_CASE("pointreach: velocity cap binds") {
  PointReachEnv env(4, 100, 0.15, RewardMode::kSparse);
  env.reset_pinned({0.0, 0.0, 1.95, 0.0, -1.4, -1.4});
  env.step(Vec{1.0, 0.0});
  CHECK(env.state()[2] == doctest::Approx(PointReachEnv::kVelCap));
  env.step(Vec{1.0, 0.0});
  CHECK(env.state()[2] == doctest::Approx(PointReachEnv::kVelCap));
}

TEST_CASE("pointreach: position clamp zeroes the axis velocity") {
  PointReachEnv env(4, 100, 0.15, RewardMode::kSparse);
  env.reset_pinned({1.36, 0.0, 1.9, 0.0, -1.4, -1.4});
  env.step(Vec{1.0, 0.0});
  CHECK(env.state()[0] == doctest::Approx(PointReachEnv::kPosClamp));
  CHECK(env.state()[2] == 0.0);
}

TEST_CASE("pointreach: actions are clipped componentwise") {
  PointReachEnv a_env(4, 120, 0.15, RewardMode::kSparse);
  PointReachEnv b_env(4, 120, 0.15, RewardMode::kSparse);
  const Vec start = {0.2, -0.3, 0.0, 0.0, 1.0, 1.0};
  a_env.reset_pinned(start);
  b_env.reset_pinned(start);
  a_env.step(Vec{5.0, -7.0});
  b_env.step(Vec{1.0, -1.0});
  CHECK(a_env.state() == b_env.state());
}

TEST_CASE("pointreach: sparse reward is 0/1 and success implies done") {
  PointReachEnv env(4, 120, 0.15, RewardMode::kSparse);
  env.reset_pinned({0.1, 0.0, 0.0, 0.0, -1.2, 0.9});
  Rng rng(4);
  while (!env.episode_over()) {
    const Vec a = env.expert_action(env.state());
    const StepResult res = env.step(a);
    CHECK((res.r == 0.0 || res.r == 1.0));
    if (res.done) {
      CHECK(res.r == 1.0);
      CHECK(env.at_goal(res.s_next));
    } else {
      CHECK(res.r == 0.0);
    }
  }
  CHECK(env.at_goal(env.state()));
}

TEST_CASE("pointreach: expert reaches the goal from random resets") {
  PointReachEnv env(4, 120, 0.15, RewardMode::kSparse);
  Rng rng(7);
  for (int ep = 0; ep < 25; ++ep) {
    env.reset(rng);
    while (!env.episode_over()) env.step(env.expert_action(env.state()));
    CHECK(env.at_goal(env.state()));
    CHECK(env.tick() <= env.max_ticks());
  }
}

TEST_CASE("pointreach: horizon truncates without success") {
  PointReachEnv env(4, 6, 0.15, RewardMode::kSparse);
  env.reset_pinned({-1.4, -1.4, 0.0, 0.0, 1.4, 1.4});
  StepResult last;
  while (!env.episode_over()) last = env.step(Vec{0.0, 0.0});
  CHECK(env.tick() == 6);
  CHECK(last.truncated);
  CHECK_FALSE(last.done);
  CHECK(last.r == 0.0);
  CHECK_THROWS_AS(env.step(Vec{0.0, 0.0}), std::runtime_error);
}

TEST_CASE("pointreach: shaped reward pays progress plus success bonus") {
  PointReachEnv env(4, 120, 0.15, RewardMode::kShaped);
  env.reset_pinned({0.0, 0.0, 1.0, 0.0, 1.0, 0.0});
  const double d0 = std::hypot(1.0, 0.0);
  const StepResult res = env.step(Vec{0.0, 0.0});
  const double d1 = std::hypot(1.0 - env.state()[0], 0.0);
  CHECK(res.r == doctest::Approx((d0 - d1) + (res.done ? 1.0 : 0.0)));
}

TEST_CASE("pointreach: reset keeps the goal away from the start") {
  PointReachEnv env(4, 120, 0.15, RewardMode::kSparse);
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const Vec s = env.reset(rng);
    CHECK(std::hypot(s[0] - s[4], s[1] - s[5]) > 2.0 * env.goal_tol());
    CHECK(s[2] == 0.0);
    CHECK(s[3] == 0.0);
  }
}

TEST_CASE("env: dimension and lifecycle errors") {
  PointReachEnv env(4, 120, 0.15, RewardMode::kSparse);
  CHECK_THROWS_AS(env.step(Vec{0.0, 0.0}), std::runtime_error);
  env.reset_pinned({0.0, 0.0, 0.0, 0.0, 1.0, 1.0});
  CHECK_THROWS_AS(env.step(Vec{0.0}), std::invalid_argument);
  CHECK_THROWS_AS(env.reset_pinned({0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(PointReachEnv(0, 120, 0.15, RewardMode::kSparse),
                  std::invalid_argument);
  CHECK_THROWS_AS(PointReachEnv(4, 120, 0.0, RewardMode::kSparse),
                  std::invalid_argument);
}

TEST_CASE("pushblock: overlap projects the block to contact separation") {
  PushBlockEnv env(4, 120, 0.15, RewardMode::kSparse);
  // Agent one tick of drift away from the block, moving right.
  env.reset_pinned({0.0, 0.0, 2.0, 0.0, 0.3, 0.0, 1.2, 0.0});
  env.step(Vec{0.0, 0.0});
  const double d = std::hypot(env.state()[4] - env.state()[0],
                              env.state()[5] - env.state()[1]);
  CHECK(d == doctest::Approx(PushBlockEnv::kContactRadius));
  // Block was pushed along +x.
  CHECK(env.state()[4] > 0.3);
  CHECK(env.state()[5] == doctest::Approx(0.0));
}

TEST_CASE("pushblock: block stays put without contact") {
  PushBlockEnv env(4, 120, 0.15, RewardMode::kSparse);
  env.reset_pinned({-1.0, -1.0, 0.0, 0.0, 0.5, 0.5, 0.9, 0.9});
  env.step(Vec{0.1, 0.1});
  CHECK(env.state()[4] == 0.5);
  CHECK(env.state()[5] == 0.5);
}

TEST_CASE("pushblock: success is measured on the block, not the agent") {
  PushBlockEnv env(4, 120, 0.15, RewardMode::kSparse);
  Vec s = {0.9, 0.0, 0.0, 0.0, 0.5, 0.0, 0.45, 0.0};
  CHECK(env.at_goal(s));
  s[4] = -0.5;
  CHECK_FALSE(env.at_goal(s));
}

TEST_CASE("pushblock: expert pushes the block to the goal") {
  PushBlockEnv env(4, 240, 0.15, RewardMode::kSparse);
  Rng rng(13);
  int wins = 0;
  const int eps = 20;
  for (int ep = 0; ep < eps; ++ep) {
    env.reset(rng);
    while (!env.episode_over()) env.step(env.expert_action(env.state()));
    if (env.at_goal(env.state())) ++wins;
  }
  CHECK(wins >= eps - 2);
}

TEST_CASE("make_env and name round trip") {
  CHECK(parse_env_kind("pointreach") == EnvKind::kPointReach);
  CHECK(parse_env_kind("pushblock") == EnvKind::kPushBlock);
  CHECK_THROWS_AS(parse_env_kind("nope"), std::invalid_argument);
  CHECK(env_kind_name(EnvKind::kPushBlock) == "pushblock");
  auto env = make_env(EnvKind::kPushBlock, 4, 100, 0.2, RewardMode::kShaped);
  CHECK(env->kind() == EnvKind::kPushBlock);
  CHECK(env->state_dim() == 8);
  CHECK(env->latent_dim() == 8);
}

TEST_CASE("decoder: identity reshapes and clips") {
  BaseDecoder dec = BaseDecoder::identity(6, 2, 3);
  CHECK(dec.is_identity());
  CHECK(dec.frozen());
  CHECK(dec.latent_dim() == 6);
  const Vec s(6, 0.0);
  const Vec x = {0.5, -2.0, 3.0, 0.0, 1.0, -0.5};
  const Vec a = dec.decode_flat(s, x);
  CHECK(a == Vec{0.5, -1.0, 1.0, 0.0, 1.0, -0.5});
  dec.check_frozen();
}

TEST_CASE("decoder: network mode freeze and drift detection") {
  Rng rng(17);
  Mlp net = Mlp::random({6 + 4, 16, 4}, Activation::kTanh, rng);
  BaseDecoder dec = BaseDecoder::network(std::move(net), 6, 2, 2);
  CHECK_FALSE(dec.is_identity());
  CHECK_FALSE(dec.frozen());
  dec.net_mutable().params()[0] = 0.25;
  dec.freeze();
  CHECK(dec.frozen());
  dec.check_frozen();
  CHECK_THROWS_AS(dec.net_mutable(), std::runtime_error);
  // Forced drift must be caught.
  const_cast<Mlp&>(dec.net()).params()[0] += 1.0;
  CHECK_THROWS_AS(dec.check_frozen(), std::runtime_error);
}

TEST_CASE("decoder: shape validation") {
  Rng rng(19);
  Mlp bad = Mlp::random({5, 4}, Activation::kTanh, rng);
  CHECK_THROWS_AS(BaseDecoder::network(std::move(bad), 6, 2, 2),
                  std::invalid_argument);
  BaseDecoder dec = BaseDecoder::identity(6, 2, 2);
  CHECK_THROWS_AS(dec.decode_flat(Vec(5, 0.0), Vec(4, 0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(dec.decode_flat(Vec(6, 0.0), Vec(3, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("lift_chunk flattens in step order") {
  const std::vector<Vec> chunk = {{1.0, 2.0}, {3.0, 4.0}};
  CHECK(lift_chunk(chunk) == Vec{1.0, 2.0, 3.0, 4.0});
}

TEST_CASE("scripted_demo: expert quality reaches the goal, chunks aligned") {
  PointReachEnv env(4, 120, 0.15, RewardMode::kSparse);
  Rng rng(23);
  const DemoEpisode ep = scripted_demo(env, DemoQuality::kExpert, rng, 0.0, 0.0);
  CHECK(ep.success);
  CHECK(!ep.steps.empty());
  for (const auto& st : ep.steps) {
    CHECK(st.s.size() == 6);
    CHECK(st.chunk.size() == 8);
    for (double v : st.chunk) {
      CHECK(v <= 1.0);
      CHECK(v >= -1.0);
    }
  }
}

TEST_CASE("scripted_demo: partial trailing chunks are dropped") {
  // Bias of pi reverses the controller, so the goal is never reached and the
  // horizon (not a multiple of the chunk length) cuts the last chunk short:
  // 10 ticks = 2 recorded chunks + 2 dropped ticks.
  PointReachEnv env(4, 10, 0.15, RewardMode::kSparse);
  Rng rng(29);
  const DemoEpisode ep =
      scripted_demo(env, DemoQuality::kSuboptimal, rng, 3.14159265, 0.0);
  CHECK_FALSE(ep.success);
  CHECK(ep.ticks == 10);
  CHECK(ep.steps.size() == 2);
}

TEST_CASE("scripted_demo: suboptimal bias degrades success") {
  PointReachEnv env(4, 120, 0.15, RewardMode::kSparse);
  Rng rng(31);
  int expert_wins = 0, biased_wins = 0;
  for (int i = 0; i < 30; ++i) {
    expert_wins +=
        scripted_demo(env, DemoQuality::kExpert, rng, 0.0, 0.0).success;
    biased_wins +=
        scripted_demo(env, DemoQuality::kSuboptimal, rng, 1.2, 0.3).success;
  }
  CHECK(expert_wins == 30);
  CHECK(biased_wins < expert_wins);
}

TEST_CASE("scripted_demo: deterministic given the rng state") {
  PointReachEnv env(4, 120, 0.15, RewardMode::kSparse);
  Rng r1(37), r2(37);
  const DemoEpisode a =
      scripted_demo(env, DemoQuality::kSuboptimal, r1, 0.8, 0.2);
  const DemoEpisode b =
      scripted_demo(env, DemoQuality::kSuboptimal, r2, 0.8, 0.2);
  REQUIRE(a.steps.size() == b.steps.size());
  CHECK(a.success == b.success);
  CHECK(a.ticks == b.ticks);
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].s == b.steps[i].s);
    CHECK(a.steps[i].chunk == b.steps[i].chunk);
  }
}
