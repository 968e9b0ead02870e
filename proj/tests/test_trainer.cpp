#include <doctest.h>

#include <map>
#include <numbers>
#include <sstream>

#include "crop/trainer.hpp"
#include "support/oracles.hpp"

using namespace crop;

namespace {

TrainConfig short_run(std::uint64_t seed)
{
    TrainConfig cfg;
    cfg.total_steps = 3000;
    cfg.batch_size = 1000;
    cfg.ppo.minibatch = 250;
    cfg.ppo.epochs = 2;
    cfg.cloud_size = 200;
    cfg.seed = seed;
    cfg.hidden = {16, 16};
    return cfg;
}

Transition step_with(double reward, int cost)
{
    Transition t;
    t.reward = reward;
    t.cost = cost;
    return t;
}

}  // namespace

TEST_CASE("algorithm names")
{
    for (auto a : {Algo::ppo_cost, Algo::ppo_violation, Algo::ppo_crop, Algo::lppo}) {
        CHECK(parse_algo(to_string(a)) == a);
    }
    CHECK(to_string(Algo::ppo_crop) == "ppo_crop");
    CHECK_THROWS_AS(parse_algo("sac"), std::invalid_argument);
}

TEST_CASE("shaped reward")
{
    const Transition safe = step_with(0.3, 0);
    const Transition unsafe = step_with(0.3, 1);
    CHECK(shaped_reward(safe, Algo::ppo_cost, 2.0, 0.7) == 0.3);
    CHECK(shaped_reward(unsafe, Algo::ppo_cost, 2.0, 0.7) == doctest::Approx(0.3 - 2.0));
    for (auto a : {Algo::ppo_violation, Algo::ppo_crop}) {
        CHECK(shaped_reward(safe, a, 2.0, 0.7) == 0.3);
        CHECK(shaped_reward(unsafe, a, 2.0, 0.7) == doctest::Approx(0.3 - 1.4));
        CHECK(shaped_reward(unsafe, a, 2.0, 0.0) == 0.3);
    }
    CHECK(shaped_reward(unsafe, Algo::lppo, 2.0, 0.7) == 0.3);
}

TEST_CASE("lagrangian multiplier")
{
    CHECK(lagrangian_update(0.0, 9.0, 5.0, 0.05) == doctest::Approx(0.2));
    CHECK(lagrangian_update(0.1, 1.0, 5.0, 0.05) == 0.0);
    CHECK(lagrangian_update(1.0, 5.0, 5.0, 0.05) == 1.0);
    CHECK_THROWS_AS(lagrangian_update(-0.1, 1.0, 5.0, 0.05), std::invalid_argument);

    CHECK(lagrangian_reward(1.0, 0, 0.0) == 1.0);
    CHECK(lagrangian_reward(1.0, 1, 1.0) == 0.0);
    CHECK(lagrangian_reward(0.5, 0, 1.0) == 0.25);
    CHECK(lagrangian_reward(0.0, 1, 3.0) == doctest::Approx(-0.75));

    // The multiplier stays non-negative along any cost sequence.
    Rng rng(3);
    double lam = 0.0;
    for (int k = 0; k < 1000; ++k) {
        lam = lagrangian_update(lam, oracle::uniform(rng, 0, 10), 5.0, 0.05);
        REQUIRE(lam >= 0.0);
    }
}

TEST_CASE("train config validation")
{
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.total_steps = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.gamma = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.penalty_weight = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("hard-coded property set")
{
    const auto set = hardcoded_property_set();
    const auto names = hardcoded_property_names();
    REQUIRE(set.size() == names.size());
    REQUIRE(set.size() == 7);
    CHECK(names.front() == "front");
    for (const auto& p : set) {
        CHECK(p.domain.size() == kObsDim);
        CHECK(p.origin == PropertyOrigin::hardcoded);
        CHECK(p.forbidden_action >= 0);
        CHECK(p.forbidden_action < kNumActions);
    }

    // Open space falls in none of them.
    std::vector<double> open(kObsDim, 1.0);
    open[kGoalHeadingIndex] = 0.0;
    for (const auto& p : set) {
        CHECK_FALSE(p.domain.contains(open));
    }

    // A large circle hugging the agent in each sector's direction puts the
    // observation inside that sector's property.
    const std::map<std::string, double> direction_deg{
        {"front", 0.0},        {"right", 274.3},        {"left", 85.7},           {"front_right", 317.1},
        {"front_left", 42.9},  {"back_rotate_left", 180.0}, {"back_rotate_right", 180.0}};
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double ang = direction_deg.at(names[i]) * std::numbers::pi / 180.0;
        WorldState w;
        w.agent = {5.0, 5.0, 0.0};
        w.goal = {1.0, 1.0};
        w.obstacles.push_back(Obstacle::circle(5.0 + 1.1 * std::cos(ang), 5.0 + 1.1 * std::sin(ang), 1.0));
        const auto scan = lidar_scan(w, 3.5);
        std::vector<double> obs(scan.begin(), scan.end());
        obs.push_back(0.5);
        obs.push_back(-0.3);
        CAPTURE(names[i]);
        CHECK(set[i].domain.contains(obs));
    }
}

TEST_CASE("metrics csv")
{
    std::ostringstream os;
    write_metrics_header(os);
    EpisodeMetrics m;
    m.step = 500;
    m.episode = 3;
    m.ret = 1.25;
    m.success = 1;
    m.episode_cost = 2;
    m.episode_violation = 0.5;
    m.n_properties = 4;
    m.multiplier = 0.125;
    write_metrics_row(os, m);
    CHECK(os.str() ==
          "step,episode,return,success,episode_cost,episode_violation,n_properties,multiplier\n"
          "500,3,1.25,1,2,0.5,4,0.125\n");
}

TEST_CASE("short training runs are reproducible")
{
    const CropConfig crop_cfg = CropConfig::navigation_defaults();
    for (auto algo : {Algo::ppo_cost, Algo::ppo_crop, Algo::lppo}) {
        const auto a = train(algo, EnvKind::fixed, short_run(4), crop_cfg, EnvConfig{});
        const auto b = train(algo, EnvKind::fixed, short_run(4), crop_cfg, EnvConfig{});
        CAPTURE(to_string(algo));
        CHECK(a.net == b.net);
        REQUIRE(a.episodes.size() == b.episodes.size());
        for (std::size_t i = 0; i < a.episodes.size(); ++i) {
            REQUIRE(a.episodes[i].ret == b.episodes[i].ret);
            REQUIRE(a.episodes[i].episode_cost == b.episodes[i].episode_cost);
            REQUIRE(a.episodes[i].episode_violation == b.episodes[i].episode_violation);
        }
        const auto c = train(algo, EnvKind::fixed, short_run(5), crop_cfg, EnvConfig{});
        CHECK_FALSE(c.net == a.net);
    }
}

TEST_CASE("episode bookkeeping")
{
    const CropConfig crop_cfg = CropConfig::navigation_defaults();
    for (auto algo : {Algo::ppo_cost, Algo::ppo_violation, Algo::ppo_crop, Algo::lppo}) {
        CAPTURE(to_string(algo));
        std::map<std::int64_t, std::size_t> buffer_sizes;
        std::map<std::int64_t, int> merges;
        int updates = 0;
        TrainCallbacks cb;
        cb.on_episode_properties = [&](std::int64_t ep, std::span<const SafetyProperty> ps) {
            buffer_sizes[ep] = ps.size();
            int total = 0;
            for (const auto& p : ps) {
                total += p.merge_count;
            }
            merges[ep] = total;
        };
        cb.on_update = [&](std::int64_t, const PpoDiagnostics&) { ++updates; };
        const auto res = train(algo, EnvKind::fixed, short_run(6), crop_cfg, EnvConfig{}, cb);
        CHECK(updates == 3);
        REQUIRE_FALSE(res.episodes.empty());
        std::int64_t prev_step = 0;
        for (std::size_t i = 0; i < res.episodes.size(); ++i) {
            const auto& e = res.episodes[i];
            REQUIRE(e.episode == static_cast<std::int64_t>(i));
            REQUIRE(e.step > prev_step);
            REQUIRE(e.step - prev_step <= EnvConfig{}.horizon);
            prev_step = e.step;
            REQUIRE(e.episode_violation >= 0.0);
            if (e.episode_cost == 0) {
                REQUIRE(e.episode_violation == 0.0);
            }
            if (algo == Algo::ppo_crop) {
                REQUIRE(e.n_properties == buffer_sizes.at(e.episode));
                // Every unsafe step lands in exactly one property.
                REQUIRE(merges.at(e.episode) == e.episode_cost);
                REQUIRE(e.episode_violation <= e.episode_cost);
            } else if (algo == Algo::ppo_violation) {
                REQUIRE(e.n_properties == 7);
            } else {
                REQUIRE(e.n_properties == 0);
                REQUIRE(e.episode_violation == 0.0);
            }
            if (algo != Algo::lppo) {
                REQUIRE(e.multiplier == 0.0);
            }
        }
        if (algo != Algo::ppo_crop) {
            CHECK(buffer_sizes.empty());
        }
    }
}

TEST_CASE("evaluation")
{
    NavEnv env = make_env(EnvKind::evaluation, 2);
    const PolicyNetwork net = PolicyNetwork::make(NetworkShape{}, 3);
    const auto s = evaluate_policy(net, env, 10, 100, 9);
    CHECK(s.episodes == 10);
    CHECK(s.rollouts.size() == 10);
    CHECK(s.mean_success >= 0.0);
    CHECK(s.mean_success <= 1.0);
    double cost = 0.0;
    for (const auto& r : s.rollouts) {
        cost += r.episode_cost;
    }
    CHECK(s.mean_cost == doctest::Approx(cost / 10.0));

    NavEnv env2 = make_env(EnvKind::evaluation, 2);
    const auto again = evaluate_policy(net, env2, 10, 100, 9);
    CHECK(again.mean_cost == s.mean_cost);
    CHECK(again.mean_violation == s.mean_violation);

    CHECK_THROWS_AS(evaluate_policy(net, env, 0, 100, 9), std::invalid_argument);
}
