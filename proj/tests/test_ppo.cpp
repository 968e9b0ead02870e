#include <doctest.h>

#include <numeric>

#include "crop/ppo.hpp"
#include "support/oracles.hpp"

using namespace crop;

namespace {

struct Loop {
    double actor = 0.0;
    double critic = 0.0;
};

// Losses computed sample by sample from the loop forward pass.
Loop loop_losses(const PolicyNetwork& net, const PpoBatch& b, double clip, double ent)
{
    Loop out;
    const auto n = static_cast<double>(b.size());
    for (Eigen::Index s = 0; s < b.size(); ++s) {
        std::vector<double> x(static_cast<std::size_t>(b.obs.rows()));
        for (Eigen::Index d = 0; d < b.obs.rows(); ++d) {
            x[static_cast<std::size_t>(d)] = b.obs(d, s);
        }
        const auto z = oracle::mlp_forward(net.actor(), x);
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) {
            sum += std::exp(v - zmax);
        }
        const double lse = zmax + std::log(sum);
        double h = 0.0;
        for (double v : z) {
            h -= std::exp(v - lse) * (v - lse);
        }
        const double lp = z[static_cast<std::size_t>(b.actions[static_cast<std::size_t>(s)])] - lse;
        const double r = std::exp(lp - b.old_log_probs(s));
        const double a = b.advantages(s);
        out.actor += -std::min(r * a, std::clamp(r, 1 - clip, 1 + clip) * a) / n - ent * h / n;
        const double v = oracle::mlp_forward(net.critic(), x)[0];
        out.critic += 0.5 * (v - b.returns(s)) * (v - b.returns(s)) / n;
    }
    return out;
}

PpoBatch random_batch(const PolicyNetwork& net, Rng& rng, int n, double log_ratio_spread)
{
    PpoBatch b;
    const auto dims = static_cast<Eigen::Index>(net.input_dim());
    b.obs.resize(dims, n);
    b.old_log_probs.resize(n);
    b.advantages.resize(n);
    b.returns.resize(n);
    for (int s = 0; s < n; ++s) {
        std::vector<double> x(static_cast<std::size_t>(dims));
        for (Eigen::Index d = 0; d < dims; ++d) {
            x[static_cast<std::size_t>(d)] = b.obs(d, s) = oracle::uniform(rng, -1, 1);
        }
        const int a = std::uniform_int_distribution<int>(0, static_cast<int>(net.num_actions()) - 1)(rng);
        b.actions.push_back(a);
        const double lp = log_softmax(net.logits(x))(a);
        b.old_log_probs(s) = lp + oracle::uniform(rng, -log_ratio_spread, log_ratio_spread);
        b.advantages(s) = oracle::uniform(rng, -2, 2);
        b.returns(s) = oracle::uniform(rng, -1, 1);
    }
    return b;
}

std::vector<Eigen::Index> all_of(const PpoBatch& b)
{
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(b.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    return idx;
}

}  // namespace

TEST_CASE("gae examples")
{
    // Single terminal step: A = r - V.
    const std::vector<GaeStep> one{{1.0, 0.25, true, true, 0.0}};
    const auto g = compute_gae(one, 99.0, 0.99, 0.95);
    CHECK(g.advantages[0] == doctest::Approx(0.75));
    CHECK(g.returns[0] == doctest::Approx(1.0));

    // Time-limit end bootstraps from the stored next value.
    const std::vector<GaeStep> cut{{1.0, 0.25, true, false, 2.0}};
    CHECK(compute_gae(cut, 99.0, 0.5, 0.95).advantages[0] == doctest::Approx(1.0 + 0.5 * 2.0 - 0.25));

    // lambda = 0 gives one-step TD errors; lambda = 1 gives discounted returns minus V.
    const std::vector<GaeStep> two{{1.0, 0.0, false, false, 0.0}, {2.0, 0.0, false, false, 0.0}};
    const auto td = compute_gae(two, 4.0, 0.5, 0.0);
    CHECK(td.advantages[0] == doctest::Approx(1.0));
    CHECK(td.advantages[1] == doctest::Approx(2.0 + 0.5 * 4.0));
    const auto mc = compute_gae(two, 4.0, 0.5, 1.0);
    CHECK(mc.advantages[0] == doctest::Approx(1.0 + 0.5 * 2.0 + 0.25 * 4.0));

    CHECK_THROWS(compute_gae(std::vector<GaeStep>{}, 0.0, 0.99, 0.95));
}

TEST_CASE("gae matches direct summation")
{
    Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 80)(rng);
        std::vector<GaeStep> steps;
        for (int t = 0; t < n; ++t) {
            GaeStep s;
            s.reward = oracle::uniform(rng, -1, 1);
            s.value = oracle::uniform(rng, -2, 2);
            s.done = oracle::uniform(rng, 0, 1) < 0.1;
            s.terminal = s.done && oracle::uniform(rng, 0, 1) < 0.5;
            s.bootstrap_value = s.done && !s.terminal ? oracle::uniform(rng, -2, 2) : 0.0;
            steps.push_back(s);
        }
        const double last = oracle::uniform(rng, -2, 2);
        const double gamma = oracle::uniform(rng, 0.8, 1.0);
        const double lambda = oracle::uniform(rng, 0.0, 1.0);
        const auto got = compute_gae(steps, last, gamma, lambda);
        const auto want = oracle::gae_direct(steps, last, gamma, lambda);
        for (int t = 0; t < n; ++t) {
            const auto i = static_cast<std::size_t>(t);
            REQUIRE(std::abs(got.advantages[i] - want[i]) <= 1e-10);
            REQUIRE(std::abs(got.returns[i] - (want[i] + steps[i].value)) <= 1e-10);
        }
    }
}

TEST_CASE("normalize advantages")
{
    std::vector<double> a{1.0, 2.0, 3.0, 4.0};
    normalize_advantages(a);
    double mean = std::accumulate(a.begin(), a.end(), 0.0) / 4.0;
    double var = 0.0;
    for (double v : a) {
        var += (v - mean) * (v - mean) / 4.0;
    }
    CHECK(mean == doctest::Approx(0.0).scale(1.0));
    CHECK(var == doctest::Approx(1.0));

    std::vector<double> flat(5, 3.0);
    normalize_advantages(flat);
    for (double v : flat) {
        CHECK(v == 0.0);
    }
    std::vector<double> empty;
    normalize_advantages(empty);
    CHECK(empty.empty());
}

TEST_CASE("losses match the loop computation")
{
    Rng rng(42);
    for (int k = 0; k < 10; ++k) {
        const PolicyNetwork net = oracle::random_policy({5, 7, 6}, rng, 0.8);
        const PpoBatch b = random_batch(net, rng, 16, 0.5);
        const auto idx = all_of(b);
        const Loop want = loop_losses(net, b, 0.2, 0.01);
        CHECK(actor_loss(net.actor(), b, idx, 0.2, 0.01).loss == doctest::Approx(want.actor).epsilon(1e-12));
        CHECK(critic_loss(net.critic(), b, idx).loss == doctest::Approx(want.critic).epsilon(1e-12));
    }
}

TEST_CASE("loss gradients match finite differences")
{
    Rng rng(43);
    constexpr double h = 1e-5;
    for (int k = 0; k < 4; ++k) {
        const PolicyNetwork net = oracle::random_policy({5, 7, 6}, rng, 0.8);
        // Ratios near 1 keep every sample well away from the clip kinks.
        const PpoBatch b = random_batch(net, rng, 12, 0.05);
        const auto idx = all_of(b);
        const auto a = actor_loss(net.actor(), b, idx, 0.2, 0.01);
        const auto c = critic_loss(net.critic(), b, idx);

        const Eigen::VectorXd ta = net.actor().flatten();
        for (Eigen::Index i = 0; i < ta.size(); ++i) {
            PolicyNetwork up = net;
            PolicyNetwork dn = net;
            Eigen::VectorXd t = ta;
            t(i) += h;
            up.actor().assign(t);
            t(i) -= 2 * h;
            dn.actor().assign(t);
            const double fd = (loop_losses(up, b, 0.2, 0.01).actor - loop_losses(dn, b, 0.2, 0.01).actor) / (2 * h);
            REQUIRE(std::abs(a.grad(i) - fd) <= 1e-4 * std::max({std::abs(fd), std::abs(a.grad(i)), 1e-5}));
        }
        const Eigen::VectorXd tc = net.critic().flatten();
        for (Eigen::Index i = 0; i < tc.size(); ++i) {
            PolicyNetwork up = net;
            PolicyNetwork dn = net;
            Eigen::VectorXd t = tc;
            t(i) += h;
            up.critic().assign(t);
            t(i) -= 2 * h;
            dn.critic().assign(t);
            const double fd = (loop_losses(up, b, 0.2, 0.01).critic - loop_losses(dn, b, 0.2, 0.01).critic) / (2 * h);
            REQUIRE(std::abs(c.grad(i) - fd) <= 1e-4 * std::max({std::abs(fd), std::abs(c.grad(i)), 1e-5}));
        }
    }
}

TEST_CASE("clipped samples carry no policy gradient")
{
    Rng rng(44);
    const PolicyNetwork net = oracle::random_policy({5, 7, 6}, rng, 0.8);
    PpoBatch b = random_batch(net, rng, 1, 0.0);
    // Ratio e^1 > 1.2 with a positive advantage sits on the flat clipped branch.
    b.old_log_probs(0) -= 1.0;
    b.advantages(0) = 1.0;
    const auto idx = all_of(b);
    const auto l = actor_loss(net.actor(), b, idx, 0.2, 0.0);
    CHECK(l.grad.isZero(0.0));
    CHECK(l.clip_fraction == 1.0);
    CHECK(l.loss == doctest::Approx(-1.2));
}

TEST_CASE("adam")
{
    Adam opt(3, 0.1);
    const Eigen::VectorXd p{{1.0, -1.0, 0.0}};
    const Eigen::VectorXd g{{2.0, -0.5, 0.0}};
    const Eigen::VectorXd p1 = opt.step(p, g);
    // First bias-corrected step is lr * g / (|g| + eps).
    CHECK(p1(0) == doctest::Approx(1.0 - 0.1 * 2.0 / (2.0 + 1e-5)));
    CHECK(p1(1) == doctest::Approx(-1.0 + 0.1 * 0.5 / (0.5 + 1e-5)));
    CHECK(p1(2) == 0.0);

    // Minimizes a quadratic.
    Adam q(1, 0.05);
    Eigen::VectorXd x{{3.0}};
    for (int k = 0; k < 2000; ++k) {
        x = q.step(x, 2.0 * (x.array() - 1.0).matrix());
    }
    CHECK(x(0) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("an update raises the probability of an advantaged action")
{
    Rng rng(45);
    int improved = 0;
    for (int k = 0; k < 20; ++k) {
        PolicyNetwork net = oracle::random_policy({5, 7, 6}, rng, 0.5);
        PpoBatch b = random_batch(net, rng, 1, 0.0);
        b.advantages(0) = 1.0;
        std::vector<double> x(5);
        for (int d = 0; d < 5; ++d) {
            x[static_cast<std::size_t>(d)] = b.obs(d, 0);
        }
        const double before = log_softmax(net.logits(x))(b.actions[0]);
        PpoConfig cfg;
        cfg.epochs = 1;
        cfg.minibatch = 1;
        cfg.entropy_coef = 0.0;
        cfg.actor_lr = 1e-3;
        PpoOptimizer opt(net, cfg);
        Rng shuffle(1);
        opt.update(net, b, shuffle);
        improved += log_softmax(net.logits(x))(b.actions[0]) > before ? 1 : 0;
    }
    CHECK(improved == 20);
}

TEST_CASE("update diagnostics and errors")
{
    Rng rng(46);
    PolicyNetwork net = oracle::random_policy({5, 7, 6}, rng, 0.5);
    PpoConfig cfg;
    cfg.minibatch = 8;
    cfg.epochs = 3;
    PpoOptimizer opt(net, cfg);
    const PpoBatch b = random_batch(net, rng, 20, 0.1);
    const auto d = opt.update(net, b, rng);
    CHECK(d.minibatches == 9);
    CHECK(d.entropy > 0.0);
    CHECK(d.entropy <= std::log(6.0) + 1e-12);
    CHECK(net.actor().all_finite());

    PpoBatch bad = b;
    bad.advantages(3) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(opt.update(net, bad, rng), NonFiniteLossError);

    PpoBatch empty;
    empty.obs.resize(5, 0);
    CHECK_THROWS_AS(opt.update(net, empty, rng), std::invalid_argument);

    PpoConfig broken = cfg;
    broken.clip_ratio = 0.0;
    CHECK_THROWS_AS(PpoOptimizer(net, broken), std::invalid_argument);
}
