#include "crop/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crop {

GaeResult compute_gae(std::span<const GaeStep> steps, double last_value, double gamma, double lambda)
{
    if (steps.empty()) {
        throw std::invalid_argument("compute_gae: empty trajectory");
    }
    const std::size_t n = steps.size();
    GaeResult out;
    out.advantages.assign(n, 0.0);
    out.returns.assign(n, 0.0);
    double running = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const GaeStep& s = steps[t];
        double next_value = 0.0;
        if (!s.terminal) {
            if (s.done) {
                next_value = s.bootstrap_value;
            } else {
                next_value = t + 1 < n ? steps[t + 1].value : last_value;
            }
        }
        const double delta = s.reward + gamma * next_value - s.value;
        running = delta + (s.done ? 0.0 : gamma * lambda * running);
        out.advantages[t] = running;
        out.returns[t] = running + s.value;
    }
    return out;
}

void normalize_advantages(std::vector<double>& adv)
{
    if (adv.empty()) {
        return;
    }
    const double n = static_cast<double>(adv.size());
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
    double var = 0.0;
    for (double a : adv) {
        var += (a - mean) * (a - mean);
    }
    const double sd = std::max(std::sqrt(var / n), 1e-8);
    for (double& a : adv) {
        a = (a - mean) / sd;
    }
}

namespace {

Eigen::MatrixXd gather(const Eigen::MatrixXd& m, std::span<const Eigen::Index> idx)
{
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        out.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
    }
    return out;
}

}  // namespace

LossAndGrad actor_loss(const Mlp& actor, const PpoBatch& batch, std::span<const Eigen::Index> idx,
                       double clip_ratio, double entropy_coef)
{
    const auto b = static_cast<Eigen::Index>(idx.size());
    Mlp::Cache cache;
    const Eigen::MatrixXd logits = actor.forward(gather(batch.obs, idx), cache);
    Eigen::MatrixXd d_logits(logits.rows(), b);

    LossAndGrad out;
    double objective = 0.0;
    double entropy = 0.0;
    int clipped = 0;
    double kl = 0.0;
    const double inv_b = 1.0 / static_cast<double>(b);
    for (Eigen::Index k = 0; k < b; ++k) {
        const Eigen::Index i = idx[static_cast<std::size_t>(k)];
        const int a = batch.actions[static_cast<std::size_t>(i)];
        const Eigen::VectorXd logp = log_softmax(logits.col(k));
        const Eigen::VectorXd p = logp.array().exp();
        const double h = -(p.array() * logp.array()).sum();
        const double ratio = std::exp(logp(a) - batch.old_log_probs(i));
        const double adv = batch.advantages(i);
        const double surr1 = ratio * adv;
        const double surr2 = std::clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio) * adv;
        // The min picks the unclipped branch unless clipping is strictly tighter,
        // which only happens outside [1 - clip, 1 + clip] where its slope is 0.
        const bool unclipped = surr1 <= surr2;
        const double g = unclipped ? ratio * adv : 0.0;
        if (!unclipped) {
            ++clipped;
        }
        objective += std::min(surr1, surr2);
        entropy += h;
        kl += batch.old_log_probs(i) - logp(a);

        Eigen::VectorXd d = g * p;  // -g * (onehot - p)
        d(a) -= g;
        d.array() += entropy_coef * p.array() * (logp.array() + h);
        d_logits.col(k) = d * inv_b;
    }
    out.loss = -objective * inv_b - entropy_coef * entropy * inv_b;
    out.entropy = entropy * inv_b;
    out.clip_fraction = static_cast<double>(clipped) * inv_b;
    out.approx_kl = kl * inv_b;
    out.grad = actor.backward(cache, d_logits);
    return out;
}

LossAndGrad critic_loss(const Mlp& critic, const PpoBatch& batch, std::span<const Eigen::Index> idx)
{
    const auto b = static_cast<Eigen::Index>(idx.size());
    Mlp::Cache cache;
    const Eigen::MatrixXd v = critic.forward(gather(batch.obs, idx), cache);
    Eigen::MatrixXd d(1, b);
    double loss = 0.0;
    for (Eigen::Index k = 0; k < b; ++k) {
        const double err = v(0, k) - batch.returns(idx[static_cast<std::size_t>(k)]);
        loss += 0.5 * err * err;
        d(0, k) = err / static_cast<double>(b);
    }
    LossAndGrad out;
    out.loss = loss / static_cast<double>(b);
    out.grad = critic.backward(cache, d);
    return out;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)))
{
}

Eigen::VectorXd Adam::step(const Eigen::VectorXd& params, const Eigen::VectorXd& grad)
{
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const Eigen::VectorXd m_hat = m_ / c1;
    const Eigen::VectorXd v_hat = v_ / c2;
    return params.array() - lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
}

PpoOptimizer::PpoOptimizer(const PolicyNetwork& net, const PpoConfig& cfg)
    : cfg_(cfg), actor_opt_(net.actor().parameter_count(), cfg.actor_lr),
      critic_opt_(net.critic().parameter_count(), cfg.critic_lr)
{
    if (!(cfg.clip_ratio > 0.0)) {
        throw std::invalid_argument("clip_ratio must be > 0");
    }
    if (cfg.epochs < 1 || cfg.minibatch < 1) {
        throw std::invalid_argument("epochs and minibatch must be >= 1");
    }
}

namespace {

void clip_norm(Eigen::VectorXd& g, double max_norm)
{
    if (max_norm <= 0.0) {
        return;
    }
    const double n = g.norm();
    if (n > max_norm) {
        g *= max_norm / n;
    }
}

}  // namespace

PpoDiagnostics PpoOptimizer::update(PolicyNetwork& net, const PpoBatch& batch, Rng& rng)
{
    const Eigen::Index n = batch.size();
    if (n == 0) {
        throw std::invalid_argument("ppo_update: empty batch");
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    PpoDiagnostics diag;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (Eigen::Index start = 0; start < n; start += cfg_.minibatch) {
            const Eigen::Index len = std::min<Eigen::Index>(cfg_.minibatch, n - start);
            const std::span<const Eigen::Index> idx(order.data() + start, static_cast<std::size_t>(len));

            LossAndGrad a = actor_loss(net.actor(), batch, idx, cfg_.clip_ratio, cfg_.entropy_coef);
            LossAndGrad c = critic_loss(net.critic(), batch, idx);
            if (!std::isfinite(a.loss) || !std::isfinite(c.loss) || !a.grad.allFinite() || !c.grad.allFinite()) {
                throw NonFiniteLossError("non-finite PPO loss (actor " + std::to_string(a.loss) + ", critic " +
                                         std::to_string(c.loss) + ") at epoch " + std::to_string(epoch));
            }
            clip_norm(a.grad, cfg_.max_grad_norm);
            clip_norm(c.grad, cfg_.max_grad_norm);
            net.actor().assign(actor_opt_.step(net.actor().flatten(), a.grad));
            net.critic().assign(critic_opt_.step(net.critic().flatten(), c.grad));

            diag.actor_loss += a.loss;
            diag.critic_loss += c.loss;
            diag.entropy += a.entropy;
            diag.approx_kl += a.approx_kl;
            diag.clip_fraction += a.clip_fraction;
            ++diag.minibatches;
        }
    }
    const double k = static_cast<double>(diag.minibatches);
    diag.actor_loss /= k;
    diag.critic_loss /= k;
    diag.entropy /= k;
    diag.approx_kl /= k;
    diag.clip_fraction /= k;
    return diag;
}

}  // namespace crop
