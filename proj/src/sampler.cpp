#include "aoi/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aoi/oracle.hpp"

namespace aoi {

void validate(const SamplerConfig& config) {
    if (!(config.gamma_lb <= config.gamma_ub)) {
        throw std::invalid_argument("sampler config: gamma_lb must be <= gamma_ub");
    }
    if (!(config.d_lb > 0.0)) throw std::invalid_argument("sampler config: d_lb must be > 0");
    if (!(config.v > 0.0)) throw std::invalid_argument("sampler config: v must be > 0");
    if (!(config.inv_f_max >= 0.0)) {
        throw std::invalid_argument("sampler config: inv_f_max must be >= 0");
    }
}

double step_size(std::int64_t k, double d_lb) {
    if (k < 1) throw std::invalid_argument("step_size: k must be >= 1");
    if (!(d_lb > 0.0)) throw std::invalid_argument("step_size: d_lb must be > 0");
    if (k == 1) return 1.0 / (2.0 * d_lb);
    return 1.0 / (static_cast<double>(k + 2) * d_lb);
}

SamplerState init_state(const SamplerConfig& config, Rng& rng) {
    validate(config);
    SamplerState state;
    state.k = 1;
    state.gamma = rng.uniform(config.gamma_lb, config.gamma_ub);
    state.debt = 0.0;
    return state;
}

double decide_wait(const SamplerState& state, const SamplerConfig& config, double delay) {
    if (!(delay >= 0.0)) throw std::invalid_argument("decide_wait: delay must be >= 0");
    return std::max(0.0, state.gamma + state.debt / config.v - delay);
}

SamplerState update(SamplerState state, const SamplerConfig& config, double delay, double wait) {
    double length = delay + wait;
    double reward = 0.5 * length * length;
    double eta = step_size(state.k, config.d_lb);
    double unclipped = state.gamma + eta * (reward - state.gamma * length);
    state.gamma = std::clamp(unclipped, config.gamma_lb, config.gamma_ub);
    state.debt = std::max(0.0, state.debt + config.inv_f_max - length);
    ++state.k;
    return state;
}

OnlinePolicy::OnlinePolicy(SamplerConfig config) : config_(config) {
    Rng rng(config_.seed);
    state_ = init_state(config_, rng);
    initial_gamma_ = state_.gamma;
}

void OnlinePolicy::observe(double delay, double wait) {
    if (config_.wait_cap && wait > *config_.wait_cap) ++wait_cap_exceedances_;
    state_ = update(state_, config_, delay, wait);
}

PlugInPolicy::PlugInPolicy(int refit_every, std::size_t min_history, double inv_f_max)
    : refit_every_(refit_every), min_history_(min_history), inv_f_max_(inv_f_max) {
    if (refit_every < 1) throw std::invalid_argument("plugin: refit_every must be >= 1");
    if (min_history < 1) throw std::invalid_argument("plugin: min_history must be >= 1");
}

void PlugInPolicy::observe(double delay, double) {
    history_.push_back(delay);
    if (history_.size() >= min_history_ &&
        history_.size() % static_cast<std::size_t>(refit_every_) == 0) {
        refit();
    }
}

void PlugInPolicy::refit() {
    std::sort(history_.begin() + static_cast<std::ptrdiff_t>(merged_), history_.end());
    std::inplace_merge(history_.begin(), history_.begin() + static_cast<std::ptrdiff_t>(merged_),
                       history_.end());
    merged_ = history_.size();
    auto model = DelayModel::empirical_presorted(history_);
    if (inv_f_max_ > 0.0) {
        beta_hat_ = solve_constrained(model, 1.0 / inv_f_max_).beta;
    } else {
        beta_hat_ = solve_unconstrained(model);
    }
    fitted_ = true;
}

}  // namespace aoi
