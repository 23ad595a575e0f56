#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "aoi/delay_model.hpp"
#include "aoi/numerics.hpp"
#include "aoi/rng.hpp"

namespace aoi {

/// Parameters of the online threshold learner. The clipping window
/// [gamma_lb, gamma_ub] and the step-size constant d_lb come from the moment
/// bounds; v weighs the frequency debt; inv_f_max = 0 disables the
/// frequency constraint entirely (the debt then stays at zero).
struct SamplerConfig {
    double gamma_lb = 0.0;
    double gamma_ub = 0.0;
    double d_lb = 0.0;
    double v = 10.0;
    double inv_f_max = 0.0;
    std::uint64_t seed = 0;
    // The optimal-policy formulas never clamp the wait; this is a
    // validation-only bound whose exceedances are counted, not enforced.
    std::optional<double> wait_cap;
};

void validate(const SamplerConfig& config);

/// Learner state entering cycle k: the current ratio estimate and the
/// accumulated frequency debt (time units). gamma stays inside the clipping
/// window after every update and debt is never negative.
struct SamplerState {
    std::int64_t k = 1;
    double gamma = 0.0;
    double debt = 0.0;
};

/// Diminishing step sizes: 1/(2 d_lb) for the first cycle, then
/// 1/((k+2) d_lb).
double step_size(std::int64_t k, double d_lb);

/// Fresh state: k = 1, gamma uniform on the clipping window, zero debt.
SamplerState init_state(const SamplerConfig& config, Rng& rng);

/// W_k = (gamma_k + U_k / v - D_k)^+. Pure.
double decide_wait(const SamplerState& state, const SamplerConfig& config, double delay);

/// Robbins-Monro step on gamma with the cycle's reward residual, then the
/// debt queue recursion U' = (U + inv_f_max - L)^+.
SamplerState update(SamplerState state, const SamplerConfig& config, double delay, double wait);

// --- policies -------------------------------------------------------------
//
// Every policy maps the observed delay of the current cycle to a wait using
// causal information only: decide() before the wait, observe() after the
// cycle completes.

struct ZeroWaitPolicy {
    double decide(double) { return 0.0; }
    void observe(double, double) {}
};

struct ConstantWaitPolicy {
    double wait = 0.0;
    double decide(double) { return wait; }
    void observe(double, double) {}
};

/// Stationary threshold policy w(d) = (beta - d)^+.
struct ThresholdWaitPolicy {
    double beta = 0.0;
    double decide(double delay) { return std::max(0.0, beta - delay); }
    void observe(double, double) {}
};

/// The online learner wrapped as a policy.
class OnlinePolicy {
public:
    explicit OnlinePolicy(SamplerConfig config);

    double decide(double delay) { return decide_wait(state_, config_, delay); }
    void observe(double delay, double wait);

    const SamplerState& state() const { return state_; }
    const SamplerConfig& config() const { return config_; }
    double initial_gamma() const { return initial_gamma_; }
    std::int64_t wait_cap_exceedances() const { return wait_cap_exceedances_; }

private:
    SamplerConfig config_;
    SamplerState state_;
    double initial_gamma_;
    std::int64_t wait_cap_exceedances_ = 0;
};

/// Certainty-equivalence baseline: periodically re-solves the oracle on the
/// empirical distribution of the delays seen so far and waits to that
/// threshold; acts as zero-wait until the first refit.
class PlugInPolicy {
public:
    PlugInPolicy(int refit_every, std::size_t min_history, double inv_f_max);

    double decide(double delay) { return fitted_ ? std::max(0.0, beta_hat_ - delay) : 0.0; }
    void observe(double delay, double wait);

    bool fitted() const { return fitted_; }
    double beta_hat() const { return beta_hat_; }
    std::size_t history_size() const { return history_.size(); }

private:
    void refit();

    int refit_every_;
    std::size_t min_history_;
    double inv_f_max_;
    std::vector<double> history_;  // kept sorted
    std::size_t merged_ = 0;       // sorted prefix length
    bool fitted_ = false;
    double beta_hat_ = 0.0;
};

using Policy =
    std::variant<ZeroWaitPolicy, ConstantWaitPolicy, ThresholdWaitPolicy, OnlinePolicy, PlugInPolicy>;

inline double policy_decide(Policy& p, double delay) {
    return std::visit([delay](auto& pol) { return pol.decide(delay); }, p);
}

inline void policy_observe(Policy& p, double delay, double wait) {
    std::visit([delay, wait](auto& pol) { pol.observe(delay, wait); }, p);
}

}  // namespace aoi
