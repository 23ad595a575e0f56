#pragma once

#include <json.hpp>

#include "aoi/delay_model.hpp"

namespace aoi {

/// Window known to contain the optimum ratio gamma_star when the moment
/// bounds are valid.
struct GammaBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Known-distribution optimum for the frequency-constrained problem.
/// Invariants (up to the solve tolerance): the root condition
/// e_half_max_sq(beta) = gamma_star * e_max(beta) holds, beta equals
/// gamma_star + nu_star, nu_star * (mean_cycle_length - 1/f_max) = 0, and
/// mean_cycle_length >= 1/f_max.
struct OracleSolution {
    double gamma_star = 0.0;
    double nu_star = 0.0;
    double beta = 0.0;
    double mean_cycle_length = 0.0;  // E[max{beta, D}]
    double aoi_star = 0.0;           // gamma_star + mean delay

    nlohmann::json to_json() const;
};

/// g(gamma) = E[(1/2) max{gamma, D}^2] - gamma * E[max{gamma, D}].
/// Continuous, strictly decreasing, with its unique root at the
/// unconstrained optimum ratio.
double g_bar(const DelayModel& model, double gamma);

/// Bracket for gamma_star from moment bounds: lower = d_lb / 2 and
/// upper = (m_ub/2 + d_ub/f + 1/(2 f^2)) / (d_lb + 1/f); pass
/// f_max = infinity for the unconstrained limit m_ub / (2 d_lb).
GammaBounds gamma_bounds(double d_lb, double d_ub, double m_lb, double m_ub, double f_max);

/// Root of g_bar by bisection inside the bracket computed from the model's
/// exact moments. Bracket width at return <= tol.
double solve_unconstrained(const DelayModel& model, double tol = 1e-10);

/// Same, but with caller-supplied bounds. If the bracket misses the root
/// (loose or wrong moment estimates) it is expanded geometrically up to
/// 2^6 times before failing with the endpoint signs in the message.
double solve_unconstrained(const DelayModel& model, GammaBounds bounds, double tol = 1e-10);

/// Two-phase constrained solve: the unconstrained root if it already meets
/// the mean-cycle-length floor 1/f_max, otherwise the threshold beta with
/// E[max{beta, D}] = 1/f_max (e_max is monotone and 1-Lipschitz, so plain
/// bisection applies).
OracleSolution solve_constrained(const DelayModel& model, double f_max, double tol = 1e-10);

/// Average age of the stationary threshold policy w(d) = (beta - d)^+:
/// e_half_max_sq(beta) / e_max(beta) + mean delay.
double stationary_policy_aoi(const DelayModel& model, double beta);

/// Average age of the constant-wait policy w(d) = wait, from the model
/// moments alone.
double constant_wait_aoi(const DelayModel& model, double wait);

}  // namespace aoi
