#include "aoi/oracle.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "aoi/numerics.hpp"

namespace aoi {

nlohmann::json OracleSolution::to_json() const {
    return {{"gamma_star", gamma_star},
            {"nu_star", nu_star},
            {"beta", beta},
            {"mean_cycle_length", mean_cycle_length},
            {"aoi_star", aoi_star}};
}

double g_bar(const DelayModel& model, double gamma) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("g_bar: gamma must be >= 0");
    auto ti = model.threshold_integrals(gamma);
    return ti.e_half_max_sq - gamma * ti.e_max;
}

GammaBounds gamma_bounds(double d_lb, double d_ub, double m_lb, double m_ub, double f_max) {
    if (!(d_lb > 0.0) || !(d_ub >= d_lb)) {
        throw std::invalid_argument("gamma_bounds: require 0 < d_lb <= d_ub");
    }
    if (!(m_lb > 0.0) || !(m_ub >= m_lb)) {
        throw std::invalid_argument("gamma_bounds: require 0 < m_lb <= m_ub");
    }
    if (!(f_max > 0.0)) throw std::invalid_argument("gamma_bounds: f_max must be > 0");
    double inv_f = std::isinf(f_max) ? 0.0 : 1.0 / f_max;
    double lower = 0.5 * d_lb;
    double upper = (0.5 * m_ub + d_ub * inv_f + 0.5 * inv_f * inv_f) / (d_lb + inv_f);
    if (upper < lower) {
        throw std::invalid_argument("gamma_bounds: inconsistent moment bounds (upper < lower)");
    }
    return {lower, upper};
}

double solve_unconstrained(const DelayModel& model, double tol) {
    auto mom = model.moments();
    return solve_unconstrained(
        model, gamma_bounds(mom.mean, mom.mean, mom.second_moment, mom.second_moment, kInf), tol);
}

double solve_unconstrained(const DelayModel& model, GammaBounds bounds, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("solve_unconstrained: tol must be > 0");
    double lo = bounds.lower;
    double hi = bounds.upper;
    double glo = g_bar(model, lo);
    double ghi = g_bar(model, hi);
    // g_bar is decreasing: a valid bracket has g(lo) >= 0 >= g(hi). Loose
    // user bounds get up to six geometric expansions on each side.
    for (int i = 0; i < 6 && glo < 0.0; ++i) {
        lo *= 0.5;
        glo = g_bar(model, lo);
    }
    for (int i = 0; i < 6 && ghi > 0.0; ++i) {
        hi *= 2.0;
        ghi = g_bar(model, hi);
    }
    if (glo < 0.0 || ghi > 0.0) {
        std::ostringstream msg;
        msg << "solve_unconstrained: bracket does not straddle the root even after expansion: "
            << "g(" << lo << ")=" << glo << ", g(" << hi << ")=" << ghi;
        throw std::runtime_error(msg.str());
    }
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
        double mid = 0.5 * (lo + hi);
        double gmid = g_bar(model, mid);
        if (gmid > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

OracleSolution solve_constrained(const DelayModel& model, double f_max, double tol) {
    if (!(f_max > 0.0)) throw std::invalid_argument("solve_constrained: f_max must be > 0");
    auto mom = model.moments();
    double gamma_u = solve_unconstrained(model, tol);

    auto unconstrained_solution = [&] {
        OracleSolution s;
        s.gamma_star = gamma_u;
        s.nu_star = 0.0;
        s.beta = gamma_u;
        s.mean_cycle_length = model.threshold_integrals(gamma_u).e_max;
        s.aoi_star = gamma_u + mom.mean;
        return s;
    };
    if (std::isinf(f_max)) return unconstrained_solution();

    double target = 1.0 / f_max;
    if (model.threshold_integrals(gamma_u).e_max >= target) return unconstrained_solution();

    // Constraint binds: find beta with E[max{beta, D}] = 1/f_max. Since
    // e_max(beta) >= beta, the cap below always reaches the target.
    auto bounds =
        gamma_bounds(mom.mean, mom.mean, mom.second_moment, mom.second_moment, f_max);
    double cap = std::isfinite(mom.upper_support)
                     ? bounds.upper + target + mom.upper_support
                     : model.upper_quantile(1.0 - 1e-12) + target;
    if (model.threshold_integrals(cap).e_max < target) {
        throw std::runtime_error("solve_constrained: frequency constraint unattainable within wait cap");
    }
    double beta = bisect(
        [&](double b) { return model.threshold_integrals(b).e_max - target; }, gamma_u, cap, tol);

    auto ti = model.threshold_integrals(beta);
    OracleSolution s;
    s.gamma_star = ti.e_half_max_sq / ti.e_max;
    s.nu_star = std::max(0.0, beta - s.gamma_star);
    s.beta = s.gamma_star + s.nu_star;
    s.mean_cycle_length = ti.e_max;
    s.aoi_star = s.gamma_star + mom.mean;
    return s;
}

double stationary_policy_aoi(const DelayModel& model, double beta) {
    if (!(beta >= 0.0)) throw std::invalid_argument("stationary_policy_aoi: beta must be >= 0");
    auto ti = model.threshold_integrals(beta);
    return ti.e_half_max_sq / ti.e_max + model.moments().mean;
}

double constant_wait_aoi(const DelayModel& model, double wait) {
    if (!(wait >= 0.0)) throw std::invalid_argument("constant_wait_aoi: wait must be >= 0");
    auto mom = model.moments();
    double mean_len = mom.mean + wait;
    double mean_reward = 0.5 * (mom.second_moment + 2.0 * wait * mom.mean + wait * wait);
    return mean_reward / mean_len + mom.mean;
}

}  // namespace aoi
