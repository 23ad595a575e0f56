#include "aoi/acceptance.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <ostream>
#include <thread>

#include "aoi/simulator.hpp"

namespace aoi {

namespace {

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// Real root of gamma^3 + 3 gamma - 1 = 0: the closed-form optimum ratio of
// the unit uniform delay, used as an implementation-independent reference.
double uniform01_gamma_ref() {
    double s = std::sqrt(1.25);
    return std::cbrt(0.5 + s) + std::cbrt(0.5 - s);
}

void parallel_for(int n, unsigned workers, const std::function<void(int)>& body) {
    unsigned n_threads = workers ? workers : std::thread::hardware_concurrency();
    n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(n)));
    std::atomic<int> next{0};
    auto loop = [&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    };
    if (n_threads == 1) {
        loop();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(loop);
    for (auto& th : pool) th.join();
}

struct Check {
    bool passed = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) passed = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED: ") + what;
    }
};

RunConfig online_uniform_exact(std::int64_t cycles) {
    RunConfig cfg;
    cfg.model = DelayModel::uniform(0.0, 1.0);
    cfg.policy = PolicySpec::parse("online");
    cfg.cycles = cycles;
    cfg.bounds_mode = BoundsMode::exact_moments;
    cfg.record_every = 0;
    return cfg;
}

Check criterion_oracle_cubic() {
    Check c;
    double gamma = solve_unconstrained(DelayModel::uniform(0.0, 1.0), 1e-10);
    double ref = uniform01_gamma_ref();
    c.require(std::abs(gamma - ref) <= 1e-8,
              fmt("|bisection - cubic| = %.3g <= 1e-8 (gamma = %.10f)", std::abs(gamma - ref), gamma));
    return c;
}

Check criterion_zero_wait_gap() {
    Check c;
    auto model = DelayModel::uniform(0.0, 1.0);
    double zw = stationary_policy_aoi(model, 0.0);
    double aoi_star = uniform01_gamma_ref() + 0.5;
    c.require(std::abs(zw - 5.0 / 6.0) <= 1e-12,
              fmt("|zero-wait aoi - 5/6| = %.3g <= 1e-12", std::abs(zw - 5.0 / 6.0)));
    c.require(zw > aoi_star, fmt("zero-wait %.7f exceeds optimum %.7f", zw, aoi_star));
    return c;
}

Check criterion_constrained_oracle() {
    Check c;
    auto model = DelayModel::uniform(0.0, 1.0);
    auto sol = solve_constrained(model, 1.0, 1e-10);
    double slack = std::abs(sol.nu_star * (sol.mean_cycle_length - 1.0));
    c.require(std::abs(sol.beta - 1.0) <= 1e-8, fmt("|beta - 1| = %.3g <= 1e-8", std::abs(sol.beta - 1.0)));
    c.require(std::abs(sol.aoi_star - 1.0) <= 1e-8,
              fmt("|aoi_star - 1| = %.3g <= 1e-8", std::abs(sol.aoi_star - 1.0)));
    c.require(slack <= 1e-9, fmt("complementary slackness residual %.3g <= 1e-9", slack));
    double cw = constant_wait_aoi(model, 1.0 - 0.5);
    c.require(std::abs(cw - 25.0 / 24.0) <= 1e-12,
              fmt("|constant-wait aoi - 25/24| = %.3g <= 1e-12", std::abs(cw - 25.0 / 24.0)));
    c.require(cw >= sol.aoi_star, fmt("constant-wait %.7f >= constrained optimum %.7f", cw, sol.aoi_star));
    return c;
}

Check criterion_mse_envelope(unsigned workers) {
    Check c;
    const int runs = 200;
    const std::vector<std::int64_t> cps{100, 1000, 10000};
    RunConfig cfg = online_uniform_exact(10000);
    cfg.seed = 42;
    double gamma_ref = uniform01_gamma_ref();

    std::vector<std::array<double, 3>> gammas(runs);
    parallel_for(runs, workers, [&](int i) {
        RunConfig rc = cfg;
        rc.seed = derive_seed(cfg.seed, 2 + static_cast<std::uint64_t>(i));
        auto res = run(rc, cps);
        for (std::size_t j = 0; j < cps.size(); ++j) gammas[i][j] = res.checkpoints[j].gamma;
    });

    // Error envelope: L_ub^4 / (d_lb^2 K) with L_ub = B + gamma_ub from the
    // exact-moment window (4/3 for the unit uniform).
    auto mom = cfg.model.moments();
    auto window = gamma_bounds(mom.mean, mom.mean, mom.second_moment, mom.second_moment, kInf);
    double l_ub = mom.upper_support + window.upper;
    double numerator = std::pow(l_ub, 4) / (mom.mean * mom.mean);
    std::array<double, 3> mse{};
    for (std::size_t j = 0; j < cps.size(); ++j) {
        KahanSum s;
        for (int i = 0; i < runs; ++i) {
            double d = gammas[i][j] - gamma_ref;
            s.add(d * d);
        }
        mse[j] = s.value() / runs;
        double bound = numerator / static_cast<double>(cps[j]);
        c.require(mse[j] <= bound,
                  fmt("MSE(K=%lld) = %.3g <= %.3g", static_cast<long long>(cps[j]), mse[j], bound));
    }
    c.require(mse[0] >= 20.0 * mse[2],
              fmt("MSE decay factor %.1f >= 20", mse[0] / std::max(mse[2], 1e-300)));
    return c;
}

Check criterion_as_convergence(unsigned workers) {
    Check c;
    const int runs = 200;
    RunConfig cfg = online_uniform_exact(100000);
    cfg.seed = 43;
    double gamma_ref = uniform01_gamma_ref();
    std::vector<double> gamma_final(runs);
    parallel_for(runs, workers, [&](int i) {
        RunConfig rc = cfg;
        rc.seed = derive_seed(cfg.seed, 2 + static_cast<std::uint64_t>(i));
        gamma_final[i] = run(rc).final_state->gamma;
    });
    int within = 0;
    for (double g : gamma_final) {
        if (std::abs(g - gamma_ref) <= 0.02) ++within;
    }
    c.require(within >= static_cast<int>(0.95 * runs),
              fmt("%d/%d runs with |gamma_K - gamma*| <= 0.02 (need >= %d)", within, runs,
                  static_cast<int>(0.95 * runs)));
    return c;
}

Check criterion_aoi_ratio_convergence(unsigned workers) {
    Check c;
    const int runs = 100;
    const std::int64_t cycles = 100000;
    const std::vector<std::int64_t> cps{cycles};
    struct Case {
        const char* label;
        DelayModel model;
    };
    Case cases[] = {{"uniform(0,1)", DelayModel::uniform(0.0, 1.0)},
                    {"trunc-lognormal(1,1.3)", DelayModel::log_normal_truncated(1.0, 1.3)}};
    for (const auto& cs : cases) {
        double aoi_star = solve_constrained(cs.model, kInf).aoi_star;
        RunConfig cfg;
        cfg.model = cs.model;
        cfg.cycles = cycles;
        // Exact-moment window: with the 10x estimated bounds the uniform
        // initial threshold can start orders of magnitude high, and those few
        // giant cycles stay in the cumulative ratio well past 1%.
        cfg.bounds_mode = BoundsMode::exact_moments;
        cfg.seed = 44;
        cfg.policy = PolicySpec::parse("online");
        double online_mean = ensemble(cfg, runs, cps, workers).metrics["aoi_ratio"].back().mean;
        cfg.policy = PolicySpec::parse("zero_wait");
        double zw_mean = ensemble(cfg, runs, cps, workers).metrics["aoi_ratio"].back().mean;
        double rel = std::abs(online_mean - aoi_star) / aoi_star;
        c.require(rel <= 0.01, fmt("%s: |mean ratio - optimum|/optimum = %.4f <= 0.01 "
                                   "(mean %.5f, optimum %.5f)",
                                   cs.label, rel, online_mean, aoi_star));
        c.require(online_mean < zw_mean,
                  fmt("%s: online %.5f beats zero-wait %.5f", cs.label, online_mean, zw_mean));
    }
    return c;
}

Check criterion_frequency_constraint(unsigned workers) {
    Check c;
    const int runs = 20;
    const std::int64_t cycles = 100000;
    const std::vector<std::int64_t> cps{cycles};
    RunConfig cfg;
    cfg.model = DelayModel::log_normal(1.0, 1.5);
    double mean = cfg.model.moments().mean;
    cfg.inv_f_max = 10.0 * mean;
    cfg.cycles = cycles;
    cfg.bounds_mode = BoundsMode::estimated;
    cfg.warmup_n = 100;
    cfg.seed = 45;

    double deficit_v1 = 0.0, deficit_v10 = 0.0;
    for (double v : {1.0, 10.0}) {
        cfg.policy = PolicySpec::parse(v == 1.0 ? "online:v=1" : "online:v=10");
        double mean_interval = ensemble(cfg, runs, cps, workers).metrics["mean_interval"].back().mean;
        double deficit = cfg.inv_f_max - mean_interval;
        (v == 1.0 ? deficit_v1 : deficit_v10) = deficit;
        c.require(mean_interval >= 0.98 * cfg.inv_f_max,
                  fmt("V=%g: mean interval %.4f >= 0.98/f_max = %.4f", v, mean_interval,
                      0.98 * cfg.inv_f_max));
    }
    c.require(deficit_v1 <= deficit_v10,
              fmt("deficit shrinks with V: %.4g (V=1) <= %.4g (V=10)", deficit_v1, deficit_v10));
    return c;
}

Check criterion_lecam_ordering() {
    Check c;
    double gamma_uniform = solve_unconstrained(DelayModel::uniform(0.0, 1.0));
    double gamma_perturbed = solve_unconstrained(DelayModel::lecam_perturbed(0.1611, 0.5, 100));
    c.require(gamma_perturbed >= gamma_uniform,
              fmt("gamma(perturbed) = %.7f >= gamma(uniform) = %.7f", gamma_perturbed, gamma_uniform));
    return c;
}

Check criterion_theta_diagnostic(unsigned workers) {
    Check c;
    const int runs = 100;
    RunConfig cfg = online_uniform_exact(100000);
    cfg.seed = 46;
    double gamma_ref = uniform01_gamma_ref();
    std::vector<double> thetas(runs);
    parallel_for(runs, workers, [&](int i) {
        RunConfig rc = cfg;
        rc.seed = derive_seed(cfg.seed, 2 + static_cast<std::uint64_t>(i));
        thetas[i] = run(rc).trajectory.theta(gamma_ref, 0.5);
    });
    int within = 0;
    for (double t : thetas) {
        if (std::abs(t) <= 0.02) ++within;
    }
    c.require(within >= static_cast<int>(0.9 * runs),
              fmt("%d/%d runs with |theta_K| <= 0.02 (need >= %d)", within, runs,
                  static_cast<int>(0.9 * runs)));
    return c;
}

Check criterion_area_accounting() {
    Check c;
    const int trials = 1000;
    Rng pick(4242);
    DelayModel models[] = {DelayModel::uniform(0.0, 1.0), DelayModel::log_normal(1.0, 1.3),
                           DelayModel::deterministic(1.5),
                           DelayModel::lecam_perturbed(0.1611, 0.5, 100)};
    double worst = 0.0;
    bool ok = true;
    for (int i = 0; i < trials && ok; ++i) {
        RunConfig cfg;
        cfg.model = models[pick.next_u64() % 4];
        cfg.cycles = 1 + static_cast<std::int64_t>(pick.uniform01() * 200.0);
        cfg.seed = pick.next_u64();
        cfg.bounds_mode = BoundsMode::exact_moments;
        cfg.record_every = 1;
        switch (pick.next_u64() % 4) {
            case 0: cfg.policy = PolicySpec::parse("zero_wait"); break;
            case 1: cfg.policy = PolicySpec::parse(fmt("constant_wait:%.6f", pick.uniform(0.0, 2.0))); break;
            case 2: cfg.policy = PolicySpec::parse(fmt("oracle:%.6f", pick.uniform(0.0, 3.0))); break;
            default: cfg.policy = PolicySpec::parse("online"); break;
        }
        const auto& traj = run(cfg).trajectory;
        double sum_areas = traj.total_area();
        double integral = traj.time_average_aoi(traj.end_time()) * traj.end_time();
        double rel = std::abs(sum_areas - integral) / std::max(1.0, std::abs(sum_areas));
        worst = std::max(worst, rel);
        ok = rel <= 1e-9;
    }
    c.require(ok, fmt("%d random trajectories: worst |sum X - integral A| relative error %.3g <= 1e-9",
                      trials, worst));
    return c;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const std::string& filter, unsigned workers) {
    struct Entry {
        int id;
        const char* name;
        std::function<Check()> fn;
    };
    const Entry entries[] = {
        {1, "oracle-cubic", [] { return criterion_oracle_cubic(); }},
        {2, "oracle-zero-wait-gap", [] { return criterion_zero_wait_gap(); }},
        {3, "oracle-constrained", [] { return criterion_constrained_oracle(); }},
        {4, "online-mse-envelope", [workers] { return criterion_mse_envelope(workers); }},
        {5, "online-convergence", [workers] { return criterion_as_convergence(workers); }},
        {6, "ensemble-aoi-ratio", [workers] { return criterion_aoi_ratio_convergence(workers); }},
        {7, "ensemble-frequency-constraint",
         [workers] { return criterion_frequency_constraint(workers); }},
        {8, "oracle-lecam-ordering", [] { return criterion_lecam_ordering(); }},
        {9, "theta-diagnostic", [workers] { return criterion_theta_diagnostic(workers); }},
        {10, "area-accounting", [] { return criterion_area_accounting(); }},
    };
    std::vector<CriterionResult> results;
    for (const auto& e : entries) {
        if (!filter.empty() && std::string(e.name).find(filter) == std::string::npos) continue;
        auto t0 = std::chrono::steady_clock::now();
        Check check = e.fn();
        auto t1 = std::chrono::steady_clock::now();
        results.push_back({e.id, e.name, check.passed, check.detail,
                           std::chrono::duration<double>(t1 - t0).count()});
    }
    return results;
}

void print_acceptance(const std::vector<CriterionResult>& results, std::ostream& out) {
    for (const auto& r : results) {
        out << (r.passed ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << ": " << r.detail
            << fmt(" (%.2fs)", r.seconds) << "\n";
    }
    int passed = 0;
    for (const auto& r : results) passed += r.passed ? 1 : 0;
    out << passed << "/" << results.size() << " criteria passed\n";
}

bool all_passed(const std::vector<CriterionResult>& results) {
    for (const auto& r : results) {
        if (!r.passed) return false;
    }
    return true;
}

}  // namespace aoi
