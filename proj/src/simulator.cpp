#include "aoi/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace aoi {

namespace {

constexpr std::uint64_t kDelayStream = 0;
constexpr std::uint64_t kPolicyStream = 1;
constexpr std::uint64_t kRunStreamBase = 2;
constexpr double kZ975 = 1.959963984540054;  // 95% normal critical value

std::string fmt_double(double x) {
    if (std::isnan(x)) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

double f_max_from_inv(double inv_f_max) { return inv_f_max > 0.0 ? 1.0 / inv_f_max : kInf; }

}  // namespace

std::string to_string(BoundsMode mode) {
    return mode == BoundsMode::exact_moments ? "exact" : "estimated";
}

BoundsMode bounds_mode_from_string(const std::string& s) {
    if (s == "exact" || s == "exact-moments" || s == "exact_moments") {
        return BoundsMode::exact_moments;
    }
    if (s == "estimated") return BoundsMode::estimated;
    throw std::invalid_argument("unknown bounds mode: " + s);
}

nlohmann::json PolicySpec::to_json() const {
    nlohmann::json j{{"policy", name()}};
    switch (kind) {
        case Kind::online:
            j["v"] = v;
            if (wait_cap) j["wait_cap"] = *wait_cap;
            break;
        case Kind::constant_wait:
            if (wait) j["wait"] = *wait;
            break;
        case Kind::oracle_threshold:
            if (beta) j["beta"] = *beta;
            break;
        case Kind::plugin:
            j["refit_every"] = refit_every;
            break;
        case Kind::zero_wait:
            break;
    }
    return j;
}

PolicySpec PolicySpec::from_json(const nlohmann::json& j) {
    PolicySpec spec;
    const std::string name = j.at("policy").get<std::string>();
    if (name == "online") {
        spec.kind = Kind::online;
        if (j.contains("v")) spec.v = j["v"].get<double>();
        if (j.contains("wait_cap")) spec.wait_cap = j["wait_cap"].get<double>();
    } else if (name == "zero_wait") {
        spec.kind = Kind::zero_wait;
    } else if (name == "constant_wait") {
        spec.kind = Kind::constant_wait;
        if (j.contains("wait")) spec.wait = j["wait"].get<double>();
    } else if (name == "oracle") {
        spec.kind = Kind::oracle_threshold;
        if (j.contains("beta")) spec.beta = j["beta"].get<double>();
    } else if (name == "plugin") {
        spec.kind = Kind::plugin;
        if (j.contains("refit_every")) spec.refit_every = j["refit_every"].get<int>();
    } else {
        throw std::invalid_argument("unknown policy: " + name);
    }
    return spec;
}

PolicySpec PolicySpec::parse(const std::string& s) {
    auto colon = s.find(':');
    std::string name = s.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
    PolicySpec spec;
    if (name == "online") {
        spec.kind = Kind::online;
        if (!arg.empty()) {
            if (arg.rfind("v=", 0) == 0) arg = arg.substr(2);
            spec.v = std::stod(arg);
        }
    } else if (name == "zero_wait" || name == "zerowait") {
        spec.kind = Kind::zero_wait;
    } else if (name == "constant_wait" || name == "constant") {
        spec.kind = Kind::constant_wait;
        if (!arg.empty()) spec.wait = std::stod(arg);
    } else if (name == "oracle") {
        spec.kind = Kind::oracle_threshold;
        if (!arg.empty()) spec.beta = std::stod(arg);
    } else if (name == "plugin") {
        spec.kind = Kind::plugin;
        if (!arg.empty()) spec.refit_every = std::stoi(arg);
    } else {
        throw std::invalid_argument("unknown policy spec: " + s);
    }
    return spec;
}

std::string PolicySpec::name() const {
    switch (kind) {
        case Kind::online: return "online";
        case Kind::zero_wait: return "zero_wait";
        case Kind::constant_wait: return "constant_wait";
        case Kind::oracle_threshold: return "oracle";
        case Kind::plugin: return "plugin";
    }
    return "?";
}

MomentBoundsEstimate estimate_moment_bounds(const DelayModel& model, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("estimate_moment_bounds: n must be >= 1");
    KahanSum sum_d, sum_d2;
    for (int i = 0; i < n; ++i) {
        double d = model.sample(rng);
        sum_d.add(d);
        sum_d2.add(d * d);
    }
    double d_hat = sum_d.value() / n;
    double m_hat = sum_d2.value() / n;
    return {d_hat / 10.0, 10.0 * d_hat, m_hat / 10.0, 10.0 * m_hat};
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j{{"model", model.to_json()},
                     {"policy", policy.to_json()},
                     {"cycles", cycles},
                     {"seed", seed},
                     {"bounds_mode", to_string(bounds_mode)},
                     {"warmup", warmup_n},
                     {"record_every", record_every}};
    if (inv_f_max > 0.0) j["f_max"] = 1.0 / inv_f_max;
    return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.model = DelayModel::from_json(j.at("model"));
    cfg.policy = PolicySpec::from_json(j.at("policy"));
    cfg.cycles = j.at("cycles").get<std::int64_t>();
    if (j.contains("f_max") && !j["f_max"].is_null()) {
        double f = j["f_max"].get<double>();
        if (!(f > 0.0)) throw std::invalid_argument("config: f_max must be > 0");
        cfg.inv_f_max = std::isinf(f) ? 0.0 : 1.0 / f;
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("bounds_mode")) {
        cfg.bounds_mode = bounds_mode_from_string(j["bounds_mode"].get<std::string>());
    }
    if (j.contains("warmup")) cfg.warmup_n = j["warmup"].get<int>();
    if (j.contains("record_every")) cfg.record_every = j["record_every"].get<std::int64_t>();
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    if (cycles < 1) throw std::invalid_argument("config: cycles must be >= 1");
    if (inv_f_max < 0.0) throw std::invalid_argument("config: inv_f_max must be >= 0");
    if (bounds_mode == BoundsMode::estimated && warmup_n < 1) {
        throw std::invalid_argument("config: warmup must be >= 1 in estimated mode");
    }
    if (record_every < 0) throw std::invalid_argument("config: record_every must be >= 0");
}

RunResult run(const RunConfig& config, std::span<const std::int64_t> checkpoints) {
    config.validate();
    Rng delay_rng(derive_seed(config.seed, kDelayStream));
    const std::uint64_t policy_seed = derive_seed(config.seed, kPolicyStream);
    const double f_max = f_max_from_inv(config.inv_f_max);

    RunResult result;
    result.trajectory = Trajectory(config.record_every);

    // Moment bounds: either the model's exact moments or the empirical
    // recipe over warmup draws taken from the delay stream ahead of cycle 1.
    if (config.bounds_mode == BoundsMode::exact_moments) {
        auto mom = config.model.moments();
        result.bounds_used = {mom.mean, mom.mean, mom.second_moment, mom.second_moment};
    } else {
        result.bounds_used = estimate_moment_bounds(config.model, config.warmup_n, delay_rng);
    }

    Policy policy = ZeroWaitPolicy{};
    switch (config.policy.kind) {
        case PolicySpec::Kind::online: {
            auto window = gamma_bounds(result.bounds_used.d_lb, result.bounds_used.d_ub,
                                       result.bounds_used.m_lb, result.bounds_used.m_ub, f_max);
            SamplerConfig sc;
            sc.gamma_lb = window.lower;
            sc.gamma_ub = window.upper;
            sc.d_lb = result.bounds_used.d_lb;
            sc.v = config.policy.v;
            sc.inv_f_max = config.inv_f_max;
            sc.seed = policy_seed;
            sc.wait_cap = config.policy.wait_cap;
            OnlinePolicy online(sc);
            result.window = window;
            result.initial_gamma = online.initial_gamma();
            policy = std::move(online);
            break;
        }
        case PolicySpec::Kind::zero_wait:
            break;
        case PolicySpec::Kind::constant_wait: {
            double w = config.policy.wait
                           ? *config.policy.wait
                           : std::max(0.0, config.inv_f_max - config.model.moments().mean);
            policy = ConstantWaitPolicy{w};
            break;
        }
        case PolicySpec::Kind::oracle_threshold: {
            double beta = config.policy.beta ? *config.policy.beta
                                             : solve_constrained(config.model, f_max).beta;
            policy = ThresholdWaitPolicy{beta};
            break;
        }
        case PolicySpec::Kind::plugin:
            policy = PlugInPolicy(config.policy.refit_every, 10, config.inv_f_max);
            break;
    }
    result.resolved_policy = config.policy.to_json();
    if (auto* cw = std::get_if<ConstantWaitPolicy>(&policy)) result.resolved_policy["wait"] = cw->wait;
    if (auto* th = std::get_if<ThresholdWaitPolicy>(&policy)) result.resolved_policy["beta"] = th->beta;

    std::size_t next_checkpoint = 0;
    result.checkpoints.reserve(checkpoints.size());
    auto* online = std::get_if<OnlinePolicy>(&policy);
    for (std::int64_t k = 1; k <= config.cycles; ++k) {
        double delay = config.model.sample(delay_rng);
        double wait = policy_decide(policy, delay);
        double gamma = online ? online->state().gamma : kNaN;
        double debt = online ? online->state().debt : kNaN;
        result.trajectory.append_cycle(delay, wait, gamma, debt);
        while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == k) {
            CheckpointMetrics m;
            m.cycle = k;
            m.aoi_ratio = result.trajectory.aoi_ratio();
            m.time_avg_aoi = m.aoi_ratio;  // t = S_{k+1}: identical accounting
            m.gamma = gamma;
            m.debt = debt;
            m.mean_interval = result.trajectory.end_time() / static_cast<double>(k);
            result.checkpoints.push_back(m);
            ++next_checkpoint;
        }
        policy_observe(policy, delay, wait);
    }

    if (online) {
        result.final_state = online->state();
        result.wait_cap_exceedances = online->wait_cap_exceedances();
    }
    return result;
}

std::vector<std::int64_t> default_checkpoints(std::int64_t cycles) {
    std::vector<std::int64_t> cps;
    for (std::int64_t c = 1; c < cycles && c > 0; c *= 2) cps.push_back(c);
    cps.push_back(cycles);
    return cps;
}

EnsembleSummary ensemble(const RunConfig& config, int runs,
                         std::span<const std::int64_t> checkpoints, unsigned workers) {
    config.validate();
    if (runs < 2) throw std::invalid_argument("ensemble: runs must be >= 2");
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) {
        throw std::invalid_argument("ensemble: checkpoints must be sorted");
    }
    if (checkpoints.empty() || checkpoints.front() < 1 || checkpoints.back() > config.cycles) {
        throw std::invalid_argument("ensemble: checkpoints must lie in [1, cycles]");
    }

    std::vector<std::vector<CheckpointMetrics>> per_run(static_cast<std::size_t>(runs));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < runs; i = next.fetch_add(1)) {
            RunConfig cfg = config;
            cfg.seed = derive_seed(config.seed, kRunStreamBase + static_cast<std::uint64_t>(i));
            cfg.record_every = 0;  // summary statistics only
            per_run[static_cast<std::size_t>(i)] = run(cfg, checkpoints).checkpoints;
        }
    };
    unsigned n_threads = workers ? workers : std::thread::hardware_concurrency();
    n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(runs)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    EnsembleSummary summary;
    summary.runs = runs;
    summary.checkpoints.assign(checkpoints.begin(), checkpoints.end());
    const bool has_state = config.policy.kind == PolicySpec::Kind::online;
    std::vector<std::string> names{"aoi_ratio", "time_avg_aoi", "mean_interval"};
    if (has_state) {
        names.push_back("gamma");
        names.push_back("debt");
    }
    auto pick = [](const CheckpointMetrics& m, const std::string& name) {
        if (name == "aoi_ratio") return m.aoi_ratio;
        if (name == "time_avg_aoi") return m.time_avg_aoi;
        if (name == "mean_interval") return m.mean_interval;
        if (name == "gamma") return m.gamma;
        return m.debt;
    };
    for (const auto& name : names) {
        auto& rows = summary.metrics[name];
        rows.resize(checkpoints.size());
        for (std::size_t c = 0; c < checkpoints.size(); ++c) {
            KahanSum s;
            for (const auto& r : per_run) s.add(pick(r.at(c), name));
            double mean = s.value() / runs;
            KahanSum sq;
            for (const auto& r : per_run) {
                double d = pick(r.at(c), name) - mean;
                sq.add(d * d);
            }
            double sd = std::sqrt(sq.value() / (runs - 1));
            rows[c] = {mean, kZ975 * sd / std::sqrt(static_cast<double>(runs))};
        }
    }
    return summary;
}

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out) {
    out << "k,D,W,L,Q,X,S,R,gamma,U,cum_ratio\n";
    for (const auto& r : trajectory.records()) {
        out << r.k << ',' << fmt_double(r.delay) << ',' << fmt_double(r.wait) << ','
            << fmt_double(r.length) << ',' << fmt_double(r.reward) << ',' << fmt_double(r.area)
            << ',' << fmt_double(r.sample_time) << ',' << fmt_double(r.receive_time) << ','
            << fmt_double(r.gamma) << ',' << fmt_double(r.debt) << ',' << fmt_double(r.cum_ratio)
            << '\n';
    }
}

void write_ensemble_csv(const EnsembleSummary& summary, std::ostream& out) {
    out << "checkpoint,metric,mean,ci_half_width\n";
    for (std::size_t c = 0; c < summary.checkpoints.size(); ++c) {
        for (const auto& [name, rows] : summary.metrics) {
            out << summary.checkpoints[c] << ',' << name << ',' << fmt_double(rows[c].mean) << ','
                << fmt_double(rows[c].ci_half_width) << '\n';
        }
    }
}

nlohmann::json run_summary_json(const RunConfig& config, const RunResult& result) {
    nlohmann::json j{{"version", kVersion}, {"config", config.to_json()}};
    j["config"]["policy"] = result.resolved_policy;
    j["bounds_used"] = {{"d_lb", result.bounds_used.d_lb},
                        {"d_ub", result.bounds_used.d_ub},
                        {"m_lb", result.bounds_used.m_lb},
                        {"m_ub", result.bounds_used.m_ub}};
    if (result.window) {
        j["gamma_window"] = {{"lower", result.window->lower}, {"upper", result.window->upper}};
        j["initial_gamma"] = result.initial_gamma;
    }
    if (result.final_state) {
        j["final_state"] = {{"k", result.final_state->k},
                            {"gamma", result.final_state->gamma},
                            {"debt", result.final_state->debt}};
        j["wait_cap_exceedances"] = result.wait_cap_exceedances;
    }
    const auto& traj = result.trajectory;
    j["metrics"] = {{"cycles", traj.cycle_count()},
                    {"aoi_ratio", traj.aoi_ratio()},
                    {"end_time", traj.end_time()},
                    {"mean_interval", traj.end_time() / static_cast<double>(traj.cycle_count())}};
    return j;
}

nlohmann::json ensemble_summary_json(const RunConfig& config, int runs,
                                     const EnsembleSummary& summary) {
    nlohmann::json j{{"version", kVersion}, {"config", config.to_json()}, {"runs", runs}};
    j["ci"] = "normal 95% (z = 1.96), half-width = z * sd / sqrt(runs)";
    j["checkpoints"] = summary.checkpoints;
    nlohmann::json finals;
    for (const auto& [name, rows] : summary.metrics) {
        finals[name] = {{"mean", rows.back().mean}, {"ci_half_width", rows.back().ci_half_width}};
    }
    j["final_checkpoint"] = finals;
    return j;
}

}  // namespace aoi
