#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aoi/cycle.hpp"
#include "aoi/delay_model.hpp"
#include "aoi/oracle.hpp"
#include "aoi/sampler.hpp"

namespace aoi {

inline constexpr const char* kVersion = "0.1.0";

/// Where the learner's moment bounds come from: the model's exact moments,
/// or the empirical recipe (d_hat/10, 10*d_hat, m_hat/10, 10*m_hat) over a
/// warmup prefix of the delay stream.
enum class BoundsMode { exact_moments, estimated };

std::string to_string(BoundsMode mode);
BoundsMode bounds_mode_from_string(const std::string& s);

/// Policy selection plus the knobs each variant needs. Unset optional
/// fields are resolved against the model at run setup (oracle threshold is
/// solved, constant wait becomes (1/f_max - mean)^+).
struct PolicySpec {
    enum class Kind { online, zero_wait, constant_wait, oracle_threshold, plugin };
    Kind kind = Kind::online;
    double v = 10.0;                  // online: debt weight
    std::optional<double> wait;       // constant_wait override
    std::optional<double> beta;       // oracle_threshold override
    int refit_every = 10;             // plugin
    std::optional<double> wait_cap;   // online: validation-only warning bound

    nlohmann::json to_json() const;
    static PolicySpec from_json(const nlohmann::json& j);
    /// Compact CLI form: "online", "online:v=1", "zero_wait",
    /// "constant_wait", "constant_wait:0.5", "oracle", "oracle:1.0",
    /// "plugin", "plugin:25".
    static PolicySpec parse(const std::string& spec);
    std::string name() const;
};

struct MomentBoundsEstimate {
    double d_lb = 0.0, d_ub = 0.0, m_lb = 0.0, m_ub = 0.0;
};

/// The empirical bound recipe over n warmup draws consumed from rng.
MomentBoundsEstimate estimate_moment_bounds(const DelayModel& model, int n, Rng& rng);

struct RunConfig {
    DelayModel model = DelayModel::uniform(0.0, 1.0);
    PolicySpec policy;
    std::int64_t cycles = 1000;
    double inv_f_max = 0.0;  // 0 encodes f_max = infinity
    std::uint64_t seed = 1;
    BoundsMode bounds_mode = BoundsMode::estimated;
    int warmup_n = 100;
    std::int64_t record_every = 1;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    void validate() const;
};

/// Metrics captured while passing a checkpoint cycle. gamma/debt are NaN
/// for policies without learner state. time_avg_aoi is the time average at
/// t = S_{k+1}, which coincides with the cumulative ratio at a cycle
/// boundary; both are reported so neither definition is conflated.
struct CheckpointMetrics {
    std::int64_t cycle = 0;
    double aoi_ratio = kNaN;
    double time_avg_aoi = kNaN;
    double gamma = kNaN;
    double debt = kNaN;
    double mean_interval = kNaN;  // S_{k+1} / k
};

struct RunResult {
    Trajectory trajectory{1};
    std::vector<CheckpointMetrics> checkpoints;
    std::optional<SamplerState> final_state;
    MomentBoundsEstimate bounds_used;
    std::optional<GammaBounds> window;  // online policies
    double initial_gamma = kNaN;
    std::int64_t wait_cap_exceedances = 0;
    nlohmann::json resolved_policy;
};

/// Simulate one seeded run: warmup draws (estimated mode) precede cycle 1
/// and are excluded from all metrics; then per cycle: draw the delay,
/// decide the wait, record, update the policy.
RunResult run(const RunConfig& config, std::span<const std::int64_t> checkpoints = {});

struct MeanCi {
    double mean = 0.0;
    double ci_half_width = 0.0;  // 1.96 * sd / sqrt(runs)
};

struct EnsembleSummary {
    std::vector<std::int64_t> checkpoints;
    // metric name -> per-checkpoint statistics
    std::map<std::string, std::vector<MeanCi>> metrics;
    int runs = 0;
};

/// Independent runs with sub-seeds derived from config.seed, aggregated at
/// the checkpoints. Results are identical whatever the worker count.
EnsembleSummary ensemble(const RunConfig& config, int runs,
                         std::span<const std::int64_t> checkpoints, unsigned workers = 0);

/// Powers of two up to the horizon, plus the horizon itself.
std::vector<std::int64_t> default_checkpoints(std::int64_t cycles);

// --- output ----------------------------------------------------------------

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out);
void write_ensemble_csv(const EnsembleSummary& summary, std::ostream& out);

/// Reproducibility audit blob: code version plus the fully resolved config.
nlohmann::json run_summary_json(const RunConfig& config, const RunResult& result);
nlohmann::json ensemble_summary_json(const RunConfig& config, int runs,
                                     const EnsembleSummary& summary);

}  // namespace aoi
