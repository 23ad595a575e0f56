#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "aoi/rng.hpp"

namespace aoi {

/// First and second moments plus the upper edge of the support
/// (+infinity when unbounded).
struct MomentSummary {
    double mean = 0.0;
    double second_moment = 0.0;
    double upper_support = 0.0;
};

/// E[max{beta, D}] and E[(1/2) max{beta, D}^2] for a waiting threshold beta.
struct ThresholdIntegrals {
    double e_max = 0.0;
    double e_half_max_sq = 0.0;
};

struct LogNormalSpec {
    double mu = 0.0;
    double sigma = 1.0;
    std::optional<double> truncation;  // resample above this bound when set
};

struct UniformSpec {
    double a = 0.0;
    double b = 1.0;
};

struct DeterministicSpec {
    double value = 1.0;
};

/// Uniform on [0,1] with mass c/sqrt(k) moved from the lowest delta/2
/// of the support to the highest delta/2. The two perturbed segments
/// offset exactly, so the density still integrates to 1.
struct LeCamPerturbedSpec {
    double delta = 0.0;
    double c = 0.5;
    int k_param = 1;
    double epsilon() const;  // c / sqrt(k_param)
};

/// Discrete uniform over an observed sample set (atoms are acceptable here;
/// only the plug-in baseline uses this variant).
struct EmpiricalSpec {
    std::vector<double> samples;  // kept sorted
};

/// A transmission-delay distribution: sampling, CDF, moments and the two
/// threshold integrals every solver consumes. Immutable after construction
/// and safe to share across concurrent runs.
class DelayModel {
public:
    static DelayModel log_normal(double mu, double sigma);
    static DelayModel log_normal(double mu, double sigma, double truncation);
    /// Truncated variant with the bound placed at the 99.99th percentile.
    static DelayModel log_normal_truncated(double mu, double sigma);
    static DelayModel uniform(double a, double b);
    static DelayModel deterministic(double value);
    static DelayModel lecam_perturbed(double delta, double c, int k_param);
    static DelayModel empirical(std::vector<double> samples);
    /// Same as empirical() but trusts the input to be sorted ascending.
    static DelayModel empirical_presorted(std::vector<double> samples);

    /// One i.i.d. draw. Identical seed and model give an identical stream.
    double sample(Rng& rng) const;

    /// Closed forms where available, quadrature / finite sums otherwise
    /// (relative error <= 1e-9).
    MomentSummary moments() const;

    double cdf(double x) const;

    /// E[max{beta, D}] and E[(1/2) max{beta, D}^2]; e_max is nondecreasing
    /// and 1-Lipschitz in beta and >= max{beta, mean}.
    ThresholdIntegrals threshold_integrals(double beta) const;

    /// Value q with P(D <= q) = p. Used for integration caps and search
    /// bounds; exact for the piecewise variants.
    double upper_quantile(double p) const;

    nlohmann::json to_json() const;
    static DelayModel from_json(const nlohmann::json& j);

    /// Compact CLI form, e.g. "uniform:0,1", "lognormal:1,1.3",
    /// "lognormal:1,1.3,trunc", "deterministic:1", "lecam:0.1611,0.5,100",
    /// "empirical:delays.csv".
    static DelayModel parse(const std::string& spec);

    /// One-column CSV of delays (an optional non-numeric header is skipped).
    static std::vector<double> load_delay_csv(const std::string& path);

    std::string describe() const;

    bool is_empirical() const { return std::holds_alternative<EmpiricalSpec>(spec_); }

private:
    using Spec = std::variant<LogNormalSpec, UniformSpec, DeterministicSpec, LeCamPerturbedSpec,
                              EmpiricalSpec>;
    explicit DelayModel(Spec spec);

    Spec spec_;
    // Prefix sums over the sorted empirical atoms; make threshold integrals
    // O(log n) so the plug-in baseline can refit cheaply.
    std::vector<double> emp_prefix_x_;
    std::vector<double> emp_prefix_x2_;
};

}  // namespace aoi
