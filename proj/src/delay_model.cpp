#include "aoi/delay_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "aoi/numerics.hpp"

namespace aoi {

namespace {

constexpr double kDefaultTruncationPercentile = 0.9999;

struct DensityPiece {
    double lo, hi, density;
};

// Piecewise-constant densities (uniform, perturbed uniform) admit exact
// threshold integrals: per piece, clamp to [beta, hi] and integrate the
// monomials directly.
ThresholdIntegrals piecewise_threshold_integrals(const std::vector<DensityPiece>& pieces,
                                                 double beta) {
    double cdf_at_beta = 0.0;
    double tail_x = 0.0;
    double tail_x2 = 0.0;
    for (const auto& p : pieces) {
        double below = std::clamp(beta, p.lo, p.hi) - p.lo;
        cdf_at_beta += p.density * below;
        double lo = std::max(beta, p.lo);
        if (lo < p.hi) {
            tail_x += p.density * 0.5 * (p.hi * p.hi - lo * lo);
            tail_x2 += p.density * (p.hi * p.hi * p.hi - lo * lo * lo) / 3.0;
        }
    }
    return {beta * cdf_at_beta + tail_x, 0.5 * (beta * beta * cdf_at_beta + tail_x2)};
}

std::vector<DensityPiece> lecam_pieces(const LeCamPerturbedSpec& s) {
    double eps = s.epsilon();
    double h = 0.5 * s.delta;
    return {{0.0, h, 1.0 - eps}, {h, 1.0 - h, 1.0}, {1.0 - h, 1.0, 1.0 + eps}};
}

// E[D^m ; x_lo < D <= x_hi] for an (untruncated) log-normal, integrated in
// log space where the integrand is a plain Gaussian centred at mu + m*sigma^2.
// The caps at +-9.5 sigma around that centre leave a tail below 1e-20 of the
// full moment, which is what the 1e-9 relative-error contract needs (a cap at
// a fixed probability quantile would not be: the second moment concentrates
// far beyond the 1 - 1e-12 quantile for sigma around 1.5).
double lognormal_partial_moment(double mu, double sigma, int m, double x_lo, double x_hi) {
    double centre = mu + m * sigma * sigma;
    double y_lo = centre - 9.5 * sigma;
    double y_hi = centre + 9.5 * sigma;
    if (x_lo > 0.0) y_lo = std::max(y_lo, std::log(x_lo));
    if (std::isfinite(x_hi)) y_hi = std::min(y_hi, std::log(x_hi));
    if (y_hi <= y_lo) return 0.0;
    double full_moment = std::exp(m * mu + 0.5 * m * m * sigma * sigma);
    double inv_sigma = 1.0 / sigma;
    const double inv_sqrt_two_pi = 0.3989422804014326779399461;
    auto integrand = [&](double y) {
        double z = (y - mu) * inv_sigma;
        return std::exp(m * y - 0.5 * z * z) * inv_sqrt_two_pi * inv_sigma;
    };
    return adaptive_simpson(integrand, y_lo, y_hi, 1e-11 * full_moment);
}

double lognormal_cdf(double mu, double sigma, double x) {
    if (x <= 0.0) return 0.0;
    return normal_cdf((std::log(x) - mu) / sigma);
}

}  // namespace

double LeCamPerturbedSpec::epsilon() const { return c / std::sqrt(static_cast<double>(k_param)); }

DelayModel::DelayModel(Spec spec) : spec_(std::move(spec)) {
    if (auto* e = std::get_if<EmpiricalSpec>(&spec_)) {
        emp_prefix_x_.resize(e->samples.size() + 1);
        emp_prefix_x2_.resize(e->samples.size() + 1);
        KahanSum sx, sx2;
        emp_prefix_x_[0] = 0.0;
        emp_prefix_x2_[0] = 0.0;
        for (std::size_t i = 0; i < e->samples.size(); ++i) {
            double x = e->samples[i];
            sx.add(x);
            sx2.add(x * x);
            emp_prefix_x_[i + 1] = sx.value();
            emp_prefix_x2_[i + 1] = sx2.value();
        }
    }
}

DelayModel DelayModel::log_normal(double mu, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("lognormal: sigma must be > 0");
    return DelayModel(LogNormalSpec{mu, sigma, std::nullopt});
}

DelayModel DelayModel::log_normal(double mu, double sigma, double truncation) {
    if (!(sigma > 0.0)) throw std::invalid_argument("lognormal: sigma must be > 0");
    if (!(truncation > 0.0)) throw std::invalid_argument("lognormal: truncation must be > 0");
    if (lognormal_cdf(mu, sigma, truncation) < 1e-6) {
        throw std::invalid_argument("lognormal: truncation bound leaves almost no mass");
    }
    return DelayModel(LogNormalSpec{mu, sigma, truncation});
}

DelayModel DelayModel::log_normal_truncated(double mu, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("lognormal: sigma must be > 0");
    double bound = std::exp(mu + sigma * normal_quantile(kDefaultTruncationPercentile));
    return DelayModel(LogNormalSpec{mu, sigma, bound});
}

DelayModel DelayModel::uniform(double a, double b) {
    if (!(a >= 0.0) || !(b > a)) throw std::invalid_argument("uniform: require 0 <= a < b");
    return DelayModel(UniformSpec{a, b});
}

DelayModel DelayModel::deterministic(double value) {
    if (!(value > 0.0)) throw std::invalid_argument("deterministic: value must be > 0");
    return DelayModel(DeterministicSpec{value});
}

DelayModel DelayModel::lecam_perturbed(double delta, double c, int k_param) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("lecam: delta must be in (0,1)");
    if (!(c > 0.0 && c <= 0.5)) throw std::invalid_argument("lecam: c must be in (0, 1/2]");
    if (k_param < 1) throw std::invalid_argument("lecam: k must be a positive integer");
    return DelayModel(LeCamPerturbedSpec{delta, c, k_param});
}

DelayModel DelayModel::empirical(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    return empirical_presorted(std::move(samples));
}

DelayModel DelayModel::empirical_presorted(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("empirical: sample set must be nonempty");
    if (!(samples.front() >= 0.0)) {
        throw std::invalid_argument("empirical: samples must be >= 0");
    }
    if (!std::is_sorted(samples.begin(), samples.end())) {
        throw std::invalid_argument("empirical_presorted: samples not sorted");
    }
    return DelayModel(EmpiricalSpec{std::move(samples)});
}

double DelayModel::sample(Rng& rng) const {
    return std::visit(
        [&rng](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LogNormalSpec>) {
                double x = std::exp(s.mu + s.sigma * rng.gaussian());
                if (s.truncation) {
                    while (x > *s.truncation) x = std::exp(s.mu + s.sigma * rng.gaussian());
                }
                return x;
            } else if constexpr (std::is_same_v<T, UniformSpec>) {
                return rng.uniform(s.a, s.b);
            } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
                return s.value;
            } else if constexpr (std::is_same_v<T, LeCamPerturbedSpec>) {
                // Inverse CDF over the three constant-density segments.
                double eps = s.epsilon();
                double h = 0.5 * s.delta;
                double u = rng.uniform01();
                double f1 = (1.0 - eps) * h;
                double f2 = f1 + (1.0 - s.delta);
                if (u < f1) return u / (1.0 - eps);
                if (u < f2) return h + (u - f1);
                return std::min(1.0, (1.0 - h) + (u - f2) / (1.0 + eps));
            } else {
                const auto& v = s.samples;
                auto idx = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(v.size()));
                return v[std::min(idx, v.size() - 1)];
            }
        },
        spec_);
}

MomentSummary DelayModel::moments() const {
    return std::visit(
        [this](const auto& s) -> MomentSummary {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LogNormalSpec>) {
                if (!s.truncation) {
                    return {std::exp(s.mu + 0.5 * s.sigma * s.sigma),
                            std::exp(2.0 * s.mu + 2.0 * s.sigma * s.sigma), kInf};
                }
                double b = *s.truncation;
                double mass = lognormal_partial_moment(s.mu, s.sigma, 0, 0.0, b);
                return {lognormal_partial_moment(s.mu, s.sigma, 1, 0.0, b) / mass,
                        lognormal_partial_moment(s.mu, s.sigma, 2, 0.0, b) / mass, b};
            } else if constexpr (std::is_same_v<T, UniformSpec>) {
                return {0.5 * (s.a + s.b), (s.a * s.a + s.a * s.b + s.b * s.b) / 3.0, s.b};
            } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
                return {s.value, s.value * s.value, s.value};
            } else if constexpr (std::is_same_v<T, LeCamPerturbedSpec>) {
                double eps = s.epsilon();
                double h = 0.5 * s.delta;
                double mean = 0.5 + eps * h * (1.0 - h);
                double m2 = 1.0 / 3.0 + eps * ((1.0 - std::pow(1.0 - h, 3)) - h * h * h) / 3.0;
                return {mean, m2, 1.0};
            } else {
                auto n = static_cast<double>(s.samples.size());
                return {emp_prefix_x_.back() / n, emp_prefix_x2_.back() / n, s.samples.back()};
            }
        },
        spec_);
}

double DelayModel::cdf(double x) const {
    return std::visit(
        [x](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LogNormalSpec>) {
                if (!s.truncation) return lognormal_cdf(s.mu, s.sigma, x);
                if (x >= *s.truncation) return 1.0;
                return lognormal_cdf(s.mu, s.sigma, x) /
                       lognormal_cdf(s.mu, s.sigma, *s.truncation);
            } else if constexpr (std::is_same_v<T, UniformSpec>) {
                return std::clamp((x - s.a) / (s.b - s.a), 0.0, 1.0);
            } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
                return x >= s.value ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<T, LeCamPerturbedSpec>) {
                double eps = s.epsilon();
                double h = 0.5 * s.delta;
                if (x <= 0.0) return 0.0;
                if (x >= 1.0) return 1.0;
                if (x <= h) return (1.0 - eps) * x;
                if (x <= 1.0 - h) return (1.0 - eps) * h + (x - h);
                return (1.0 - eps) * h + (1.0 - s.delta) + (1.0 + eps) * (x - (1.0 - h));
            } else {
                const auto& v = s.samples;
                auto it = std::upper_bound(v.begin(), v.end(), x);
                return static_cast<double>(it - v.begin()) / static_cast<double>(v.size());
            }
        },
        spec_);
}

ThresholdIntegrals DelayModel::threshold_integrals(double beta) const {
    if (!(beta >= 0.0)) throw std::invalid_argument("threshold_integrals: beta must be >= 0");
    return std::visit(
        [this, beta](const auto& s) -> ThresholdIntegrals {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LogNormalSpec>) {
                double b = s.truncation ? *s.truncation : kInf;
                double mass = s.truncation ? lognormal_cdf(s.mu, s.sigma, b) : 1.0;
                double f_beta = std::min(1.0, lognormal_cdf(s.mu, s.sigma, beta) / mass);
                double t1 = lognormal_partial_moment(s.mu, s.sigma, 1, beta, b) / mass;
                double t2 = lognormal_partial_moment(s.mu, s.sigma, 2, beta, b) / mass;
                return {beta * f_beta + t1, 0.5 * (beta * beta * f_beta + t2)};
            } else if constexpr (std::is_same_v<T, UniformSpec>) {
                double w = s.b - s.a;
                return piecewise_threshold_integrals({{s.a, s.b, 1.0 / w}}, beta);
            } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
                double m = std::max(beta, s.value);
                return {m, 0.5 * m * m};
            } else if constexpr (std::is_same_v<T, LeCamPerturbedSpec>) {
                return piecewise_threshold_integrals(lecam_pieces(s), beta);
            } else {
                const auto& v = s.samples;
                auto n = static_cast<double>(v.size());
                auto idx =
                    static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), beta) - v.begin());
                double count_below = static_cast<double>(idx);
                double tail_x = emp_prefix_x_.back() - emp_prefix_x_[idx];
                double tail_x2 = emp_prefix_x2_.back() - emp_prefix_x2_[idx];
                return {(beta * count_below + tail_x) / n,
                        0.5 * (beta * beta * count_below + tail_x2) / n};
            }
        },
        spec_);
}

double DelayModel::upper_quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("upper_quantile: p must be in (0,1)");
    return std::visit(
        [this, p](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LogNormalSpec>) {
                double q = std::exp(s.mu + s.sigma * normal_quantile(p));
                return s.truncation ? std::min(q, *s.truncation) : q;
            } else if constexpr (std::is_same_v<T, UniformSpec>) {
                return s.a + p * (s.b - s.a);
            } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
                return s.value;
            } else if constexpr (std::is_same_v<T, LeCamPerturbedSpec>) {
                double eps = s.epsilon();
                double h = 0.5 * s.delta;
                double f1 = (1.0 - eps) * h;
                double f2 = f1 + (1.0 - s.delta);
                if (p < f1) return p / (1.0 - eps);
                if (p < f2) return h + (p - f1);
                return (1.0 - h) + (p - f2) / (1.0 + eps);
            } else {
                const auto& v = s.samples;
                auto idx = static_cast<std::size_t>(p * static_cast<double>(v.size()));
                return v[std::min(idx, v.size() - 1)];
            }
        },
        spec_);
}

nlohmann::json DelayModel::to_json() const {
    return std::visit(
        [](const auto& s) -> nlohmann::json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LogNormalSpec>) {
                nlohmann::json j{{"kind", "lognormal"}, {"mu", s.mu}, {"sigma", s.sigma}};
                if (s.truncation) j["truncation"] = *s.truncation;
                return j;
            } else if constexpr (std::is_same_v<T, UniformSpec>) {
                return {{"kind", "uniform"}, {"a", s.a}, {"b", s.b}};
            } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
                return {{"kind", "deterministic"}, {"value", s.value}};
            } else if constexpr (std::is_same_v<T, LeCamPerturbedSpec>) {
                return {{"kind", "lecam"}, {"delta", s.delta}, {"c", s.c}, {"k", s.k_param}};
            } else {
                return {{"kind", "empirical"}, {"samples", s.samples}};
            }
        },
        spec_);
}

DelayModel DelayModel::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "lognormal") {
        double mu = j.at("mu").get<double>();
        double sigma = j.at("sigma").get<double>();
        if (j.contains("truncation")) {
            if (j["truncation"].is_boolean()) {
                return j["truncation"].get<bool>() ? log_normal_truncated(mu, sigma)
                                                   : log_normal(mu, sigma);
            }
            return log_normal(mu, sigma, j["truncation"].get<double>());
        }
        return log_normal(mu, sigma);
    }
    if (kind == "uniform") return uniform(j.at("a").get<double>(), j.at("b").get<double>());
    if (kind == "deterministic") return deterministic(j.at("value").get<double>());
    if (kind == "lecam") {
        return lecam_perturbed(j.at("delta").get<double>(), j.at("c").get<double>(),
                               j.at("k").get<int>());
    }
    if (kind == "empirical") {
        if (j.contains("csv")) return empirical(load_delay_csv(j["csv"].get<std::string>()));
        return empirical(j.at("samples").get<std::vector<double>>());
    }
    throw std::invalid_argument("unknown delay model kind: " + kind);
}

DelayModel DelayModel::parse(const std::string& spec) {
    auto colon = spec.find(':');
    std::string kind = spec.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    std::vector<std::string> parts;
    std::stringstream ss(rest);
    for (std::string tok; std::getline(ss, tok, ',');) parts.push_back(tok);
    auto num = [&](std::size_t i) {
        if (i >= parts.size()) throw std::invalid_argument("model spec '" + spec + "': missing parameter");
        return std::stod(parts[i]);
    };
    if (kind == "uniform") return uniform(num(0), num(1));
    if (kind == "deterministic") return deterministic(num(0));
    if (kind == "lognormal") {
        if (parts.size() == 2) return log_normal(num(0), num(1));
        if (parts.size() == 3 && parts[2] == "trunc") return log_normal_truncated(num(0), num(1));
        if (parts.size() == 3) return log_normal(num(0), num(1), num(2));
        throw std::invalid_argument("model spec '" + spec + "': expected mu,sigma[,trunc|B]");
    }
    if (kind == "lecam") return lecam_perturbed(num(0), num(1), static_cast<int>(num(2)));
    if (kind == "empirical") {
        if (parts.empty()) throw std::invalid_argument("empirical model needs a CSV path");
        return empirical(load_delay_csv(parts[0]));
    }
    throw std::invalid_argument("unknown model kind in spec '" + spec + "'");
}

std::vector<double> DelayModel::load_delay_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open delay CSV: " + path);
    std::vector<double> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(std::stod(line));
        } catch (const std::exception&) {
            if (first) {
                first = false;
                continue;  // header row
            }
            throw std::runtime_error("bad delay value in " + path + ": '" + line + "'");
        }
        first = false;
    }
    if (out.empty()) throw std::runtime_error("no delays found in " + path);
    return out;
}

std::string DelayModel::describe() const {
    return to_json().dump();
}

}  // namespace aoi
