#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <vector>

#include "aoi/delay_model.hpp"
#include "aoi/numerics.hpp"
#include "aoi/rng.hpp"

using namespace aoi;

namespace {

// Closed-form oracle for log-normal tail moments, independent of the
// quadrature path used by the implementation:
//   E[D^m ; D > x] = exp(m mu + m^2 sigma^2 / 2) * Phi((mu + m sigma^2 - ln x) / sigma).
double ln_tail_moment(double mu, double sigma, int m, double x) {
    double full = std::exp(m * mu + 0.5 * m * m * sigma * sigma);
    if (x <= 0.0) return full;
    return full * normal_cdf((mu + m * sigma * sigma - std::log(x)) / sigma);
}

ThresholdIntegrals ln_threshold_oracle(double mu, double sigma, double beta) {
    double cdf = beta <= 0.0 ? 0.0 : normal_cdf((std::log(beta) - mu) / sigma);
    double e_max = beta * cdf + ln_tail_moment(mu, sigma, 1, beta);
    double e_half = 0.5 * (beta * beta * cdf + ln_tail_moment(mu, sigma, 2, beta));
    return {e_max, e_half};
}

ThresholdIntegrals ln_truncated_threshold_oracle(double mu, double sigma, double b, double beta) {
    double mass = normal_cdf((std::log(b) - mu) / sigma);
    double cdf = beta <= 0.0 ? 0.0
                             : std::min(1.0, normal_cdf((std::log(beta) - mu) / sigma) / mass);
    auto ranged = [&](int m) {
        return (ln_tail_moment(mu, sigma, m, beta) - ln_tail_moment(mu, sigma, m, b)) / mass;
    };
    if (beta >= b) return {beta, 0.5 * beta * beta};
    return {beta * cdf + ranged(1), 0.5 * (beta * beta * cdf + ranged(2))};
}

// Monte Carlo estimate of the threshold integrals with standard errors.
struct McEstimate {
    double e_max, se_max, e_half, se_half;
};

McEstimate mc_threshold(const DelayModel& model, double beta, int n, std::uint64_t seed) {
    Rng rng(seed);
    KahanSum s1, s2, q1, q2;
    for (int i = 0; i < n; ++i) {
        double m = std::max(beta, model.sample(rng));
        double h = 0.5 * m * m;
        s1.add(m);
        s2.add(m * m);
        q1.add(h);
        q2.add(h * h);
    }
    double mean1 = s1.value() / n;
    double mean2 = q1.value() / n;
    double var1 = s2.value() / n - mean1 * mean1;
    double var2 = q2.value() / n - mean2 * mean2;
    return {mean1, std::sqrt(std::max(0.0, var1) / n), mean2,
            std::sqrt(std::max(0.0, var2) / n)};
}

}  // namespace

TEST_CASE("uniform and deterministic moments are the closed forms") {
    auto u = DelayModel::uniform(0.0, 1.0).moments();
    CHECK(u.mean == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(u.second_moment == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(u.upper_support == 1.0);

    auto d = DelayModel::deterministic(1.0).moments();
    CHECK(d.mean == 1.0);
    CHECK(d.second_moment == 1.0);
    CHECK(d.upper_support == 1.0);

    auto u2 = DelayModel::uniform(2.0, 5.0).moments();
    CHECK(u2.mean == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(u2.second_moment == doctest::Approx((4.0 + 10.0 + 25.0) / 3.0).epsilon(1e-15));
}

TEST_CASE("uniform threshold integrals match analytic piecewise values") {
    auto m = DelayModel::uniform(0.0, 1.0);
    auto at0 = m.threshold_integrals(0.0);
    CHECK(at0.e_max == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(at0.e_half_max_sq == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    auto at_half = m.threshold_integrals(0.5);
    CHECK(at_half.e_max == doctest::Approx(0.625).epsilon(1e-14));
    CHECK(at_half.e_half_max_sq == doctest::Approx(0.2083333333333333).epsilon(1e-12));
    auto at1 = m.threshold_integrals(1.0);
    CHECK(at1.e_max == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(at1.e_half_max_sq == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("deterministic sampling and point-mass integrals") {
    auto m = DelayModel::deterministic(1.0);
    Rng rng(1);
    for (int i = 0; i < 10; ++i) CHECK(m.sample(rng) == 1.0);
    auto lo = m.threshold_integrals(0.5);
    CHECK(lo.e_max == 1.0);
    CHECK(lo.e_half_max_sq == 0.5);
    auto hi = m.threshold_integrals(2.0);
    CHECK(hi.e_max == 2.0);
    CHECK(hi.e_half_max_sq == 2.0);
}

TEST_CASE("uniform sample mean over 1e6 draws is near 1/2") {
    auto m = DelayModel::uniform(0.0, 1.0);
    Rng rng(7);
    KahanSum s;
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 1000000; ++i) {
        double x = m.sample(rng);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        s.add(x);
    }
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
    CHECK(s.value() / 1e6 == doctest::Approx(0.5).epsilon(0.004));
}

TEST_CASE("log-normal sample mean matches exp(mu + sigma^2/2)") {
    auto m = DelayModel::log_normal(1.0, 1.3);
    Rng rng(11);
    KahanSum s;
    for (int i = 0; i < 1000000; ++i) s.add(m.sample(rng));
    double expected = std::exp(1.0 + 0.5 * 1.3 * 1.3);
    CHECK(expected == doctest::Approx(6.328).epsilon(1e-3));
    // se of the mean is about 0.0134; allow 4 standard errors.
    CHECK(s.value() / 1e6 == doctest::Approx(expected).epsilon(0.01));
    auto mom = m.moments();
    CHECK(mom.mean == doctest::Approx(expected).epsilon(1e-14));
    CHECK(mom.second_moment == doctest::Approx(std::exp(2.0 + 2.0 * 1.69)).epsilon(1e-14));
    CHECK(std::isinf(mom.upper_support));
}

TEST_CASE("log-normal threshold integrals match the closed-form oracle") {
    struct Case {
        double mu, sigma;
    };
    for (Case cs : {Case{1.0, 1.3}, Case{1.0, 1.5}, Case{0.0, 0.5}}) {
        auto m = DelayModel::log_normal(cs.mu, cs.sigma);
        for (double beta : {0.0, 0.5, 2.0, 8.0, 40.0}) {
            auto got = m.threshold_integrals(beta);
            auto want = ln_threshold_oracle(cs.mu, cs.sigma, beta);
            CHECK(got.e_max == doctest::Approx(want.e_max).epsilon(1e-9));
            CHECK(got.e_half_max_sq == doctest::Approx(want.e_half_max_sq).epsilon(1e-9));
        }
    }
}

TEST_CASE("truncated log-normal matches the conditional closed forms") {
    double mu = 1.0, sigma = 1.3;
    auto m = DelayModel::log_normal_truncated(mu, sigma);
    double b = m.moments().upper_support;
    // Default truncation sits at the 99.99th percentile.
    CHECK(normal_cdf((std::log(b) - mu) / sigma) == doctest::Approx(0.9999).epsilon(1e-10));

    auto mom = m.moments();
    double mass = normal_cdf((std::log(b) - mu) / sigma);
    double mean_want = (ln_tail_moment(mu, sigma, 1, 0.0) - ln_tail_moment(mu, sigma, 1, b)) / mass;
    double m2_want = (ln_tail_moment(mu, sigma, 2, 0.0) - ln_tail_moment(mu, sigma, 2, b)) / mass;
    CHECK(mom.mean == doctest::Approx(mean_want).epsilon(1e-9));
    CHECK(mom.second_moment == doctest::Approx(m2_want).epsilon(1e-9));

    for (double beta : {0.0, 1.0, 10.0, b + 5.0}) {
        auto got = m.threshold_integrals(beta);
        auto want = ln_truncated_threshold_oracle(mu, sigma, b, beta);
        CHECK(got.e_max == doctest::Approx(want.e_max).epsilon(1e-9));
        CHECK(got.e_half_max_sq == doctest::Approx(want.e_half_max_sq).epsilon(1e-9));
    }

    Rng rng(3);
    for (int i = 0; i < 20000; ++i) CHECK(m.sample(rng) <= b);
}

TEST_CASE("perturbed-uniform density closes and mean has the stated form") {
    double delta = 0.1611, c = 0.5;
    int k = 100;
    auto m = DelayModel::lecam_perturbed(delta, c, k);
    CHECK(m.cdf(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.cdf(0.0) == 0.0);

    double eps = c / std::sqrt(static_cast<double>(k));
    auto mom = m.moments();
    CHECK(mom.mean ==
          doctest::Approx(0.5 + eps * (delta / 2.0) * (1.0 - delta / 2.0)).epsilon(1e-14));

    // Independent numeric integration of the density (plain Simpson over
    // each constant segment is exact for polynomials).
    auto density = [&](double x) {
        if (x < delta / 2.0) return 1.0 - eps;
        if (x <= 1.0 - delta / 2.0) return 1.0;
        return 1.0 + eps;
    };
    double mean_num = 0.0, m2_num = 0.0, mass = 0.0;
    int n = 200000;
    for (int i = 0; i < n; ++i) {
        double x = (i + 0.5) / n;
        mass += density(x) / n;
        mean_num += x * density(x) / n;
        m2_num += x * x * density(x) / n;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(mom.mean == doctest::Approx(mean_num).epsilon(1e-6));
    CHECK(mom.second_moment == doctest::Approx(m2_num).epsilon(1e-6));

    Rng rng(5);
    KahanSum s;
    for (int i = 0; i < 1000000; ++i) {
        double x = m.sample(rng);
        REQUIRE(x >= 0.0);
        REQUIRE(x <= 1.0);
        s.add(x);
    }
    CHECK(s.value() / 1e6 == doctest::Approx(mom.mean).epsilon(0.002));
}

TEST_CASE("CDF is nondecreasing with CDF(upper support) = 1") {
    std::vector<DelayModel> models{DelayModel::uniform(0.0, 1.0),
                                   DelayModel::deterministic(1.0),
                                   DelayModel::lecam_perturbed(0.1611, 0.5, 100),
                                   DelayModel::log_normal_truncated(1.0, 1.3),
                                   DelayModel::empirical({0.3, 0.1, 0.7, 0.7})};
    for (const auto& m : models) {
        double upper = m.moments().upper_support;
        CHECK(m.cdf(upper) == doctest::Approx(1.0).epsilon(1e-12));
        double prev = -1.0;
        for (int i = 0; i <= 100; ++i) {
            double x = upper * i / 100.0;
            double f = m.cdf(x);
            CHECK(f >= prev);
            prev = f;
        }
    }
    // Right continuity at atoms: the atom's mass is included at the atom.
    CHECK(DelayModel::deterministic(1.0).cdf(1.0) == 1.0);
    auto emp = DelayModel::empirical({0.3, 0.1, 0.7, 0.7});
    CHECK(emp.cdf(0.7) == 1.0);
    CHECK(emp.cdf(0.3) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(emp.cdf(0.3 - 1e-12) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("threshold integrals agree with Monte Carlo within 3 standard errors") {
    std::vector<DelayModel> models{DelayModel::uniform(0.0, 1.0),
                                   DelayModel::deterministic(1.5),
                                   DelayModel::log_normal(1.0, 1.3),
                                   DelayModel::log_normal_truncated(1.0, 1.3),
                                   DelayModel::lecam_perturbed(0.1611, 0.5, 100),
                                   DelayModel::empirical({0.2, 0.4, 0.9, 1.4, 2.2})};
    std::uint64_t seed = 100;
    for (const auto& m : models) {
        double scale = m.moments().mean;
        for (double beta : {0.0, 0.5 * scale, 1.5 * scale}) {
            auto exact = m.threshold_integrals(beta);
            auto mc = mc_threshold(m, beta, 1000000, seed++);
            CHECK(std::abs(exact.e_max - mc.e_max) <= 3.0 * mc.se_max + 1e-12);
            CHECK(std::abs(exact.e_half_max_sq - mc.e_half) <= 3.0 * mc.se_half + 1e-12);
        }
    }
}

TEST_CASE("e_max is nondecreasing, 1-Lipschitz and dominates max(beta, mean)") {
    std::vector<DelayModel> models{DelayModel::uniform(0.2, 2.0),
                                   DelayModel::log_normal(1.0, 1.5),
                                   DelayModel::log_normal_truncated(1.0, 1.3),
                                   DelayModel::deterministic(0.7),
                                   DelayModel::lecam_perturbed(0.3, 0.25, 9),
                                   DelayModel::empirical({0.2, 0.4, 0.9, 1.4, 2.2})};
    for (const auto& m : models) {
        double mean = m.moments().mean;
        double hi = 4.0 * mean;
        double prev = m.threshold_integrals(0.0).e_max;
        CHECK(prev == doctest::Approx(mean).epsilon(1e-9));
        for (int i = 1; i <= 200; ++i) {
            double beta = hi * i / 200.0;
            double cur = m.threshold_integrals(beta).e_max;
            double step = hi / 200.0;
            CHECK(cur >= prev - 1e-12);
            CHECK(cur - prev <= step + 1e-9 * step);
            CHECK(cur >= std::max(beta, mean) - 1e-9 * std::max(1.0, mean));
            prev = cur;
        }
    }
}

TEST_CASE("empirical model converges to its source distribution") {
    auto src = DelayModel::uniform(0.0, 1.0);
    auto want = src.threshold_integrals(0.5);
    Rng rng(17);
    std::vector<double> samples;
    double tol[3] = {0.2, 0.02, 0.002};  // about 5/sqrt(n)
    int sizes[3] = {100, 10000, 1000000};
    int idx = 0;
    for (int n : sizes) {
        while (static_cast<int>(samples.size()) < n) samples.push_back(src.sample(rng));
        auto emp = DelayModel::empirical(samples);
        auto got = emp.threshold_integrals(0.5);
        CHECK(std::abs(got.e_max - want.e_max) <= tol[idx]);
        CHECK(std::abs(got.e_half_max_sq - want.e_half_max_sq) <= tol[idx]);
        ++idx;
    }
}

TEST_CASE("empirical integrals are the exact finite sums") {
    auto m = DelayModel::empirical({1.0, 2.0, 3.0});
    auto ti = m.threshold_integrals(2.0);
    // max{2,D} takes values 2, 2, 3.
    CHECK(ti.e_max == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
    CHECK(ti.e_half_max_sq == doctest::Approx(0.5 * (4.0 + 4.0 + 9.0) / 3.0).epsilon(1e-15));
    auto mom = m.moments();
    CHECK(mom.mean == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(mom.second_moment == doctest::Approx(14.0 / 3.0).epsilon(1e-15));
    CHECK(mom.upper_support == 3.0);
}

TEST_CASE("a single-sample empirical model acts as a point mass") {
    auto m = DelayModel::empirical({1.5});
    Rng rng(1);
    CHECK(m.sample(rng) == 1.5);
    auto mom = m.moments();
    CHECK(mom.mean == 1.5);
    CHECK(mom.second_moment == 2.25);
    CHECK(m.threshold_integrals(0.4).e_max == 1.5);
    CHECK(m.threshold_integrals(2.0).e_max == 2.0);
}

TEST_CASE("boolean truncation in JSON selects the default percentile bound") {
    auto j = nlohmann::json{{"kind", "lognormal"}, {"mu", 1.0}, {"sigma", 1.3}, {"truncation", true}};
    CHECK(DelayModel::from_json(j).to_json() ==
          DelayModel::log_normal_truncated(1.0, 1.3).to_json());
    j["truncation"] = false;
    CHECK(DelayModel::from_json(j).to_json() == DelayModel::log_normal(1.0, 1.3).to_json());
}

TEST_CASE("sampling is bit-reproducible for a fixed seed") {
    std::vector<DelayModel> models{DelayModel::uniform(0.0, 1.0),
                                   DelayModel::log_normal(1.0, 1.3),
                                   DelayModel::log_normal_truncated(1.0, 1.5),
                                   DelayModel::lecam_perturbed(0.1611, 0.5, 100),
                                   DelayModel::empirical({0.2, 0.4, 0.9})};
    for (const auto& m : models) {
        Rng a(123), b(123);
        for (int i = 0; i < 1000; ++i) REQUIRE(m.sample(a) == m.sample(b));
    }
}

TEST_CASE("JSON round trip preserves every variant") {
    std::vector<DelayModel> models{DelayModel::uniform(0.25, 1.5),
                                   DelayModel::deterministic(2.0),
                                   DelayModel::log_normal(1.0, 1.3),
                                   DelayModel::log_normal(1.0, 1.3, 340.0),
                                   DelayModel::lecam_perturbed(0.1611, 0.5, 100),
                                   DelayModel::empirical({0.5, 0.25, 1.0})};
    for (const auto& m : models) {
        auto back = DelayModel::from_json(m.to_json());
        CHECK(back.to_json() == m.to_json());
        // Same JSON implies the same stream.
        Rng a(9), b(9);
        for (int i = 0; i < 100; ++i) CHECK(m.sample(a) == back.sample(b));
    }
}

TEST_CASE("spec strings parse to the expected models") {
    CHECK(DelayModel::parse("uniform:0,1").to_json() == DelayModel::uniform(0, 1).to_json());
    CHECK(DelayModel::parse("deterministic:1").to_json() ==
          DelayModel::deterministic(1).to_json());
    CHECK(DelayModel::parse("lognormal:1,1.3").to_json() ==
          DelayModel::log_normal(1.0, 1.3).to_json());
    CHECK(DelayModel::parse("lognormal:1,1.3,trunc").to_json() ==
          DelayModel::log_normal_truncated(1.0, 1.3).to_json());
    CHECK(DelayModel::parse("lecam:0.1611,0.5,100").to_json() ==
          DelayModel::lecam_perturbed(0.1611, 0.5, 100).to_json());
    CHECK_THROWS_AS(DelayModel::parse("nosuch:1"), std::invalid_argument);
}

TEST_CASE("empirical delays load from a one-column CSV") {
    const char* path = "test_delays.csv";
    {
        std::ofstream out(path);
        out << "delay\n0.5\n1.5\n\n2.5\n";
    }
    auto samples = DelayModel::load_delay_csv(path);
    REQUIRE(samples.size() == 3);
    auto m = DelayModel::empirical(samples);
    CHECK(m.moments().mean == doctest::Approx(1.5).epsilon(1e-15));
    std::remove(path);
}

TEST_CASE("constructor validation rejects bad parameters") {
    CHECK_THROWS_AS(DelayModel::uniform(1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::uniform(-0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::deterministic(0.0), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::log_normal(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::log_normal(1.0, 1.3, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::lecam_perturbed(1.5, 0.5, 100), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::lecam_perturbed(0.2, 0.6, 100), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::lecam_perturbed(0.2, 0.5, 0), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::empirical({}), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::empirical({-1.0, 0.5}), std::invalid_argument);
}
