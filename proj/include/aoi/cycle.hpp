#pragma once

#include <cstdint>
#include <vector>

#include "aoi/numerics.hpp"

namespace aoi {

/// One sampling cycle. Timestamps follow the wait-for-ack timing model:
/// R_k = S_k + D_k and S_{k+1} = R_k + W_k. gamma/debt carry the online
/// sampler's per-cycle state and stay NaN for the other policies.
struct CycleRecord {
    std::int64_t k = 0;
    double delay = 0.0;
    double wait = 0.0;
    double length = 0.0;        // delay + wait
    double reward = 0.0;        // (1/2) length^2
    double area = 0.0;          // age integral over the cycle
    double sample_time = 0.0;   // S_k
    double receive_time = 0.0;  // R_k
    double gamma = kNaN;
    double debt = kNaN;
    double cum_ratio = kNaN;  // running sum(area) / sum(length)
};

/// Age accumulated over one cycle: the parallelogram carried over from the
/// previous cycle plus the triangle of the current one.
inline double cycle_area(double prev_length, double delay, double wait) {
    double len = delay + wait;
    return prev_length * delay + 0.5 * len * len;
}

/// An ordered run of cycles starting from S_1 = 0 with a virtual packet
/// delivered at t = 0 (L_0 = 0), so the age starts at zero and the cycle
/// areas tile the sample-path integral exactly. Running sums use
/// compensated summation; record storage may be thinned independently.
class Trajectory {
public:
    /// record_every: 1 stores every cycle, n > 1 every n-th, 0 none.
    explicit Trajectory(std::int64_t record_every = 1);

    void append_cycle(double delay, double wait, double gamma = kNaN, double debt = kNaN);

    std::int64_t cycle_count() const { return count_; }
    double total_area() const { return area_sum_.value(); }
    double total_length() const { return length_sum_.value(); }
    /// S_{K+1}: the time at which cycle K ends and K+1 would start.
    double end_time() const { return length_sum_.value(); }
    double prev_length() const { return prev_length_; }

    /// sum(X_k) / sum(L_k), the per-path form of the cumulative-age ratio.
    double aoi_ratio() const;

    /// (1/t) * Int_0^t A(s) ds with the sample path reconstructed from
    /// timestamps and integrated piecewise exactly (no quadrature). This is
    /// an accounting route independent of the per-cycle areas. Requires an
    /// unthinned trajectory and 0 < t <= S_{K+1}.
    double time_average_aoi(double t) const;

    /// (1/K) sum(X_k) - (gamma_star + mean_delay) * (1/K) sum(L_k).
    double theta(double gamma_star, double mean_delay) const;

    const std::vector<CycleRecord>& records() const { return records_; }
    std::int64_t record_every() const { return record_every_; }

private:
    std::int64_t record_every_;
    std::int64_t count_ = 0;
    double prev_length_ = 0.0;
    double next_sample_time_ = 0.0;  // naive recursion, keeps R_k = S_k + D_k exact
    KahanSum area_sum_;
    KahanSum length_sum_;
    std::vector<CycleRecord> records_;
};

}  // namespace aoi
