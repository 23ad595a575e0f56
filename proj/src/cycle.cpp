#include "aoi/cycle.hpp"

#include <cmath>
#include <stdexcept>

namespace aoi {

Trajectory::Trajectory(std::int64_t record_every) : record_every_(record_every) {
    if (record_every < 0) throw std::invalid_argument("record_every must be >= 0");
}

void Trajectory::append_cycle(double delay, double wait, double gamma, double debt) {
    if (!(delay >= 0.0) || !(wait >= 0.0)) {
        throw std::invalid_argument("append_cycle: delay and wait must be >= 0");
    }
    double sample_time = next_sample_time_;
    double receive_time = sample_time + delay;
    double length = delay + wait;
    double area = cycle_area(prev_length_, delay, wait);
    area_sum_.add(area);
    length_sum_.add(length);
    ++count_;
    if (record_every_ > 0 && count_ % record_every_ == 0) {
        CycleRecord rec;
        rec.k = count_;
        rec.delay = delay;
        rec.wait = wait;
        rec.length = length;
        rec.reward = 0.5 * length * length;
        rec.area = area;
        rec.sample_time = sample_time;
        rec.receive_time = receive_time;
        rec.gamma = gamma;
        rec.debt = debt;
        rec.cum_ratio = length_sum_.value() > 0.0 ? area_sum_.value() / length_sum_.value() : kNaN;
        records_.push_back(rec);
    }
    next_sample_time_ = receive_time + wait;
    prev_length_ = length;
}

double Trajectory::aoi_ratio() const {
    if (count_ == 0) throw std::invalid_argument("no cycles");
    return area_sum_.value() / length_sum_.value();
}

double Trajectory::time_average_aoi(double t) const {
    if (count_ == 0) throw std::invalid_argument("no cycles");
    if (record_every_ != 1) {
        throw std::logic_error("time_average_aoi requires an unthinned trajectory");
    }
    double horizon = end_time();
    if (!(t > 0.0)) throw std::invalid_argument("time_average_aoi: t must be > 0");
    if (t > horizon * (1.0 + 1e-12)) {
        throw std::invalid_argument("time_average_aoi: t beyond trajectory horizon");
    }
    t = std::min(t, horizon);

    // A(s) = s - S_{i(s)} between receptions; the virtual packet at t = 0
    // acts as reception 0 from sample time 0.
    KahanSum integral;
    double prev_recv = 0.0;
    double prev_sample = 0.0;
    for (const auto& rec : records_) {
        if (t <= prev_recv) break;
        double hi = std::min(rec.receive_time, t);
        if (hi > prev_recv) {
            double a0 = prev_recv - prev_sample;
            double a1 = hi - prev_sample;
            integral.add(0.5 * (a1 * a1 - a0 * a0));
        }
        prev_recv = rec.receive_time;
        prev_sample = rec.sample_time;
    }
    if (t > prev_recv) {
        double a0 = prev_recv - prev_sample;
        double a1 = t - prev_sample;
        integral.add(0.5 * (a1 * a1 - a0 * a0));
    }
    return integral.value() / t;
}

double Trajectory::theta(double gamma_star, double mean_delay) const {
    if (count_ == 0) throw std::invalid_argument("no cycles");
    auto k = static_cast<double>(count_);
    return area_sum_.value() / k - (gamma_star + mean_delay) * length_sum_.value() / k;
}

}  // namespace aoi
