#include "evlife/edge_render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evlife {

EdgeImage render_lifetime(std::span<const LifetimedEvent> events, const RenderQuery& q,
                          SensorGeometry geometry) {
    if (q.at_time < 0.0) throw std::invalid_argument("render_lifetime: at_time must be >= 0");
    EdgeImage image(geometry);
    for (const LifetimedEvent& le : events) {
        if (le.event.t > q.at_time) break;  // events are timestamp-ordered
        if (le.status != FitStatus::ok) continue;
        const double life = std::min(le.tau, q.tau_clamp);
        if (q.at_time < le.event.t + life) image.at(le.event.x, le.event.y) = 1;
    }
    return image;
}

EdgeImage accumulate_time(const EventStream& stream, double at_time, double window) {
    if (window <= 0.0) throw std::invalid_argument("accumulate_time: window must be positive");
    EdgeImage image(stream.geometry);
    for (const Event& e : stream.events) {
        if (e.t > at_time) break;
        if (e.t > at_time - window) image.at(e.x, e.y) = 1;
    }
    return image;
}

EdgeImage accumulate_count(const EventStream& stream, double at_time, int count) {
    if (count < 1) throw std::invalid_argument("accumulate_count: count must be >= 1");
    EdgeImage image(stream.geometry);
    auto end = std::upper_bound(stream.events.begin(), stream.events.end(), at_time,
                                [](double t, const Event& e) { return t < e.t; });
    auto begin = end - std::min<std::ptrdiff_t>(count, end - stream.events.begin());
    for (auto it = begin; it != end; ++it) image.at(it->x, it->y) = 1;
    return image;
}

std::vector<uint8_t> accumulate_lifetime_gray(std::span<const LifetimedEvent> events,
                                              SensorGeometry geometry, double tau_max) {
    if (tau_max <= 0.0)
        throw std::invalid_argument("accumulate_lifetime_gray: tau_max must be positive");
    const size_t npix = static_cast<size_t>(geometry.pixel_count());
    std::vector<double> sum(npix, 0.0);
    std::vector<long> cnt(npix, 0);
    for (const LifetimedEvent& le : events) {
        if (le.status != FitStatus::ok) continue;
        const size_t i = static_cast<size_t>(le.event.y) * geometry.width + le.event.x;
        sum[i] += le.tau;
        ++cnt[i];
    }
    std::vector<uint8_t> out(npix, 0);
    for (size_t i = 0; i < npix; ++i) {
        if (!cnt[i]) continue;
        const double mean = sum[i] / cnt[i];
        const double scaled = std::clamp(mean / tau_max, 0.0, 1.0) * 255.0;
        out[i] = static_cast<uint8_t>(std::lround(scaled));
    }
    return out;
}

}  // namespace evlife
