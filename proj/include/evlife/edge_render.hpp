#pragma once

#include <span>
#include <vector>

#include "evlife/lifetime.hpp"
#include "evlife/types.hpp"

namespace evlife {

struct RenderQuery {
    double at_time = 0.0;
    double tau_clamp = 0.5;  // bounds trails from near-flat fits, seconds
};

// Pixel on iff some ok-status event at it is still alive at the query
// time: t <= at_time < t + min(tau, tau_clamp).
EdgeImage render_lifetime(std::span<const LifetimedEvent> events, const RenderQuery& q,
                          SensorGeometry geometry);

// Fixed-time baseline: pixel on iff an event falls in (at_time - window, at_time].
EdgeImage accumulate_time(const EventStream& stream, double at_time, double window);

// Fixed-count baseline: pixel on iff it hosts one of the last `count`
// events at or before at_time.
EdgeImage accumulate_count(const EventStream& stream, double at_time, int count);

// Per-pixel mean lifetime over ok events, scaled linearly to 0..255 over
// [0, tau_max]; pixels without ok events stay 0.
std::vector<uint8_t> accumulate_lifetime_gray(std::span<const LifetimedEvent> events,
                                              SensorGeometry geometry, double tau_max);

}  // namespace evlife
