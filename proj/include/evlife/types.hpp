#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace evlife {

enum class Polarity : uint8_t { negative = 0, positive = 1 };

struct SensorGeometry {
    int width = 0;
    int height = 0;

    bool contains(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    long pixel_count() const { return static_cast<long>(width) * height; }

    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

// One asynchronous brightness-change record.
struct Event {
    double t = 0.0;   // seconds
    int x = 0;        // column
    int y = 0;        // row
    Polarity p = Polarity::positive;

    friend bool operator==(const Event&, const Event&) = default;
};

struct EventStream {
    SensorGeometry geometry;
    std::vector<Event> events;

    friend bool operator==(const EventStream&, const EventStream&) = default;
};

// Throws std::invalid_argument if the stream violates its invariants
// (bounds, finite non-negative timestamps, non-decreasing order).
void validate(const EventStream& stream);

// Binary pixel mask used for rendering and CDM evaluation.
struct EdgeImage {
    SensorGeometry geometry;
    std::vector<uint8_t> mask;  // row-major, 0 or 1

    EdgeImage() = default;
    explicit EdgeImage(SensorGeometry g)
        : geometry(g), mask(static_cast<size_t>(g.pixel_count()), 0) {
        if (g.width < 1 || g.height < 1)
            throw std::invalid_argument("EdgeImage: geometry must be at least 1x1");
    }

    uint8_t& at(int x, int y) { return mask[static_cast<size_t>(y) * geometry.width + x]; }
    uint8_t at(int x, int y) const { return mask[static_cast<size_t>(y) * geometry.width + x]; }

    int on_count() const {
        int n = 0;
        for (uint8_t v : mask) n += (v != 0);
        return n;
    }

    friend bool operator==(const EdgeImage&, const EdgeImage&) = default;
};

// Sentinel for SAE cells that never received an event.
inline constexpr double kNeverFired = -std::numeric_limits<double>::infinity();

inline bool has_fired(double t) { return t != kNeverFired; }

}  // namespace evlife
