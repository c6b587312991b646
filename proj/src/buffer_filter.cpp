#include "evlife/buffer_filter.hpp"

#include <algorithm>
#include <stdexcept>

#include "evlife/sae.hpp"

namespace evlife {

const char* to_string(FilterMode m) {
    return m == FilterMode::causal_past ? "causal" : "symmetric";
}

std::optional<FilterMode> filter_mode_from_string(const std::string& s) {
    if (s == "causal" || s == "causal-past") return FilterMode::causal_past;
    if (s == "symmetric" || s == "symmetric-delayed") return FilterMode::symmetric_delayed;
    return std::nullopt;
}

namespace {

std::vector<size_t> filter_causal(const EventStream& stream, const FilterParams& params) {
    Sae sae(stream.geometry);
    const int r = params.neighborhood_radius;
    std::vector<size_t> kept;
    for (size_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i];
        bool supported = false;
        for (int dy = -r; dy <= r && !supported; ++dy) {
            for (int dx = -r; dx <= r; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const int x = e.x + dx, y = e.y + dy;
                if (!stream.geometry.contains(x, y)) continue;
                const double ts = sae.at(e.p, x, y);
                if (has_fired(ts) && ts >= e.t - params.tau_min) {
                    supported = true;
                    break;
                }
            }
        }
        if (supported) kept.push_back(i);
        sae.update(e);
    }
    return kept;
}

std::vector<size_t> filter_symmetric(const EventStream& stream, const FilterParams& params) {
    // per-pixel per-polarity timestamp lists; sorted by construction
    const size_t npix = static_cast<size_t>(stream.geometry.pixel_count());
    std::vector<std::vector<double>> times[2];
    times[0].resize(npix);
    times[1].resize(npix);
    for (const Event& e : stream.events)
        times[static_cast<int>(e.p)][static_cast<size_t>(e.y) * stream.geometry.width + e.x]
            .push_back(e.t);

    const int r = params.neighborhood_radius;
    std::vector<size_t> kept;
    for (size_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i];
        const double lo = e.t - params.tau_min;
        const double hi = e.t + params.tau_min;
        bool supported = false;
        for (int dy = -r; dy <= r && !supported; ++dy) {
            for (int dx = -r; dx <= r; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const int x = e.x + dx, y = e.y + dy;
                if (!stream.geometry.contains(x, y)) continue;
                const auto& list =
                    times[static_cast<int>(e.p)][static_cast<size_t>(y) * stream.geometry.width + x];
                auto it = std::lower_bound(list.begin(), list.end(), lo);
                if (it != list.end() && *it <= hi) {
                    supported = true;
                    break;
                }
            }
        }
        if (supported) kept.push_back(i);
    }
    return kept;
}

}  // namespace

std::vector<size_t> filter_indices(const EventStream& stream, const FilterParams& params) {
    if (params.tau_min <= 0.0)
        throw std::invalid_argument("filter: tau_min must be positive");
    if (params.neighborhood_radius < 1)
        throw std::invalid_argument("filter: neighborhood radius must be >= 1");
    return params.mode == FilterMode::causal_past ? filter_causal(stream, params)
                                                  : filter_symmetric(stream, params);
}

EventStream filter(const EventStream& stream, const FilterParams& params) {
    EventStream out;
    out.geometry = stream.geometry;
    for (size_t i : filter_indices(stream, params)) out.events.push_back(stream.events[i]);
    return out;
}

}  // namespace evlife
