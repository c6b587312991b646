#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "evlife/types.hpp"

namespace evlife {

enum class FilterMode : uint8_t { causal_past, symmetric_delayed };

const char* to_string(FilterMode m);
std::optional<FilterMode> filter_mode_from_string(const std::string& s);

struct FilterParams {
    double tau_min = 0.01;  // support window, seconds
    FilterMode mode = FilterMode::symmetric_delayed;
    int neighborhood_radius = 1;  // 8-connected ring at radius 1
};

// Event buffer noise filter. An event survives iff a same-polarity event
// exists at another pixel of its neighborhood within the support window:
// [t - tau_min, t] restricted to already-seen events in causal-past
// mode, [t - tau_min, t + tau_min] in symmetric-delayed mode. The
// event's own pixel never counts as support. Output is a subsequence of
// the input with original timestamps and order.
std::vector<size_t> filter_indices(const EventStream& stream, const FilterParams& params);
EventStream filter(const EventStream& stream, const FilterParams& params);

}  // namespace evlife
