#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "evlife/buffer_filter.hpp"
#include "evlife/synth.hpp"
#include "oracles.hpp"

using namespace evlife;

namespace {

EventStream make_stream(std::initializer_list<Event> events) {
    EventStream s;
    s.geometry = {16, 16};
    s.events = events;
    return s;
}

FilterParams params_of(FilterMode mode, double tau_min = 0.01) {
    FilterParams p;
    p.mode = mode;
    p.tau_min = tau_min;
    return p;
}

}  // namespace

TEST_CASE("a lone event is removed in both modes") {
    const EventStream s = make_stream({Event{0.5, 8, 8, Polarity::positive}});
    CHECK(filter(s, params_of(FilterMode::causal_past)).events.empty());
    CHECK(filter(s, params_of(FilterMode::symmetric_delayed)).events.empty());
}

TEST_CASE("adjacent support within tau_min/2") {
    const EventStream s = make_stream({Event{0.100, 8, 8, Polarity::positive},
                                       Event{0.105, 9, 8, Polarity::positive}});
    const EventStream causal = filter(s, params_of(FilterMode::causal_past));
    REQUIRE(causal.events.size() == 1);
    CHECK(causal.events[0] == s.events[1]);  // only the later event sees past support

    const EventStream sym = filter(s, params_of(FilterMode::symmetric_delayed));
    CHECK(sym.events.size() == 2);
}

TEST_CASE("an event's own pixel never counts as support") {
    const EventStream s = make_stream({Event{0.100, 8, 8, Polarity::positive},
                                       Event{0.101, 8, 8, Polarity::positive}});
    CHECK(filter(s, params_of(FilterMode::causal_past)).events.empty());
    CHECK(filter(s, params_of(FilterMode::symmetric_delayed)).events.empty());
}

TEST_CASE("support is polarity-separated") {
    const EventStream s = make_stream({Event{0.100, 8, 8, Polarity::positive},
                                       Event{0.101, 9, 8, Polarity::negative}});
    CHECK(filter(s, params_of(FilterMode::symmetric_delayed)).events.empty());
}

TEST_CASE("stale neighbors beyond tau_min give no support") {
    const EventStream s = make_stream({Event{0.100, 8, 8, Polarity::positive},
                                       Event{0.200, 9, 8, Polarity::positive}});
    CHECK(filter(s, params_of(FilterMode::causal_past)).events.empty());
    CHECK(filter(s, params_of(FilterMode::symmetric_delayed)).events.empty());
}

TEST_CASE("corner events do not read outside the sensor") {
    const EventStream s = make_stream({Event{0.100, 0, 0, Polarity::positive},
                                       Event{0.101, 1, 0, Polarity::positive}});
    CHECK(filter(s, params_of(FilterMode::symmetric_delayed)).events.size() == 2);
}

TEST_CASE("output is a subsequence of the input") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 20; ++rep) {
        const EventStream s = oracles::random_stream(rng, SensorGeometry{12, 12}, 300, 2e-3);
        for (FilterMode mode : {FilterMode::causal_past, FilterMode::symmetric_delayed}) {
            const auto kept = filter_indices(s, params_of(mode));
            for (size_t k = 1; k < kept.size(); ++k) CHECK(kept[k - 1] < kept[k]);
            const EventStream out = filter(s, params_of(mode));
            for (size_t k = 0; k < kept.size(); ++k) CHECK(out.events[k] == s.events[kept[k]]);
        }
    }
}

TEST_CASE("enlarging tau_min never drops a kept event") {
    std::mt19937_64 rng(29);
    for (int rep = 0; rep < 20; ++rep) {
        const EventStream s = oracles::random_stream(rng, SensorGeometry{12, 12}, 300, 2e-3);
        for (FilterMode mode : {FilterMode::causal_past, FilterMode::symmetric_delayed}) {
            const auto small = filter_indices(s, params_of(mode, 0.002));
            const auto large = filter_indices(s, params_of(mode, 0.02));
            CHECK(std::includes(large.begin(), large.end(), small.begin(), small.end()));
        }
    }
}

TEST_CASE("huge tau_min keeps everything but globally isolated pixels") {
    EventStream s = make_stream({Event{0.0, 2, 2, Polarity::positive},
                                 Event{5.0, 3, 2, Polarity::positive},
                                 Event{9.0, 12, 12, Polarity::positive}});
    const EventStream out = filter(s, params_of(FilterMode::symmetric_delayed, 1e6));
    REQUIRE(out.events.size() == 2);
    CHECK(out.events[0].x == 2);
    CHECK(out.events[1].x == 3);
}

TEST_CASE("filter validates its parameters") {
    const EventStream s = make_stream({});
    CHECK_THROWS_AS(filter(s, params_of(FilterMode::causal_past, 0.0)), std::invalid_argument);
    FilterParams p;
    p.neighborhood_radius = 0;
    CHECK_THROWS_AS(filter(s, p), std::invalid_argument);
}

TEST_CASE("stripes plus isolated noise: most noise removed, edges kept") {
    StripeScene scene;
    scene.geometry = {64, 48};
    scene.stripe_positions = {0.0, -40.0};
    scene.velocity = 100.0;
    scene.duration = 0.8;
    const StripeEvents stripes = gen_stripes(scene);

    NoiseSpec spec;
    spec.isolated_rate = 0.1;
    spec.seed = 1;
    const NoisyStream noisy = inject_isolated_noise(stripes.stream, spec);

    const auto kept = filter_indices(noisy.stream, params_of(FilterMode::symmetric_delayed));
    std::vector<uint8_t> kept_mask(noisy.stream.events.size(), 0);
    for (size_t i : kept) kept_mask[i] = 1;

    long noise_total = 0, noise_kept = 0, true_total = 0, true_kept = 0;
    for (size_t i = 0; i < noisy.stream.events.size(); ++i) {
        if (noisy.is_noise[i]) {
            ++noise_total;
            noise_kept += kept_mask[i];
        } else {
            ++true_total;
            true_kept += kept_mask[i];
        }
    }
    REQUIRE(noise_total > 50);
    const double removal = 1.0 - static_cast<double>(noise_kept) / noise_total;
    const double retention = static_cast<double>(true_kept) / true_total;
    CHECK(removal >= 0.90);
    CHECK(retention >= 0.95);
}
