#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "evlife/sae.hpp"
#include "oracles.hpp"

using namespace evlife;

TEST_CASE("update stores the timestamp on the matching polarity surface") {
    Sae sae(SensorGeometry{16, 16});
    sae.update(Event{0.5, 3, 4, Polarity::positive});
    CHECK(sae.at(Polarity::positive, 3, 4) == 0.5);
    CHECK_FALSE(has_fired(sae.at(Polarity::negative, 3, 4)));

    sae.update(Event{0.7, 3, 4, Polarity::positive});
    CHECK(sae.at(Polarity::positive, 3, 4) == 0.7);

    sae.update(Event{0.9, 3, 4, Polarity::negative});
    CHECK(sae.at(Polarity::positive, 3, 4) == 0.7);
    CHECK(sae.at(Polarity::negative, 3, 4) == 0.9);
}

TEST_CASE("update rejects out-of-bounds pixels and time reversal") {
    Sae sae(SensorGeometry{4, 4});
    CHECK_THROWS_AS(sae.update(Event{0.1, 4, 0, Polarity::positive}), std::out_of_range);
    sae.update(Event{0.5, 1, 1, Polarity::positive});
    CHECK_THROWS_AS(sae.update(Event{0.4, 1, 1, Polarity::positive}), std::invalid_argument);
}

TEST_CASE("window clamps at the sensor border") {
    Sae sae(SensorGeometry{16, 16});
    const Event e{1.0, 0, 0, Polarity::positive};
    sae.update(e);
    const SaeWindow w = sae.window(e, 5);

    // center (0,0): local cells map to sensor x,y in -2..2, so 16 of 25
    // cells fall outside the sensor
    int out_of_bounds = 0;
    for (int ly = 0; ly < 5; ++ly)
        for (int lx = 0; lx < 5; ++lx)
            if (lx < 2 || ly < 2) ++out_of_bounds;
    CHECK(out_of_bounds == 16);

    int never = 0;
    for (int ly = 0; ly < 5; ++ly)
        for (int lx = 0; lx < 5; ++lx)
            if (!w.fired(lx, ly)) ++never;
    CHECK(never == 24);  // out-of-bounds cells plus in-bounds pixels with no events
    CHECK(w.at(2, 2) == 1.0);
}

TEST_CASE("window center always equals the event timestamp") {
    Sae sae(SensorGeometry{16, 16});
    std::mt19937_64 rng(5);
    const EventStream s = oracles::random_stream(rng, sae.geometry(), 100);
    for (const Event& e : s.events) {
        sae.update(e);
        const SaeWindow w = sae.window(e, 5);
        CHECK(w.at(w.half(), w.half()) == e.t);
        CHECK(w.center_time == e.t);
    }
}

TEST_CASE("n=1 window is the single center cell") {
    Sae sae(SensorGeometry{8, 8});
    const Event e{0.25, 4, 4, Polarity::negative};
    sae.update(e);
    const SaeWindow w = sae.window(e, 1);
    REQUIRE(w.t.size() == 1);
    CHECK(w.t[0] == 0.25);
}

TEST_CASE("window requires odd n") {
    Sae sae(SensorGeometry{8, 8});
    const Event e{0.25, 4, 4, Polarity::negative};
    sae.update(e);
    CHECK_THROWS_AS(sae.window(e, 4), std::invalid_argument);
}

TEST_CASE("replay matches the per-pixel max-timestamp oracle") {
    const SensorGeometry g{24, 16};
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        const EventStream s = oracles::random_stream(rng, g, 500);
        Sae sae(g);
        oracles::SaeOracle oracle(g);
        for (size_t i = 0; i < s.events.size(); ++i) {
            sae.update(s.events[i]);
            oracle.apply(s.events[i]);
            if ((i + 1) % 100 != 0) continue;
            for (int p = 0; p < 2; ++p)
                for (int y = 0; y < g.height; ++y)
                    for (int x = 0; x < g.width; ++x)
                        CHECK(sae.at(static_cast<Polarity>(p), x, y) ==
                              oracle.surface[p][static_cast<size_t>(y) * g.width + x]);
        }
    }
}
