#include "evlife/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "evlife/events_io.hpp"

namespace evlife {

StripeEvents gen_stripes(const StripeScene& scene) {
    if (scene.geometry.width < 1 || scene.geometry.height < 1)
        throw std::invalid_argument("gen_stripes: geometry must be at least 1x1");
    if (scene.velocity == 0.0) throw std::invalid_argument("gen_stripes: velocity must be nonzero");
    if (scene.duration <= 0.0) throw std::invalid_argument("gen_stripes: duration must be positive");

    std::vector<Event> events;
    for (double pos0 : scene.stripe_positions) {
        for (int c = 0; c < scene.geometry.width; ++c) {
            const double tc = (c - pos0) / scene.velocity;
            if (tc < 0.0 || tc >= scene.duration) continue;
            for (int y = 0; y < scene.geometry.height; ++y)
                events.push_back(Event{tc, c, y, scene.polarity});
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });

    StripeEvents out;
    out.stream.geometry = scene.geometry;
    out.stream.events = std::move(events);
    out.lifetime.assign(out.stream.events.size(), 1.0 / std::abs(scene.velocity));
    return out;
}

namespace {

bool event_less(const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return static_cast<int>(a.p) < static_cast<int>(b.p);
}

}  // namespace

NoisyStream inject_isolated_noise(const EventStream& stream, const NoiseSpec& spec) {
    if (spec.isolated_rate < 0.0)
        throw std::invalid_argument("inject_isolated_noise: rate must be >= 0");

    NoisyStream out;
    out.stream.geometry = stream.geometry;
    if (spec.isolated_rate == 0.0 || stream.events.size() < 2) {
        out.stream.events = stream.events;
        out.is_noise.assign(stream.events.size(), 0);
        return out;
    }

    const double t0 = stream.events.front().t;
    const double t1 = stream.events.back().t;
    const double span = t1 - t0;
    const double mean = spec.isolated_rate * stream.geometry.pixel_count() * span;

    std::mt19937_64 rng(spec.seed);
    std::poisson_distribution<long> count_dist(mean);
    const long count = span > 0.0 ? count_dist(rng) : 0;

    std::uniform_real_distribution<double> time_dist(t0, t1);
    std::uniform_int_distribution<int> x_dist(0, stream.geometry.width - 1);
    std::uniform_int_distribution<int> y_dist(0, stream.geometry.height - 1);
    std::uniform_int_distribution<int> p_dist(0, 1);

    std::vector<Event> noise(static_cast<size_t>(count));
    for (Event& e : noise) {
        e.t = std::max(0.0, time_dist(rng));
        e.x = x_dist(rng);
        e.y = y_dist(rng);
        e.p = p_dist(rng) ? Polarity::positive : Polarity::negative;
    }
    std::sort(noise.begin(), noise.end(), event_less);

    // merge, original events first on timestamp ties
    out.stream.events.reserve(stream.events.size() + noise.size());
    out.is_noise.reserve(stream.events.size() + noise.size());
    size_t i = 0, j = 0;
    while (i < stream.events.size() || j < noise.size()) {
        const bool take_orig =
            j == noise.size() ||
            (i < stream.events.size() && stream.events[i].t <= noise[j].t);
        if (take_orig) {
            out.stream.events.push_back(stream.events[i++]);
            out.is_noise.push_back(0);
        } else {
            out.stream.events.push_back(noise[j++]);
            out.is_noise.push_back(1);
        }
    }
    return out;
}

JitteredStream jitter_timestamps(const EventStream& stream, double sigma, uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("jitter_timestamps: sigma must be >= 0");

    JitteredStream out;
    out.stream.geometry = stream.geometry;
    out.source_index.resize(stream.events.size());
    std::iota(out.source_index.begin(), out.source_index.end(), size_t{0});
    out.stream.events = stream.events;
    if (sigma == 0.0 || stream.events.empty()) return out;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, sigma);
    for (Event& e : out.stream.events) e.t = std::max(0.0, e.t + jitter(rng));

    std::sort(out.source_index.begin(), out.source_index.end(), [&](size_t a, size_t b) {
        if (out.stream.events[a].t != out.stream.events[b].t)
            return out.stream.events[a].t < out.stream.events[b].t;
        return a < b;
    });
    std::vector<Event> sorted(out.stream.events.size());
    for (size_t k = 0; k < out.source_index.size(); ++k)
        sorted[k] = out.stream.events[out.source_index[k]];
    out.stream.events = std::move(sorted);
    return out;
}

PlanarWindow gen_planar_window(int n, const PlaneNormal& normal, const NoiseSpec& spec,
                               PerturbMode mode, double inlier_eps) {
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("gen_planar_window: n must be odd, >= 3");
    if (normal.n3 == 0.0)
        throw std::invalid_argument("gen_planar_window: n3 = 0, plane is not t = f(x,y)");
    if (!std::isfinite(normal.n1) || !std::isfinite(normal.n2) || !std::isfinite(normal.n3))
        throw std::invalid_argument("gen_planar_window: normal must be finite");
    if (spec.timestamp_sigma < 0.0)
        throw std::invalid_argument("gen_planar_window: timestamp_sigma must be >= 0");
    if (spec.scatter_fraction < 0.0 || spec.scatter_fraction > 1.0)
        throw std::invalid_argument("gen_planar_window: scatter_fraction must be in [0,1]");

    const size_t cells = static_cast<size_t>(n) * n;
    const int h = n / 2;

    PlanarWindow out;
    out.true_normal = normal;
    out.window.n = n;
    out.window.center_x = h;
    out.window.center_y = h;
    out.window.t.resize(cells);
    out.truth_inlier.assign(cells, 1);
    out.perturbed.assign(cells, 0);

    for (int ly = 0; ly < n; ++ly)
        for (int lx = 0; lx < n; ++lx)
            out.window.at(lx, ly) = (1.0 - normal.n1 * lx - normal.n2 * ly) / normal.n3;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.timestamp_sigma);

    if (mode == PerturbMode::global_gaussian) {
        if (spec.timestamp_sigma > 0.0) {
            for (size_t i = 0; i < cells; ++i) {
                out.window.t[i] += noise(rng);
                out.perturbed[i] = 1;
            }
        }
        // every cell is a genuine member of the true plane
    } else {
        const long k = static_cast<long>(std::floor(spec.scatter_fraction * cells + 0.5));
        std::vector<size_t> order(cells);
        std::iota(order.begin(), order.end(), size_t{0});
        for (size_t i = 0; i < static_cast<size_t>(k) && i + 1 < cells; ++i) {
            std::uniform_int_distribution<size_t> pick(i, cells - 1);
            std::swap(order[i], order[pick(rng)]);
        }
        for (long i = 0; i < k; ++i) {
            const size_t cell = order[static_cast<size_t>(i)];
            out.perturbed[cell] = 1;
            if (spec.timestamp_sigma > 0.0) out.window.t[cell] += noise(rng);
            const int lx = static_cast<int>(cell % n);
            const int ly = static_cast<int>(cell / n);
            const double d =
                intra_pixel_distance(normal, lx, ly, out.window.t[cell], 0.0);
            out.truth_inlier[cell] = d <= inlier_eps ? 1 : 0;
        }
    }

    out.window.center_time = out.window.at(h, h);
    return out;
}

void write_truth_csv(std::ostream& out, const EventStream& stream,
                     const std::vector<double>& lifetime,
                     const std::vector<uint8_t>& is_noise) {
    if (lifetime.size() != stream.events.size() || is_noise.size() != stream.events.size())
        throw std::invalid_argument("write_truth_csv: column lengths must match the stream");
    out << "index,t,x,y,p,lifetime,is_noise\n";
    for (size_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i];
        out << i << ',' << format_double(e.t) << ',' << e.x << ',' << e.y << ','
            << (e.p == Polarity::positive ? 1 : 0) << ',' << format_double(lifetime[i]) << ','
            << static_cast<int>(is_noise[i]) << '\n';
    }
}

}  // namespace evlife
