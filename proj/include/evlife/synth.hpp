#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "evlife/plane_fit.hpp"
#include "evlife/types.hpp"

namespace evlife {

// Moving-stripe scene: vertical stripes sweeping along +x at a constant
// velocity, one ideal event per pixel crossing.
struct StripeScene {
    SensorGeometry geometry;
    std::vector<double> stripe_positions;  // initial columns, pixels
    double velocity = 0.0;                 // pixels/second, nonzero
    double duration = 0.0;                 // seconds
    Polarity polarity = Polarity::positive;
};

struct NoiseSpec {
    double isolated_rate = 0.0;    // spurious events per second per pixel
    double timestamp_sigma = 0.0;  // Gaussian timestamp perturbation, seconds
    double scatter_fraction = 0.0; // fraction of window pixels perturbed (scattered mode)
    uint64_t seed = 0;
};

struct StripeEvents {
    EventStream stream;
    std::vector<double> lifetime;  // ground truth per event, 1/|velocity|
};

// Events sorted by timestamp; crossing times restricted to [0, duration).
StripeEvents gen_stripes(const StripeScene& scene);

struct NoisyStream {
    EventStream stream;
    std::vector<uint8_t> is_noise;  // aligned with stream.events
};

// Adds Poisson-sampled spurious events uniformly over pixels, the
// stream's time span, and polarity. Deterministic given spec.seed.
NoisyStream inject_isolated_noise(const EventStream& stream, const NoiseSpec& spec);

struct JitteredStream {
    EventStream stream;
    std::vector<size_t> source_index;  // output position -> input position
};

// Perturbs every timestamp with N(0, sigma), clips at 0 and re-sorts.
JitteredStream jitter_timestamps(const EventStream& stream, double sigma, uint64_t seed);

enum class PerturbMode { global_gaussian, scattered };

struct PlanarWindow {
    SaeWindow window;
    PlaneNormal true_normal;
    std::vector<uint8_t> truth_inlier;  // n*n; ground-truth inlier labels
    std::vector<uint8_t> perturbed;     // n*n; cells that received noise
};

// n x n window whose timestamps lie on n.(x,y,t) = 1 in window-local
// coordinates, then perturbed globally (every cell) or on a
// round(scatter_fraction * n^2) subset. In scattered mode a cell is a
// ground-truth outlier iff its perturbed value sits farther than
// inlier_eps from the true plane; in global mode every cell stays a
// true inlier.
PlanarWindow gen_planar_window(int n, const PlaneNormal& normal, const NoiseSpec& spec,
                               PerturbMode mode, double inlier_eps = 0.01);

// Ground-truth CSV: index,t,x,y,p,lifetime,is_noise (lifetime is nan on
// noise rows). Row order matches the event stream it describes.
void write_truth_csv(std::ostream& out, const EventStream& stream,
                     const std::vector<double>& lifetime,
                     const std::vector<uint8_t>& is_noise);

}  // namespace evlife
