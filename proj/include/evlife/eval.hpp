#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "evlife/lifetime.hpp"
#include "evlife/synth.hpp"
#include "evlife/types.hpp"

namespace evlife {

struct CdmParams {
    int eta = 3;  // chessboard matching radius, pixels
};

struct CdmReport {
    double score = 0.0;  // 0..100
    int matched_pairs = 0;
    int unmatched_f = 0;
    int unmatched_g = 0;
    int union_size = 0;
};

// Closest Distance Metric between two edge maps: edge pixels of f and g
// are matched one-to-one over pairs with chessboard distance d <= eta.
// Cost is sum(d/eta) over matches plus 1 per unmatched edge pixel; the
// score is 100 * (1 - cost / |f union g|), clamped to [0, 100]. The
// matching minimizes the cost exactly (successive shortest augmenting
// paths) up to a per-side pixel budget, beyond which a closest-first
// greedy matching stands in.
CdmReport cdm(const EdgeImage& f, const EdgeImage& g, const CdmParams& params);

struct FMeasure {
    double recall = 0.0;
    double precision = 0.0;
    double f = 0.0;
};

// Binary inlier classification vs ground truth; f = 0 when undefined.
FMeasure f_measure(std::span<const uint8_t> predicted, std::span<const uint8_t> truth);

// Ground-truth lifetimes keyed by the exact event quadruple.
struct EventKey {
    double t = 0.0;
    int x = 0;
    int y = 0;
    Polarity p = Polarity::positive;
    friend bool operator==(const EventKey&, const EventKey&) = default;
};

struct EventKeyHash {
    size_t operator()(const EventKey& k) const;
};

struct TruthEntry {
    double lifetime = 0.0;  // nan for noise events
    bool is_noise = false;
};

using TruthMap = std::unordered_map<EventKey, TruthEntry, EventKeyHash>;

TruthMap read_truth_csv(std::istream& in);
TruthMap read_truth_csv_file(const std::string& path);

struct LifetimeStats {
    double mean_abs_error = 0.0;
    size_t scored = 0;                     // ok events with a finite truth lifetime
    double bin_width = 1e-3;               // seconds
    std::map<long, long> histogram;        // bin index -> count of estimated tau
};

// Mean absolute lifetime error over ok-status events plus a tau
// histogram. Events flagged as noise in the truth are skipped; a missing
// truth entry for a scored event throws.
LifetimeStats lifetime_stats(std::span<const LifetimedEvent> estimates, const TruthMap& truth,
                             double bin_width = 1e-3);

enum class SweepMode : uint8_t { global, scattered };

struct SweepParams {
    SweepMode mode = SweepMode::global;
    std::vector<double> grid;           // sigmas (global) or deltas (scattered)
    std::vector<double> deltas{0.0, 0.25};  // compared radii in global mode
    int repetitions = 1000;
    uint64_t seed = 0;
    int threads = 1;
    int window_n = 5;
    double inlier_eps = 0.01;
    int iterations = 100;
    int min_inliers = 3;
    // reference single-line plane: t ramps 0.1 s per pixel along (4,3)/5
    PlaneNormal reference_normal{-0.08, -0.06, 1.0};
    double scattered_sigma = 0.2;    // timestamp noise on perturbed cells, seconds
    double scatter_fraction = 0.2;   // fraction of window cells perturbed
    double error_cap = 1.0;          // bound on a single repetition's tau error, seconds
};

struct SweepRow {
    double sigma = 0.0;
    double delta = 0.0;
    double mean_f = 0.0;
    double mean_abs_tau_error = 0.0;
};

// Seeded window-fit experiment behind the noise-robustness analysis:
// repeatedly generates perturbed planar windows, fits them at each delta
// and averages F-measure and lifetime error. Windows and RANSAC draws
// are paired across deltas, and the aggregate is independent of the
// thread count.
std::vector<SweepRow> sweep_noise_robustness(const SweepParams& params);

void write_sweep_csv(std::ostream& out, SweepMode mode, std::span<const SweepRow> rows);

}  // namespace evlife
