#include "evlife/eval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "evlife/events_io.hpp"
#include "evlife/rng.hpp"

namespace evlife {

namespace {

// Largest per-side edge-pixel count solved by the exact matcher; bigger
// inputs fall back to closest-first greedy matching.
constexpr size_t kCdmExactLimit = 1024;

struct PixelRef {
    int x;
    int y;
    int index;  // row-major order within its mask
};

std::vector<PixelRef> edge_pixels(const EdgeImage& img) {
    std::vector<PixelRef> out;
    int idx = 0;
    for (int y = 0; y < img.geometry.height; ++y)
        for (int x = 0; x < img.geometry.width; ++x)
            if (img.at(x, y)) out.push_back({x, y, idx++});
    return out;
}

}  // namespace

CdmReport cdm(const EdgeImage& f, const EdgeImage& g, const CdmParams& params) {
    if (f.geometry != g.geometry)
        throw std::invalid_argument("cdm: edge images must share geometry");
    if (params.eta < 0) throw std::invalid_argument("cdm: eta must be >= 0");

    const auto fp = edge_pixels(f);
    const auto gp = edge_pixels(g);

    CdmReport report;
    for (size_t i = 0; i < f.mask.size(); ++i)
        report.union_size += (f.mask[i] || g.mask[i]) ? 1 : 0;
    if (report.union_size == 0) {
        report.score = 100.0;
        return report;
    }

    // index g pixels by position for box lookups
    std::vector<int> g_index(g.mask.size(), -1);
    for (const PixelRef& q : gp)
        g_index[static_cast<size_t>(q.y) * g.geometry.width + q.x] = q.index;

    // adjacency: candidate pairs with chessboard distance <= eta
    const size_t nf = fp.size(), ng = gp.size();
    std::vector<std::vector<std::pair<int, int>>> edges(nf);  // (g index, distance d)
    for (const PixelRef& p : fp) {
        for (int dy = -params.eta; dy <= params.eta; ++dy) {
            const int y = p.y + dy;
            if (y < 0 || y >= g.geometry.height) continue;
            for (int dx = -params.eta; dx <= params.eta; ++dx) {
                const int x = p.x + dx;
                if (x < 0 || x >= g.geometry.width) continue;
                const int gi = g_index[static_cast<size_t>(y) * g.geometry.width + x];
                if (gi < 0) continue;
                edges[p.index].push_back({gi, std::max(std::abs(dx), std::abs(dy))});
            }
        }
    }

    std::vector<int> match_f(nf, -1), match_g(ng, -1);

    if (nf <= kCdmExactLimit && ng <= kCdmExactLimit) {
        // Exact minimum-cost matching by successive shortest augmenting
        // paths: Bellman-Ford over the residual graph from every
        // unmatched f pixel, augmenting while a path costs less than the
        // 2*eta of leaving both endpoints unmatched. Costs stay integer
        // (chessboard distances), and ties prefer fewer hops so the
        // predecessor chain cannot cycle through zero-cost loops.
        const long inf = std::numeric_limits<long>::max();
        const long abstain = params.eta > 0 ? 2L * params.eta : 1L;
        std::vector<int> cost_of(nf, 0);  // distance of the current match of f
        while (true) {
            std::vector<long> dist_f(nf, inf), dist_g(ng, inf);
            std::vector<int> hops_f(nf, 0), hops_g(ng, 0);
            std::vector<int> prev_g(ng, -1);
            for (size_t i = 0; i < nf; ++i)
                if (match_f[i] < 0) dist_f[i] = 0;

            bool changed = true;
            for (size_t pass = 0; pass < nf + ng + 2 && changed; ++pass) {
                changed = false;
                for (size_t i = 0; i < nf; ++i) {
                    if (dist_f[i] == inf) continue;
                    for (const auto& [gi, d] : edges[i]) {
                        if (match_f[i] == gi) continue;
                        const long nd = dist_f[i] + d;
                        const int nh = hops_f[i] + 1;
                        if (nd < dist_g[gi] || (nd == dist_g[gi] && nh < hops_g[gi])) {
                            dist_g[gi] = nd;
                            hops_g[gi] = nh;
                            prev_g[gi] = static_cast<int>(i);
                            changed = true;
                        }
                    }
                }
                for (size_t j = 0; j < ng; ++j) {
                    if (dist_g[j] == inf || match_g[j] < 0) continue;
                    const int fi = match_g[j];
                    const long nd = dist_g[j] - cost_of[fi];
                    const int nh = hops_g[j] + 1;
                    if (nd < dist_f[fi] || (nd == dist_f[fi] && nh < hops_f[fi])) {
                        dist_f[fi] = nd;
                        hops_f[fi] = nh;
                        changed = true;
                    }
                }
            }

            int best_g = -1;
            for (size_t j = 0; j < ng; ++j) {
                if (match_g[j] >= 0 || dist_g[j] == inf) continue;
                if (best_g < 0 || dist_g[j] < dist_g[best_g]) best_g = static_cast<int>(j);
            }
            if (best_g < 0 || dist_g[best_g] >= abstain) break;

            int gi = best_g;
            while (gi >= 0) {
                const int fi = prev_g[gi];
                const int next_g = match_f[fi];
                match_f[fi] = gi;
                match_g[gi] = fi;
                for (const auto& [gj, d] : edges[fi])
                    if (gj == gi) cost_of[fi] = d;
                gi = next_g;
            }
        }
    } else {
        // closest-first greedy for oversized inputs, ties broken by
        // row-major pixel order
        struct Pair {
            int d;
            int fi;
            int gi;
        };
        std::vector<Pair> pairs;
        for (size_t i = 0; i < nf; ++i)
            for (const auto& [gi, d] : edges[i])
                pairs.push_back({d, static_cast<int>(i), gi});
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            if (a.d != b.d) return a.d < b.d;
            if (a.fi != b.fi) return a.fi < b.fi;
            return a.gi < b.gi;
        });
        for (const Pair& pr : pairs) {
            if (match_f[pr.fi] >= 0 || match_g[pr.gi] >= 0) continue;
            match_f[pr.fi] = pr.gi;
            match_g[pr.gi] = pr.fi;
        }
    }

    double matched_cost = 0.0;
    for (size_t i = 0; i < nf; ++i) {
        if (match_f[i] < 0) continue;
        ++report.matched_pairs;
        const PixelRef& p = fp[i];
        const PixelRef& q = gp[static_cast<size_t>(match_f[i])];
        const int d = std::max(std::abs(p.x - q.x), std::abs(p.y - q.y));
        matched_cost += params.eta > 0 ? static_cast<double>(d) / params.eta : 0.0;
    }
    report.unmatched_f = static_cast<int>(nf) - report.matched_pairs;
    report.unmatched_g = static_cast<int>(ng) - report.matched_pairs;

    const double cost = matched_cost + report.unmatched_f + report.unmatched_g;
    report.score = std::clamp(100.0 * (1.0 - cost / report.union_size), 0.0, 100.0);
    return report;
}

FMeasure f_measure(std::span<const uint8_t> predicted, std::span<const uint8_t> truth) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("f_measure: grids must have the same shape");
    long tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] && truth[i]) ++tp;
        else if (predicted[i] && !truth[i]) ++fp;
        else if (!predicted[i] && truth[i]) ++fn;
    }
    FMeasure m;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    m.f = m.recall + m.precision > 0.0 ? 2.0 * m.recall * m.precision / (m.recall + m.precision)
                                       : 0.0;
    return m;
}

size_t EventKeyHash::operator()(const EventKey& k) const {
    uint64_t h = std::bit_cast<uint64_t>(k.t);
    h = mix_seed(h, static_cast<uint64_t>(static_cast<uint32_t>(k.x)));
    h = mix_seed(h, static_cast<uint64_t>(static_cast<uint32_t>(k.y)));
    h = mix_seed(h, static_cast<uint64_t>(k.p));
    return static_cast<size_t>(h);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

TruthMap read_truth_csv(std::istream& in) {
    TruthMap map;
    std::string line;
    size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r" || line[0] == '#') continue;
        if (!header_seen) {
            if (line.rfind("index,t,x,y,p,lifetime,is_noise", 0) != 0)
                throw std::runtime_error("truth csv: unexpected header at line " +
                                         std::to_string(line_no));
            header_seen = true;
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 7)
            throw std::runtime_error("truth csv: expected 7 fields at line " +
                                     std::to_string(line_no));
        EventKey key;
        TruthEntry entry;
        try {
            key.t = parse_double(fields[1]);
            key.x = static_cast<int>(parse_long(fields[2]));
            key.y = static_cast<int>(parse_long(fields[3]));
            key.p = parse_long(fields[4]) ? Polarity::positive : Polarity::negative;
            entry.lifetime = parse_double(fields[5]);
            entry.is_noise = parse_long(fields[6]) != 0;
        } catch (const std::exception& ex) {
            throw std::runtime_error("truth csv: line " + std::to_string(line_no) + ": " +
                                     ex.what());
        }
        map[key] = entry;
    }
    return map;
}

TruthMap read_truth_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open truth csv: " + path);
    return read_truth_csv(in);
}

LifetimeStats lifetime_stats(std::span<const LifetimedEvent> estimates, const TruthMap& truth,
                             double bin_width) {
    if (bin_width <= 0.0) throw std::invalid_argument("lifetime_stats: bin width must be > 0");
    LifetimeStats stats;
    stats.bin_width = bin_width;
    double total = 0.0;
    for (const LifetimedEvent& le : estimates) {
        if (le.status != FitStatus::ok) continue;
        const EventKey key{le.event.t, le.event.x, le.event.y, le.event.p};
        auto it = truth.find(key);
        if (it == truth.end())
            throw std::runtime_error("lifetime_stats: no truth entry for event at t=" +
                                     format_double(le.event.t));
        if (it->second.is_noise || !std::isfinite(it->second.lifetime)) continue;
        total += std::abs(le.tau - it->second.lifetime);
        ++stats.scored;
        ++stats.histogram[static_cast<long>(std::floor(le.tau / bin_width))];
    }
    stats.mean_abs_error = stats.scored ? total / stats.scored : 0.0;
    return stats;
}

namespace {

struct RepMetrics {
    double f = 0.0;
    double tau_err = 0.0;
};

RepMetrics evaluate_rep(const SweepParams& params, double sigma, double delta,
                        uint64_t window_seed, uint64_t fit_seed) {
    NoiseSpec spec;
    spec.timestamp_sigma = sigma;
    spec.scatter_fraction = params.scatter_fraction;
    spec.seed = window_seed;

    const PerturbMode mode = params.mode == SweepMode::global ? PerturbMode::global_gaussian
                                                             : PerturbMode::scattered;
    const PlanarWindow window =
        gen_planar_window(params.window_n, params.reference_normal, spec, mode,
                          params.inlier_eps);

    RansacParams fit_params;
    fit_params.window_n = params.window_n;
    fit_params.delta = delta;
    fit_params.inlier_eps = params.inlier_eps;
    fit_params.iterations = params.iterations;
    fit_params.min_inliers = params.min_inliers;
    fit_params.seed = fit_seed;

    const FitResult fit = ransac_fit(window.window, fit_params);
    const double tau_true = lifetime_from_normal(params.reference_normal);

    RepMetrics rep;
    if (fit.status == FitStatus::degenerate) {
        rep.f = 0.0;
        rep.tau_err = std::min(tau_true, params.error_cap);
        return rep;
    }
    rep.f = f_measure(fit.inlier_mask, window.truth_inlier).f;
    const double tau_est = lifetime_from_normal(fit.normal);
    rep.tau_err = std::isfinite(tau_est) ? std::min(std::abs(tau_est - tau_true), params.error_cap)
                                         : params.error_cap;
    return rep;
}

}  // namespace

std::vector<SweepRow> sweep_noise_robustness(const SweepParams& params) {
    if (params.repetitions < 1)
        throw std::invalid_argument("sweep_noise_robustness: repetitions must be >= 1");
    if (params.grid.empty()) throw std::invalid_argument("sweep_noise_robustness: empty sweep grid");

    struct Slot {
        double sigma;
        double delta;
        size_t sigma_index;
    };
    std::vector<Slot> slots;
    if (params.mode == SweepMode::global) {
        if (params.deltas.empty())
            throw std::invalid_argument("sweep_noise_robustness: global mode needs at least one delta");
        for (size_t si = 0; si < params.grid.size(); ++si)
            for (double d : params.deltas) slots.push_back({params.grid[si], d, si});
    } else {
        for (double d : params.grid) slots.push_back({params.scattered_sigma, d, 0});
    }

    const size_t reps = static_cast<size_t>(params.repetitions);
    std::vector<std::vector<RepMetrics>> results(slots.size(),
                                                 std::vector<RepMetrics>(reps));

    auto run_range = [&](size_t lo, size_t hi) {
        for (size_t r = lo; r < hi; ++r) {
            const uint64_t rep_seed = mix_seed(params.seed, r);
            for (size_t s = 0; s < slots.size(); ++s) {
                // windows and draws are paired across deltas at one grid point
                const uint64_t window_seed = mix_seed(rep_seed, slots[s].sigma_index);
                const uint64_t fit_seed = mix_seed(window_seed, 1);
                results[s][r] =
                    evaluate_rep(params, slots[s].sigma, slots[s].delta, window_seed, fit_seed);
            }
        }
    };

    const int threads = std::max(1, params.threads);
    if (threads == 1) {
        run_range(0, reps);
    } else {
        std::vector<std::thread> pool;
        const size_t per = (reps + threads - 1) / threads;
        for (int w = 0; w < threads; ++w) {
            const size_t lo = std::min(reps, static_cast<size_t>(w) * per);
            const size_t hi = std::min(reps, lo + per);
            if (lo >= hi) break;
            pool.emplace_back(run_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    std::vector<SweepRow> rows(slots.size());
    for (size_t s = 0; s < slots.size(); ++s) {
        double f_sum = 0.0, e_sum = 0.0;
        for (const RepMetrics& m : results[s]) {
            f_sum += m.f;
            e_sum += m.tau_err;
        }
        rows[s].sigma = slots[s].sigma;
        rows[s].delta = slots[s].delta;
        rows[s].mean_f = f_sum / reps;
        rows[s].mean_abs_tau_error = e_sum / reps;
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, SweepMode mode, std::span<const SweepRow> rows) {
    out << "mode,sigma,delta,mean_f,mean_abs_tau_error\n";
    const char* mode_name = mode == SweepMode::global ? "global" : "scattered";
    for (const SweepRow& r : rows) {
        out << mode_name << ',' << format_double(r.sigma) << ',' << format_double(r.delta) << ','
            << format_double(r.mean_f) << ',' << format_double(r.mean_abs_tau_error) << '\n';
    }
}

}  // namespace evlife
