#include "evlife/plane_fit.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace evlife {

const char* to_string(FitStatus s) {
    switch (s) {
        case FitStatus::ok: return "ok";
        case FitStatus::degenerate: return "degenerate";
        case FitStatus::insufficient_support: return "insufficient_support";
    }
    return "unknown";
}

std::optional<FitStatus> fit_status_from_string(const std::string& s) {
    if (s == "ok") return FitStatus::ok;
    if (s == "degenerate") return FitStatus::degenerate;
    if (s == "insufficient_support") return FitStatus::insufficient_support;
    return std::nullopt;
}

std::vector<uint8_t> kmeans_partition(const SaeWindow& window) {
    const int n = window.n;
    const size_t cells = static_cast<size_t>(n) * n;
    const size_t center = static_cast<size_t>(window.half()) * n + window.half();

    std::vector<double> value(cells);
    for (size_t i = 0; i < cells; ++i) value[i] = has_fired(window.t[i]) ? window.t[i] : 0.0;

    double c_lo = *std::min_element(value.begin(), value.end());
    double c_hi = window.center_time;
    std::vector<uint8_t> assign(cells, 1);
    if (c_lo == c_hi) return std::vector<uint8_t>(cells, 1);

    // 1-D nearest-centroid assignment splits at the midpoint, so cluster 1
    // keeps the larger mean throughout; ties land on the recent side.
    for (int iter = 0; iter < 50; ++iter) {
        bool changed = false;
        for (size_t i = 0; i < cells; ++i) {
            const double d_lo = std::abs(value[i] - c_lo);
            const double d_hi = std::abs(value[i] - c_hi);
            const uint8_t a = d_hi <= d_lo ? 1 : 0;
            if (a != assign[i]) {
                assign[i] = a;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        double sum[2] = {0.0, 0.0};
        size_t cnt[2] = {0, 0};
        for (size_t i = 0; i < cells; ++i) {
            sum[assign[i]] += value[i];
            ++cnt[assign[i]];
        }
        if (cnt[0]) c_lo = sum[0] / cnt[0];
        if (cnt[1]) c_hi = sum[1] / cnt[1];
    }

    const uint8_t center_cluster = assign[center];
    std::vector<uint8_t> mask(cells);
    for (size_t i = 0; i < cells; ++i) mask[i] = assign[i] == center_cluster ? 1 : 0;
    return mask;
}

std::optional<PlaneNormal> plane_from_three_points(const SaePoint& p1, const SaePoint& p2,
                                                   const SaePoint& p3) {
    const SaePoint p[3] = {p1, p2, p3};
    const double det = p[0].x * (p[1].y * p[2].t - p[2].y * p[1].t) -
                       p[0].y * (p[1].x * p[2].t - p[2].x * p[1].t) +
                       p[0].t * (p[1].x * p[2].y - p[2].x * p[1].y);

    double scale = 1.0;
    for (const SaePoint& q : p)
        scale *= std::sqrt(q.x * q.x + q.y * q.y + q.t * q.t);
    if (std::abs(det) <= 1e-12 * scale) return std::nullopt;

    // Cramer with the unit right-hand side substituted per column
    const double det1 = (p[1].y * p[2].t - p[2].y * p[1].t) - p[0].y * (p[2].t - p[1].t) +
                        p[0].t * (p[2].y - p[1].y);
    const double det2 = p[0].x * (p[2].t - p[1].t) - (p[1].x * p[2].t - p[2].x * p[1].t) +
                        p[0].t * (p[1].x - p[2].x);
    const double det3 = p[0].x * (p[1].y - p[2].y) - p[0].y * (p[1].x - p[2].x) +
                        (p[1].x * p[2].y - p[2].x * p[1].y);

    PlaneNormal n{det1 / det, det2 / det, det3 / det};
    for (const SaePoint& q : p) {
        const double r = n.dot(q.x, q.y, q.t) - 1.0;
        const double mag = std::sqrt(n.norm_sq() * (q.x * q.x + q.y * q.y + q.t * q.t));
        if (std::abs(r) > 1e-9 * std::max(1.0, mag)) return std::nullopt;
    }
    return n;
}

double intra_pixel_distance(const PlaneNormal& normal, double x, double y, double t,
                            double delta) {
    const double a = normal.dot(x, y, t) - 1.0;
    const double slack = delta * (std::abs(normal.n1) + std::abs(normal.n2));
    return std::max(0.0, std::abs(a) - slack) / normal.norm_sq();
}

namespace {

struct Candidate {
    int lx;
    int ly;
    double t;
};

int score_plane(const PlaneNormal& plane, const std::vector<Candidate>& cands,
                size_t center_idx, double delta, double eps) {
    int score = 0;
    for (size_t i = 0; i < cands.size(); ++i) {
        const double d = i == center_idx ? 0.0 : delta;
        if (intra_pixel_distance(plane, cands[i].lx, cands[i].ly, cands[i].t, d) < eps) ++score;
    }
    return score;
}

}  // namespace

FitResult ransac_fit(const SaeWindow& window, const RansacParams& params) {
    if (params.delta < 0.0 || params.delta >= 0.5)
        throw std::invalid_argument("ransac_fit: delta must be in [0, 0.5)");
    if (params.inlier_eps <= 0.0)
        throw std::invalid_argument("ransac_fit: inlier_eps must be positive");
    if (params.iterations < 1)
        throw std::invalid_argument("ransac_fit: iterations must be >= 1");

    const int n = window.n;
    const size_t cells = static_cast<size_t>(n) * n;
    const int h = window.half();
    const size_t center_cell = static_cast<size_t>(h) * n + h;

    FitResult result;
    result.inlier_mask.assign(cells, 0);

    std::vector<uint8_t> candidate = kmeans_partition(window);
    for (size_t i = 0; i < cells; ++i)
        if (!has_fired(window.t[i])) candidate[i] = 0;

    // candidate list in row-major order; element 0 is the center anchor
    std::vector<Candidate> cands;
    size_t center_idx = 0;
    cands.push_back({h, h, window.center_time});
    for (size_t i = 0; i < cells; ++i) {
        if (!candidate[i] || i == center_cell) continue;
        cands.push_back({static_cast<int>(i % n), static_cast<int>(i / n), window.t[i]});
    }
    result.support = 1;

    const size_t m = cands.size() - 1;  // selectable past events
    if (m < 2) {
        result.status = FitStatus::insufficient_support;
        return result;
    }

    const SaePoint anchor{static_cast<double>(h), static_cast<double>(h), window.center_time};
    int best_score = -1;
    PlaneNormal best;

    auto consider = [&](size_t i, size_t j) {
        const SaePoint pi{static_cast<double>(cands[i].lx), static_cast<double>(cands[i].ly),
                          cands[i].t};
        const SaePoint pj{static_cast<double>(cands[j].lx), static_cast<double>(cands[j].ly),
                          cands[j].t};
        auto plane = plane_from_three_points(anchor, pi, pj);
        if (!plane) return false;
        const int score =
            score_plane(*plane, cands, center_idx, params.delta, params.inlier_eps);
        if (score > best_score) {
            best_score = score;
            best = *plane;
        }
        return true;
    };

    if (params.exhaustive) {
        for (size_t i = 1; i + 1 <= m; ++i)
            for (size_t j = i + 1; j <= m; ++j) consider(i, j);
    } else {
        std::mt19937_64 rng(params.seed);
        std::uniform_int_distribution<size_t> pick_first(1, m);
        std::uniform_int_distribution<size_t> pick_second(1, m - 1);
        for (int it = 0; it < params.iterations; ++it) {
            for (int attempt = 0; attempt < 10; ++attempt) {
                size_t i = pick_first(rng);
                size_t j = pick_second(rng);
                if (j >= i) ++j;
                if (consider(i, j)) break;
            }
        }
    }

    if (best_score < 0) {
        result.status = FitStatus::degenerate;
        return result;
    }

    result.normal = best;
    result.support = best_score;
    for (size_t i = 0; i < cells; ++i) {
        if (!has_fired(window.t[i])) continue;
        const double d = i == center_cell ? 0.0 : params.delta;
        const int lx = static_cast<int>(i % n);
        const int ly = static_cast<int>(i / n);
        if (intra_pixel_distance(best, lx, ly, window.t[i], d) < params.inlier_eps)
            result.inlier_mask[i] = 1;
    }
    result.inlier_count = 0;
    for (uint8_t v : result.inlier_mask) result.inlier_count += v;

    result.status = best_score - 1 >= params.min_inliers ? FitStatus::ok
                                                         : FitStatus::insufficient_support;
    return result;
}

}  // namespace evlife
