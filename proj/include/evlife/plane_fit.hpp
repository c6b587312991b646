#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "evlife/sae.hpp"

namespace evlife {

// Coefficients of the plane n1*x + n2*y + n3*t = 1. Plane fitting works
// in window-local pixel coordinates (0..n-1 from the top-left corner)
// with raw timestamps on the t axis.
struct PlaneNormal {
    double n1 = 0.0;
    double n2 = 0.0;
    double n3 = 0.0;

    double dot(double x, double y, double t) const { return n1 * x + n2 * y + n3 * t; }
    double norm_sq() const { return n1 * n1 + n2 * n2 + n3 * n3; }

    friend bool operator==(const PlaneNormal&, const PlaneNormal&) = default;
};

struct SaePoint {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;
};

struct RansacParams {
    int window_n = 5;
    double delta = 0.25;       // intra-pixel radius, pixels
    double inlier_eps = 0.01;  // threshold on |n.z - 1| / ||n||^2
    int iterations = 100;
    int min_inliers = 3;       // required inliers beyond the center event
    bool exhaustive = false;   // try every candidate pair instead of sampling
    uint64_t seed = 0;
};

enum class FitStatus : uint8_t { ok, degenerate, insufficient_support };

const char* to_string(FitStatus s);
std::optional<FitStatus> fit_status_from_string(const std::string& s);

struct FitResult {
    PlaneNormal normal;
    std::vector<uint8_t> inlier_mask;  // n*n row-major; fired pixels within inlier_eps
    int inlier_count = 0;
    int support = 0;  // best RANSAC score: candidate pixels within inlier_eps (incl. center)
    FitStatus status = FitStatus::degenerate;
};

// 1-D k-means (k=2) over the window timestamps, never-fired cells taken
// as 0. Initial centroids are (min value, center time); assignment ties
// go to the cluster with the larger centroid. Returns the cluster mask
// containing the center pixel (whole window if all values are equal).
std::vector<uint8_t> kmeans_partition(const SaeWindow& window);

// Solves n . p_i = 1 for the three points. Returns nullopt when the
// system is singular (collinear points or a plane through the origin).
std::optional<PlaneNormal> plane_from_three_points(const SaePoint& p1, const SaePoint& p2,
                                                   const SaePoint& p3);

// Minimum of |n.z - 1| / ||n||^2 over z = (x', y', t) with x' and y'
// ranging over the delta-box around the pixel center. The objective is
// affine in (x', y'), so this is max(0, |a| - delta*(|n1|+|n2|)) / ||n||^2
// with a = n.(x,y,t) - 1.
double intra_pixel_distance(const PlaneNormal& normal, double x, double y, double t,
                            double delta);

// RANSAC plane fit on the window: k-means pre-partition, 3-point samples
// anchored at the center event, candidate planes scored by the count of
// candidate pixels whose intra-pixel-area distance is below inlier_eps.
// The returned inlier mask classifies every fired pixel of the window
// against the winning plane (the center pixel with delta = 0).
FitResult ransac_fit(const SaeWindow& window, const RansacParams& params);

}  // namespace evlife
