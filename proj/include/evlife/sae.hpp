#pragma once

#include <vector>

#include "evlife/types.hpp"

namespace evlife {

// Immutable n x n snapshot of one polarity surface around an event.
// Local coordinates run 0..n-1 from the window's top-left corner; the
// center pixel sits at (n/2, n/2). Cells outside the sensor (or never
// fired) hold kNeverFired.
struct SaeWindow {
    int n = 0;
    int center_x = 0;  // absolute sensor coordinates of the center pixel
    int center_y = 0;
    double center_time = 0.0;
    std::vector<double> t;  // row-major [ly * n + lx]

    double at(int lx, int ly) const { return t[static_cast<size_t>(ly) * n + lx]; }
    double& at(int lx, int ly) { return t[static_cast<size_t>(ly) * n + lx]; }
    bool fired(int lx, int ly) const { return has_fired(at(lx, ly)); }
    int half() const { return n / 2; }
};

// Per-polarity Surface of Active Events: latest timestamp per pixel.
class Sae {
public:
    explicit Sae(SensorGeometry geometry);

    // Stores e.t on e's polarity surface. Throws on out-of-bounds pixels
    // or a timestamp below the stored value.
    void update(const Event& e);

    // Copies the n x n neighborhood of e's polarity surface centered on
    // (e.x, e.y). Requires n odd and e already applied.
    SaeWindow window(const Event& e, int n) const;

    double at(Polarity p, int x, int y) const;
    const SensorGeometry& geometry() const { return geom_; }

private:
    SensorGeometry geom_;
    std::vector<double> surface_[2];  // [polarity][y * width + x]
};

}  // namespace evlife
