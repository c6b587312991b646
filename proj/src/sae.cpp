#include "evlife/sae.hpp"

#include <stdexcept>
#include <string>

namespace evlife {

Sae::Sae(SensorGeometry geometry) : geom_(geometry) {
    if (geom_.width < 1 || geom_.height < 1)
        throw std::invalid_argument("Sae: geometry must be at least 1x1");
    const size_t npix = static_cast<size_t>(geom_.pixel_count());
    surface_[0].assign(npix, kNeverFired);
    surface_[1].assign(npix, kNeverFired);
}

void Sae::update(const Event& e) {
    if (!geom_.contains(e.x, e.y))
        throw std::out_of_range("Sae::update: pixel (" + std::to_string(e.x) + "," +
                                std::to_string(e.y) + ") out of bounds");
    double& cell = surface_[static_cast<int>(e.p)][static_cast<size_t>(e.y) * geom_.width + e.x];
    if (has_fired(cell) && e.t < cell)
        throw std::invalid_argument("Sae::update: timestamp decreases at pixel (" +
                                    std::to_string(e.x) + "," + std::to_string(e.y) + ")");
    cell = e.t;
}

double Sae::at(Polarity p, int x, int y) const {
    if (!geom_.contains(x, y)) throw std::out_of_range("Sae::at: pixel out of bounds");
    return surface_[static_cast<int>(p)][static_cast<size_t>(y) * geom_.width + x];
}

SaeWindow Sae::window(const Event& e, int n) const {
    if (n < 1 || n % 2 == 0) throw std::invalid_argument("Sae::window: n must be odd");
    if (!geom_.contains(e.x, e.y)) throw std::out_of_range("Sae::window: pixel out of bounds");

    SaeWindow w;
    w.n = n;
    w.center_x = e.x;
    w.center_y = e.y;
    w.center_time = e.t;
    w.t.assign(static_cast<size_t>(n) * n, kNeverFired);

    const int h = n / 2;
    const std::vector<double>& surf = surface_[static_cast<int>(e.p)];
    for (int ly = 0; ly < n; ++ly) {
        const int y = e.y - h + ly;
        if (y < 0 || y >= geom_.height) continue;
        for (int lx = 0; lx < n; ++lx) {
            const int x = e.x - h + lx;
            if (x < 0 || x >= geom_.width) continue;
            w.at(lx, ly) = surf[static_cast<size_t>(y) * geom_.width + x];
        }
    }
    return w;
}

}  // namespace evlife
