#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "evlife/buffer_filter.hpp"
#include "evlife/plane_fit.hpp"
#include "evlife/types.hpp"

namespace evlife {

struct Flow {
    double vx = 0.0;
    double vy = 0.0;
};

// vx = -n3/n1, vy = -n3/n2; a zero denominator yields +infinity for that
// component (infinite-speed axis).
Flow flow_from_normal(const PlaneNormal& n);

// tau = sqrt(n1^2 + n2^2) / |n3|; NaN when n3 = 0 (static plane) or
// n1 = n2 = 0 (flat surface, no motion).
double lifetime_from_normal(const PlaneNormal& n);

struct LifetimedEvent {
    Event event;
    double tau = std::numeric_limits<double>::quiet_NaN();  // seconds, valid iff status == ok
    double vx = std::numeric_limits<double>::quiet_NaN();
    double vy = std::numeric_limits<double>::quiet_NaN();
    FitStatus status = FitStatus::degenerate;
};

struct PipelineOptions {
    FilterParams filter;
    RansacParams ransac;
    bool apply_filter = true;
    int threads = 1;
};

// Full per-event pipeline: buffer filter, then for each surviving event
// SAE update, window extraction and RANSAC fit. The per-event RANSAC
// seed is derived from (ransac.seed, event index), so results are
// identical for any thread count.
std::vector<LifetimedEvent> process_stream(const EventStream& stream,
                                           const PipelineOptions& options);

// Detect-output CSV: optional "# geometry W H" comment, then a
// "t,x,y,p,tau,vx,vy,status" header. Non-finite fields serialize as
// nan/inf and parse back exactly.
void write_lifetime_csv(std::ostream& out, std::span<const LifetimedEvent> rows,
                        SensorGeometry geometry);

struct LifetimeCsv {
    SensorGeometry geometry{0, 0};  // 0x0 when the file carries no geometry comment
    std::vector<LifetimedEvent> rows;
};

LifetimeCsv read_lifetime_csv(std::istream& in);
LifetimeCsv read_lifetime_csv_file(const std::string& path);

}  // namespace evlife
