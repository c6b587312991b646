#pragma once

#include <iosfwd>
#include <string>

#include "evlife/types.hpp"

namespace evlife {

// Text event format: one event per line, "t x y p" with t in decimal
// seconds, x/y integer pixel coordinates and p in {0,1} (1 = positive).
// Lines starting with '#' are comments. Throws std::runtime_error with
// the offending line number on malformed input, out-of-bounds
// coordinates, or a decreasing timestamp.
EventStream parse_event_text(std::istream& in, SensorGeometry geometry);
EventStream parse_event_file(const std::string& path, SensorGeometry geometry);

void write_event_text(const EventStream& stream, std::ostream& out);
void write_event_file(const EventStream& stream, const std::string& path);

// PGM (P2/P5, maxval <= 255). Reading thresholds at >127 -> edge;
// writing emits P5 with 255 for edge pixels and 0 otherwise.
EdgeImage read_pgm(std::istream& in);
EdgeImage read_pgm_file(const std::string& path);
void write_pgm(const EdgeImage& image, std::ostream& out);
void write_pgm_file(const EdgeImage& image, const std::string& path);

// Grayscale P5 writer for lifetime-accumulation images.
void write_pgm_gray(SensorGeometry geometry, const std::vector<uint8_t>& pixels,
                    std::ostream& out);

// Shortest round-trip decimal representation (used everywhere a double
// is serialized, so write/parse round trips are exact).
std::string format_double(double v);

// Strict full-token parse; throws std::runtime_error on failure.
double parse_double(const std::string& token);
long parse_long(const std::string& token);

}  // namespace evlife
