#include "evlife/events_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace evlife {

void validate(const EventStream& stream) {
    if (stream.geometry.width < 1 || stream.geometry.height < 1)
        throw std::invalid_argument("EventStream: geometry must be at least 1x1");
    double prev = -1.0;
    for (size_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i];
        if (!std::isfinite(e.t) || e.t < 0.0)
            throw std::invalid_argument("EventStream: non-finite or negative timestamp at index " +
                                        std::to_string(i));
        if (!stream.geometry.contains(e.x, e.y))
            throw std::invalid_argument("EventStream: out-of-bounds event at index " +
                                        std::to_string(i));
        if (e.t < prev)
            throw std::invalid_argument("EventStream: decreasing timestamp at index " +
                                        std::to_string(i));
        prev = e.t;
    }
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

double parse_double(const std::string& token) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw std::runtime_error("not a number: '" + token + "'");
    return v;
}

long parse_long(const std::string& token) {
    long v = 0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw std::runtime_error("not an integer: '" + token + "'");
    return v;
}

EventStream parse_event_text(std::istream& in, SensorGeometry geometry) {
    if (geometry.width < 1 || geometry.height < 1)
        throw std::invalid_argument("parse_event_text: geometry must be at least 1x1");

    EventStream stream;
    stream.geometry = geometry;

    std::string line;
    size_t line_no = 0;
    double prev_t = -1.0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos || line[begin] == '#') continue;

        std::istringstream ls(line);
        std::string ft, fx, fy, fp, extra;
        if (!(ls >> ft >> fx >> fy >> fp) || (ls >> extra))
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": expected 4 fields 't x y p'");
        Event e;
        try {
            e.t = parse_double(ft);
            e.x = static_cast<int>(parse_long(fx));
            e.y = static_cast<int>(parse_long(fy));
        } catch (const std::exception& ex) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": " + ex.what());
        }
        if (fp == "1")
            e.p = Polarity::positive;
        else if (fp == "0")
            e.p = Polarity::negative;
        else
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": polarity must be 0 or 1, got '" + fp + "'");
        if (!std::isfinite(e.t) || e.t < 0.0)
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": timestamp must be finite and non-negative");
        if (!geometry.contains(e.x, e.y))
            throw std::runtime_error("line " + std::to_string(line_no) + ": pixel (" +
                                     std::to_string(e.x) + "," + std::to_string(e.y) +
                                     ") outside " + std::to_string(geometry.width) + "x" +
                                     std::to_string(geometry.height) + " sensor");
        if (e.t < prev_t)
            throw std::runtime_error("decreasing timestamp at index " +
                                     std::to_string(stream.events.size()));
        prev_t = e.t;
        stream.events.push_back(e);
    }
    return stream;
}

EventStream parse_event_file(const std::string& path, SensorGeometry geometry) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open event file: " + path);
    return parse_event_text(in, geometry);
}

void write_event_text(const EventStream& stream, std::ostream& out) {
    for (const Event& e : stream.events) {
        out << format_double(e.t) << ' ' << e.x << ' ' << e.y << ' '
            << (e.p == Polarity::positive ? '1' : '0') << '\n';
    }
}

void write_event_file(const EventStream& stream, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    write_event_text(stream, out);
}

namespace {

// Reads the next PGM header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF) throw std::runtime_error("pgm: truncated header");
    std::string tok;
    while (c != EOF && !std::isspace(c) && c != '#') {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    if (c == '#') in.unget();
    return tok;
}

}  // namespace

EdgeImage read_pgm(std::istream& in) {
    std::string magic = pgm_token(in);
    if (magic != "P2" && magic != "P5")
        throw std::runtime_error("pgm: unsupported magic number '" + magic + "'");

    long width = parse_long(pgm_token(in));
    long height = parse_long(pgm_token(in));
    long maxval = parse_long(pgm_token(in));
    if (width < 1 || height < 1)
        throw std::runtime_error("pgm: invalid dimensions " + std::to_string(width) + "x" +
                                 std::to_string(height));
    if (maxval < 1 || maxval > 255)
        throw std::runtime_error("pgm: unsupported maxval " + std::to_string(maxval));

    EdgeImage image(SensorGeometry{static_cast<int>(width), static_cast<int>(height)});
    const size_t npix = image.mask.size();

    if (magic == "P2") {
        for (size_t i = 0; i < npix; ++i) {
            long v;
            try {
                v = parse_long(pgm_token(in));
            } catch (const std::exception&) {
                throw std::runtime_error("pgm: truncated payload");
            }
            if (v < 0 || v > maxval)
                throw std::runtime_error("pgm: pixel value " + std::to_string(v) +
                                         " exceeds maxval");
            image.mask[i] = v > 127 ? 1 : 0;
        }
    } else {
        // single whitespace separates maxval from binary payload
        std::vector<unsigned char> raw(npix);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(npix));
        if (static_cast<size_t>(in.gcount()) != npix)
            throw std::runtime_error("pgm: truncated payload");
        for (size_t i = 0; i < npix; ++i) image.mask[i] = raw[i] > 127 ? 1 : 0;
    }
    return image;
}

EdgeImage read_pgm_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open pgm file: " + path);
    return read_pgm(in);
}

void write_pgm(const EdgeImage& image, std::ostream& out) {
    std::vector<uint8_t> pixels(image.mask.size());
    for (size_t i = 0; i < image.mask.size(); ++i) pixels[i] = image.mask[i] ? 255 : 0;
    write_pgm_gray(image.geometry, pixels, out);
}

void write_pgm_file(const EdgeImage& image, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    write_pgm(image, out);
}

void write_pgm_gray(SensorGeometry geometry, const std::vector<uint8_t>& pixels,
                    std::ostream& out) {
    if (pixels.size() != static_cast<size_t>(geometry.pixel_count()))
        throw std::invalid_argument("write_pgm_gray: pixel buffer does not match geometry");
    out << "P5\n" << geometry.width << ' ' << geometry.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
}

}  // namespace evlife
