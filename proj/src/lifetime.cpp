#include "evlife/lifetime.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "evlife/events_io.hpp"
#include "evlife/rng.hpp"
#include "evlife/sae.hpp"

namespace evlife {

Flow flow_from_normal(const PlaneNormal& n) {
    Flow f;
    f.vx = n.n1 != 0.0 ? -n.n3 / n.n1 : std::numeric_limits<double>::infinity();
    f.vy = n.n2 != 0.0 ? -n.n3 / n.n2 : std::numeric_limits<double>::infinity();
    return f;
}

double lifetime_from_normal(const PlaneNormal& n) {
    if (n.n3 == 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double grad = std::hypot(n.n1, n.n2);
    if (grad == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return grad / std::abs(n.n3);
}

std::vector<LifetimedEvent> process_stream(const EventStream& stream,
                                           const PipelineOptions& options) {
    const EventStream* input = &stream;
    EventStream filtered;
    if (options.apply_filter) {
        filtered = filter(stream, options.filter);
        input = &filtered;
    }

    const size_t count = input->events.size();
    std::vector<LifetimedEvent> out(count);

    Sae sae(stream.geometry);
    const int threads = std::max(1, options.threads);
    constexpr size_t kChunk = 8192;

    std::vector<SaeWindow> windows;
    windows.reserve(std::min(count, kChunk));

    auto fit_range = [&](size_t chunk_begin, size_t lo, size_t hi) {
        for (size_t k = lo; k < hi; ++k) {
            const size_t idx = chunk_begin + k;
            RansacParams params = options.ransac;
            params.seed = mix_seed(options.ransac.seed, idx);
            const FitResult fit = ransac_fit(windows[k], params);

            LifetimedEvent& le = out[idx];
            le.event = input->events[idx];
            le.status = fit.status;
            if (fit.status == FitStatus::ok) {
                const double tau = lifetime_from_normal(fit.normal);
                if (std::isfinite(tau) && tau > 0.0) {
                    const Flow flow = flow_from_normal(fit.normal);
                    le.tau = tau;
                    le.vx = flow.vx;
                    le.vy = flow.vy;
                } else {
                    le.status = FitStatus::degenerate;
                }
            }
        }
    };

    for (size_t chunk_begin = 0; chunk_begin < count; chunk_begin += kChunk) {
        const size_t chunk = std::min(kChunk, count - chunk_begin);
        windows.clear();
        for (size_t k = 0; k < chunk; ++k) {
            const Event& e = input->events[chunk_begin + k];
            sae.update(e);
            windows.push_back(sae.window(e, options.ransac.window_n));
        }

        if (threads == 1 || chunk < 2) {
            fit_range(chunk_begin, 0, chunk);
        } else {
            std::vector<std::thread> pool;
            const size_t per = (chunk + threads - 1) / threads;
            for (int w = 0; w < threads; ++w) {
                const size_t lo = std::min(chunk, static_cast<size_t>(w) * per);
                const size_t hi = std::min(chunk, lo + per);
                if (lo >= hi) break;
                pool.emplace_back(fit_range, chunk_begin, lo, hi);
            }
            for (auto& th : pool) th.join();
        }
    }
    return out;
}

void write_lifetime_csv(std::ostream& out, std::span<const LifetimedEvent> rows,
                        SensorGeometry geometry) {
    out << "# geometry " << geometry.width << ' ' << geometry.height << '\n';
    out << "t,x,y,p,tau,vx,vy,status\n";
    for (const LifetimedEvent& le : rows) {
        out << format_double(le.event.t) << ',' << le.event.x << ',' << le.event.y << ','
            << (le.event.p == Polarity::positive ? 1 : 0) << ',' << format_double(le.tau) << ','
            << format_double(le.vx) << ',' << format_double(le.vy) << ','
            << to_string(le.status) << '\n';
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
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

LifetimeCsv read_lifetime_csv(std::istream& in) {
    LifetimeCsv result;
    std::string line;
    size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string word;
            if (ls >> word && word == "geometry") {
                int w = 0, h = 0;
                if (ls >> w >> h) result.geometry = SensorGeometry{w, h};
            }
            continue;
        }
        if (!header_seen) {
            if (line.rfind("t,x,y,p,tau,vx,vy,status", 0) != 0)
                throw std::runtime_error("lifetime csv: unexpected header at line " +
                                         std::to_string(line_no));
            header_seen = true;
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != 8)
            throw std::runtime_error("lifetime csv: expected 8 fields at line " +
                                     std::to_string(line_no));
        LifetimedEvent le;
        try {
            le.event.t = parse_double(fields[0]);
            le.event.x = static_cast<int>(parse_long(fields[1]));
            le.event.y = static_cast<int>(parse_long(fields[2]));
            le.event.p = parse_long(fields[3]) ? Polarity::positive : Polarity::negative;
            le.tau = parse_double(fields[4]);
            le.vx = parse_double(fields[5]);
            le.vy = parse_double(fields[6]);
        } catch (const std::exception& ex) {
            throw std::runtime_error("lifetime csv: line " + std::to_string(line_no) + ": " +
                                     ex.what());
        }
        const auto status = fit_status_from_string(fields[7]);
        if (!status)
            throw std::runtime_error("lifetime csv: unknown status '" + fields[7] +
                                     "' at line " + std::to_string(line_no));
        le.status = *status;
        result.rows.push_back(le);
    }
    return result;
}

LifetimeCsv read_lifetime_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path);
    return read_lifetime_csv(in);
}

}  // namespace evlife
