#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "evlife/buffer_filter.hpp"
#include "evlife/edge_render.hpp"
#include "evlife/eval.hpp"
#include "evlife/events_io.hpp"
#include "evlife/lifetime.hpp"
#include "evlife/rng.hpp"
#include "evlife/synth.hpp"
#include "evlife/types.hpp"

namespace {

using namespace evlife;

// flag misuse that CLI11 cannot catch itself; exits with the usage code
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_grid(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            out.push_back(parse_double(tok));
        } catch (const std::exception&) {
            throw UsageError("not a number in value list: '" + tok + "'");
        }
    }
    if (out.empty()) throw UsageError("empty value list: '" + csv + "'");
    return out;
}

std::ofstream open_output(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

struct GeometryOpts {
    int width = 0;
    int height = 0;

    void add(CLI::App* cmd, bool required = true) {
        auto* w = cmd->add_option("--w,--width", width, "sensor width, pixels");
        auto* h = cmd->add_option("--h,--height", height, "sensor height, pixels");
        if (required) {
            w->required();
            h->required();
        }
    }
    SensorGeometry geometry() const { return SensorGeometry{width, height}; }
};

struct SynthOpts {
    GeometryOpts geo;
    int stripes = 8;
    double spacing = 16.0;
    double start = 0.0;
    double velocity = 100.0;
    double duration = 1.0;
    int polarity = 1;
    double noise_rate = 0.0;
    double jitter_sigma = 0.0;
    uint64_t seed = 0;
    std::string out_path;
    std::string truth_path;
};

void run_synth(const SynthOpts& o) {
    StripeScene scene;
    scene.geometry = o.geo.geometry();
    for (int k = 0; k < o.stripes; ++k) scene.stripe_positions.push_back(o.start + k * o.spacing);
    scene.velocity = o.velocity;
    scene.duration = o.duration;
    scene.polarity = o.polarity ? Polarity::positive : Polarity::negative;

    StripeEvents stripes = gen_stripes(scene);

    EventStream stream = stripes.stream;
    std::vector<double> lifetime = stripes.lifetime;
    if (o.jitter_sigma > 0.0) {
        JitteredStream jittered = jitter_timestamps(stream, o.jitter_sigma, mix_seed(o.seed, 1));
        std::vector<double> remapped(lifetime.size());
        for (size_t i = 0; i < jittered.source_index.size(); ++i)
            remapped[i] = lifetime[jittered.source_index[i]];
        stream = std::move(jittered.stream);
        lifetime = std::move(remapped);
    }

    std::vector<uint8_t> is_noise(stream.events.size(), 0);
    if (o.noise_rate > 0.0) {
        NoiseSpec spec;
        spec.isolated_rate = o.noise_rate;
        spec.seed = mix_seed(o.seed, 2);
        NoisyStream noisy = inject_isolated_noise(stream, spec);
        std::vector<double> merged(noisy.stream.events.size());
        size_t src = 0;
        for (size_t i = 0; i < noisy.stream.events.size(); ++i)
            merged[i] = noisy.is_noise[i] ? std::numeric_limits<double>::quiet_NaN()
                                          : lifetime[src++];
        stream = std::move(noisy.stream);
        is_noise = std::move(noisy.is_noise);
        lifetime = std::move(merged);
    }

    validate(stream);
    auto out = open_output(o.out_path);
    write_event_text(stream, out);
    if (!o.truth_path.empty()) {
        auto truth = open_output(o.truth_path);
        write_truth_csv(truth, stream, lifetime, is_noise);
    }
}

struct FilterOpts {
    GeometryOpts geo;
    std::string in_path;
    std::string out_path;
    FilterParams params;
    std::string mode = "symmetric";
};

void run_filter(const FilterOpts& o) {
    FilterParams params = o.params;
    auto mode = filter_mode_from_string(o.mode);
    if (!mode) throw UsageError("unknown filter mode: '" + o.mode + "'");
    params.mode = *mode;
    EventStream stream = parse_event_file(o.in_path, o.geo.geometry());
    auto out = open_output(o.out_path);
    write_event_text(filter(stream, params), out);
}

struct DetectOpts {
    GeometryOpts geo;
    std::string in_path;
    std::string out_path;
    bool no_filter = false;
    std::string filter_mode = "symmetric";
    PipelineOptions pipeline;
};

void run_detect(const DetectOpts& o) {
    PipelineOptions options = o.pipeline;
    options.apply_filter = !o.no_filter;
    auto mode = filter_mode_from_string(o.filter_mode);
    if (!mode) throw UsageError("unknown filter mode: '" + o.filter_mode + "'");
    options.filter.mode = *mode;

    EventStream stream = parse_event_file(o.in_path, o.geo.geometry());
    std::vector<LifetimedEvent> result = process_stream(stream, options);
    auto out = open_output(o.out_path);
    write_lifetime_csv(out, result, stream.geometry);
}

struct RenderOpts {
    GeometryOpts geo;
    std::string mode = "lifetime";
    std::string in_path;
    std::string out_path;
    double at_time = 0.0;
    double window = 0.03;
    int count = 1000;
    double tau_clamp = 0.5;
    double tau_max = 0.5;
};

void run_render(const RenderOpts& o) {
    auto out = open_output(o.out_path, true);
    if (o.mode == "lifetime" || o.mode == "accum") {
        LifetimeCsv csv = read_lifetime_csv_file(o.in_path);
        SensorGeometry geometry = csv.geometry;
        if (o.geo.width > 0 && o.geo.height > 0) geometry = o.geo.geometry();
        if (geometry.width < 1 || geometry.height < 1)
            throw UsageError("render: csv carries no geometry; pass --w/--h");
        if (o.mode == "lifetime") {
            RenderQuery q{o.at_time, o.tau_clamp};
            write_pgm(render_lifetime(csv.rows, q, geometry), out);
        } else {
            std::vector<LifetimedEvent> upto;  // accumulation is causal in --at
            for (const LifetimedEvent& le : csv.rows)
                if (le.event.t <= o.at_time) upto.push_back(le);
            write_pgm_gray(geometry, accumulate_lifetime_gray(upto, geometry, o.tau_max), out);
        }
        return;
    }
    if (o.geo.width < 1 || o.geo.height < 1)
        throw UsageError("render: --w/--h are required for event-stream input");
    EventStream stream = parse_event_file(o.in_path, o.geo.geometry());
    if (o.mode == "time") {
        write_pgm(accumulate_time(stream, o.at_time, o.window), out);
    } else if (o.mode == "count") {
        write_pgm(accumulate_count(stream, o.at_time, o.count), out);
    } else {
        throw UsageError("unknown render mode: '" + o.mode + "'");
    }
}

struct CdmOpts {
    std::string f_path;
    std::string g_path;
    CdmParams params;
    std::string out_path;
};

void run_cdm(const CdmOpts& o) {
    const EdgeImage f = read_pgm_file(o.f_path);
    const EdgeImage g = read_pgm_file(o.g_path);
    const CdmReport report = cdm(f, g, o.params);

    nlohmann::ordered_json record;
    record["score"] = report.score;
    record["matched_pairs"] = report.matched_pairs;
    record["unmatched_f"] = report.unmatched_f;
    record["unmatched_g"] = report.unmatched_g;
    record["union_size"] = report.union_size;
    record["eta"] = o.params.eta;
    if (o.out_path.empty()) {
        std::cout << record.dump() << '\n';
    } else {
        auto out = open_output(o.out_path);
        out << record.dump() << '\n';
    }
}

struct EvalLifetimeOpts {
    std::string estimates_path;
    std::string truth_path;
    std::string out_path;
    std::string hist_path;
    double bin_width = 1e-3;
};

void run_eval_lifetime(const EvalLifetimeOpts& o) {
    LifetimeCsv estimates = read_lifetime_csv_file(o.estimates_path);
    TruthMap truth = read_truth_csv_file(o.truth_path);
    LifetimeStats stats = lifetime_stats(estimates.rows, truth, o.bin_width);

    auto out = open_output(o.out_path);
    out << "mean_abs_error,scored\n"
        << format_double(stats.mean_abs_error) << ',' << stats.scored << '\n';
    if (!o.hist_path.empty()) {
        auto hist = open_output(o.hist_path);
        hist << "bin_start,bin_end,count\n";
        for (const auto& [bin, count] : stats.histogram)
            hist << format_double(bin * stats.bin_width) << ','
                 << format_double((bin + 1) * stats.bin_width) << ',' << count << '\n';
    }
}

struct SweepOpts {
    std::string mode = "global";
    std::string grid;
    std::string deltas = "0,0.25";
    SweepParams params;
    std::string out_path;
};

void run_sweep(const SweepOpts& o) {
    SweepParams params = o.params;
    if (o.mode == "global") {
        params.mode = SweepMode::global;
        params.grid = parse_grid(o.grid.empty() ? "0,0.005,0.01,0.02,0.03,0.05,0.07,0.1" : o.grid);
        params.deltas = parse_grid(o.deltas);
    } else if (o.mode == "scattered") {
        params.mode = SweepMode::scattered;
        params.grid = parse_grid(o.grid.empty() ? "0,0.1,0.25,0.3,0.35,0.4,0.45" : o.grid);
    } else {
        throw UsageError("unknown sweep mode: '" + o.mode + "'");
    }
    const std::vector<SweepRow> rows = sweep_noise_robustness(params);
    auto out = open_output(o.out_path);
    write_sweep_csv(out, params.mode, rows);
}

struct InfoOpts {
    GeometryOpts geo;
    std::string in_path;
};

void run_info(const InfoOpts& o) {
    EventStream stream = parse_event_file(o.in_path, o.geo.geometry());
    long positive = 0;
    for (const Event& e : stream.events) positive += e.p == Polarity::positive;

    nlohmann::ordered_json record;
    record["events"] = stream.events.size();
    record["width"] = stream.geometry.width;
    record["height"] = stream.geometry.height;
    record["positive"] = positive;
    record["negative"] = static_cast<long>(stream.events.size()) - positive;
    if (!stream.events.empty()) {
        record["t_first"] = stream.events.front().t;
        record["t_last"] = stream.events.back().t;
    }
    std::cout << record.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evlife: per-event lifetime estimation and edge rendering for DVS streams"};
    app.set_help_flag("--help", "print help and exit");  // keep --h free for geometry
    app.require_subcommand(1);
    app.set_config("--config");

    SynthOpts synth_opts;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic stripes sequence");
    synth_opts.geo.add(synth_cmd);
    synth_cmd->add_option("--stripes", synth_opts.stripes, "number of stripes");
    synth_cmd->add_option("--spacing", synth_opts.spacing, "stripe spacing, pixels");
    synth_cmd->add_option("--start", synth_opts.start, "first stripe column at t=0");
    synth_cmd->add_option("--velocity", synth_opts.velocity, "stripe velocity, pixels/second");
    synth_cmd->add_option("--duration", synth_opts.duration, "scene duration, seconds");
    synth_cmd->add_option("--polarity", synth_opts.polarity, "event polarity (1 or 0)");
    synth_cmd->add_option("--noise-rate", synth_opts.noise_rate,
                          "isolated noise, events/second/pixel");
    synth_cmd->add_option("--jitter-sigma", synth_opts.jitter_sigma,
                          "timestamp jitter stddev, seconds");
    synth_cmd->add_option("--seed", synth_opts.seed, "RNG seed")->envname("EVLIFE_SEED");
    synth_cmd->add_option("--out", synth_opts.out_path, "output event text file")->required();
    synth_cmd->add_option("--truth", synth_opts.truth_path, "ground-truth CSV path");
    synth_cmd->callback([&] { run_synth(synth_opts); });

    FilterOpts filter_opts;
    auto* filter_cmd = app.add_subcommand("filter", "event buffer noise filter");
    filter_opts.geo.add(filter_cmd);
    filter_cmd->add_option("--in", filter_opts.in_path, "input event text file")->required();
    filter_cmd->add_option("--out", filter_opts.out_path, "output event text file")->required();
    filter_cmd->add_option("--tau-min", filter_opts.params.tau_min, "support window, seconds");
    filter_cmd->add_option("--mode", filter_opts.mode, "causal | symmetric");
    filter_cmd->add_option("--radius", filter_opts.params.neighborhood_radius,
                           "neighborhood radius, pixels");
    filter_cmd->callback([&] { run_filter(filter_opts); });

    DetectOpts detect_opts;
    auto* detect_cmd = app.add_subcommand("detect", "estimate per-event lifetime and flow");
    detect_opts.geo.add(detect_cmd);
    detect_cmd->add_option("--in", detect_opts.in_path, "input event text file")->required();
    detect_cmd->add_option("--out", detect_opts.out_path, "output CSV path")->required();
    detect_cmd->add_flag("--no-filter", detect_opts.no_filter, "skip the event buffer filter");
    detect_cmd->add_option("--tau-min", detect_opts.pipeline.filter.tau_min,
                           "filter support window, seconds");
    detect_cmd->add_option("--filter-mode", detect_opts.filter_mode, "causal | symmetric");
    detect_cmd->add_option("--radius", detect_opts.pipeline.filter.neighborhood_radius,
                           "filter neighborhood radius");
    detect_cmd->add_option("--window", detect_opts.pipeline.ransac.window_n,
                           "fit window side, odd");
    detect_cmd->add_option("--delta", detect_opts.pipeline.ransac.delta, "intra-pixel radius");
    detect_cmd->add_option("--eps", detect_opts.pipeline.ransac.inlier_eps,
                           "inlier distance threshold");
    detect_cmd->add_option("--iterations", detect_opts.pipeline.ransac.iterations,
                           "RANSAC iterations");
    detect_cmd->add_option("--min-inliers", detect_opts.pipeline.ransac.min_inliers,
                           "required inliers beyond the center event");
    detect_cmd->add_flag("--exhaustive", detect_opts.pipeline.ransac.exhaustive,
                         "score every candidate pair");
    detect_cmd->add_option("--seed", detect_opts.pipeline.ransac.seed, "RNG seed")
        ->envname("EVLIFE_SEED");
    detect_cmd->add_option("--threads", detect_opts.pipeline.threads, "fit parallelism degree");
    detect_cmd->callback([&] { run_detect(detect_opts); });

    RenderOpts render_opts;
    auto* render_cmd = app.add_subcommand("render", "render edge images");
    render_opts.geo.add(render_cmd, false);
    render_cmd->add_option("--mode", render_opts.mode, "lifetime | time | count | accum");
    render_cmd->add_option("--in", render_opts.in_path, "lifetime CSV or event text input")
        ->required();
    render_cmd->add_option("--out", render_opts.out_path, "output PGM path")->required();
    render_cmd->add_option("--at", render_opts.at_time, "query time, seconds")->required();
    render_cmd->add_option("--window", render_opts.window, "accumulation window, seconds");
    render_cmd->add_option("--count", render_opts.count, "accumulated event count");
    render_cmd->add_option("--tau-clamp", render_opts.tau_clamp, "lifetime clamp, seconds");
    render_cmd->add_option("--tau-max", render_opts.tau_max,
                           "gray scaling range for --mode accum, seconds");
    render_cmd->callback([&] { run_render(render_opts); });

    auto* eval_cmd = app.add_subcommand("eval", "quantitative evaluation");
    eval_cmd->require_subcommand(1);

    CdmOpts cdm_opts;
    auto* cdm_cmd = eval_cmd->add_subcommand("cdm", "edge-map similarity score");
    cdm_cmd->add_option("--f", cdm_opts.f_path, "first edge PGM")->required();
    cdm_cmd->add_option("--g", cdm_opts.g_path, "second edge PGM")->required();
    cdm_cmd->add_option("--eta", cdm_opts.params.eta, "matching radius, pixels");
    cdm_cmd->add_option("--out", cdm_opts.out_path, "output path (default stdout)");
    cdm_cmd->callback([&] { run_cdm(cdm_opts); });

    EvalLifetimeOpts evlt_opts;
    auto* evlt_cmd = eval_cmd->add_subcommand("lifetime", "lifetime error statistics");
    evlt_cmd->add_option("--estimates", evlt_opts.estimates_path, "detect output CSV")
        ->required();
    evlt_cmd->add_option("--truth", evlt_opts.truth_path, "ground-truth CSV")->required();
    evlt_cmd->add_option("--out", evlt_opts.out_path, "stats CSV path")->required();
    evlt_cmd->add_option("--hist", evlt_opts.hist_path, "histogram CSV path");
    evlt_cmd->add_option("--bin-width", evlt_opts.bin_width, "histogram bin width, seconds");
    evlt_cmd->callback([&] { run_eval_lifetime(evlt_opts); });

    SweepOpts sweep_opts;
    auto add_sweep = [&](CLI::App* cmd) {
        cmd->add_option("--mode", sweep_opts.mode, "global | scattered");
        cmd->add_option("--grid", sweep_opts.grid,
                        "comma-separated sigmas (global) or deltas (scattered)");
        cmd->add_option("--deltas", sweep_opts.deltas, "comma-separated deltas (global mode)");
        cmd->add_option("--reps", sweep_opts.params.repetitions, "repetitions per grid point");
        cmd->add_option("--seed", sweep_opts.params.seed, "RNG seed")->envname("EVLIFE_SEED");
        cmd->add_option("--threads", sweep_opts.params.threads, "parallelism degree");
        cmd->add_option("--eps", sweep_opts.params.inlier_eps, "inlier distance threshold");
        cmd->add_option("--iterations", sweep_opts.params.iterations, "RANSAC iterations");
        cmd->add_option("--sigma-scattered", sweep_opts.params.scattered_sigma,
                        "timestamp noise for scattered mode, seconds");
        cmd->add_option("--scatter-fraction", sweep_opts.params.scatter_fraction,
                        "fraction of window cells perturbed");
        cmd->add_option("--out", sweep_opts.out_path, "output CSV path")->required();
        cmd->callback([&] { run_sweep(sweep_opts); });
    };
    add_sweep(app.add_subcommand("fig4", "window-fit noise sweep"));
    add_sweep(eval_cmd->add_subcommand("fig4", "window-fit noise sweep"));

    InfoOpts info_opts;
    auto* info_cmd = app.add_subcommand("info", "event file summary");
    info_opts.geo.add(info_cmd);
    info_cmd->add_option("--in", info_opts.in_path, "input event text file")->required();
    info_cmd->callback([&] { run_info(info_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
