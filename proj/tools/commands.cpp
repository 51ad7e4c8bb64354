#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <utility>

#include <CLI11.hpp>

namespace dcvaconf::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Enum names and run.json
// ---------------------------------------------------------------------------

std::string_view to_string(Method m) {
    switch (m) {
        case Method::None: return "none";
        case Method::Proposed: return "proposed";
        case Method::Unified: return "unified";
        case Method::ConfRcva: return "conf-rcva";
        case Method::DeepMagnitude: return "deep-magnitude";
    }
    return "none";
}

Method parse_method(std::string_view name) {
    for (Method m : {Method::None, Method::Proposed, Method::Unified, Method::ConfRcva, Method::DeepMagnitude})
        if (to_string(m) == name) return m;
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

std::string_view to_string(ExtractorKind k) {
    switch (k) {
        case ExtractorKind::Identity: return "identity";
        case ExtractorKind::RandomConv: return "random-conv";
        case ExtractorKind::Precomputed: return "precomputed";
    }
    return "identity";
}

ExtractorKind parse_extractor_kind(std::string_view name) {
    for (ExtractorKind k : {ExtractorKind::Identity, ExtractorKind::RandomConv, ExtractorKind::Precomputed})
        if (to_string(k) == name) return k;
    throw Error(ErrorCode::InvalidArgument, "unknown extractor kind '" + std::string(name) + "'");
}

std::string_view to_string(Aggregate a) { return a == Aggregate::Pooled ? "pooled" : "mean"; }

Aggregate parse_aggregate(std::string_view name) {
    if (name == "pooled") return Aggregate::Pooled;
    if (name == "mean") return Aggregate::Mean;
    throw Error(ErrorCode::InvalidArgument, "unknown aggregation '" + std::string(name) + "'");
}

void apply_seed(RunConfig& cfg) {
    cfg.f1.seed = derive_key(cfg.seed, 1);
    cfg.f2.seed = derive_key(cfg.seed, 2);
    cfg.smoothing.master_seed = derive_key(cfg.seed, 3);
}

ordered_json to_json(const ExtractorSpec& spec) {
    ordered_json j;
    j["kind"] = to_string(spec.kind);
    j["depth"] = spec.depth;
    j["taps"] = spec.taps;
    j["channels"] = spec.channels;
    j["kernel_size"] = spec.kernel_size;
    j["pool_size"] = spec.pool_size;
    j["feature_dir"] = spec.feature_dir ? json(spec.feature_dir->generic_string()) : json(nullptr);
    return j;
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

std::optional<fs::path> optional_path(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return fs::path(j.at(key).get<std::string>());
}

}  // namespace

ExtractorSpec extractor_from_json(const json& j, ExtractorSpec base) {
    if (j.contains("kind")) base.kind = parse_extractor_kind(j.at("kind").get<std::string>());
    read_field(j, "depth", base.depth);
    read_field(j, "taps", base.taps);
    read_field(j, "channels", base.channels);
    read_field(j, "kernel_size", base.kernel_size);
    read_field(j, "pool_size", base.pool_size);
    if (j.contains("feature_dir")) base.feature_dir = optional_path(j, "feature_dir");
    return base;
}

ordered_json to_json(const RunConfig& cfg) {
    RunConfig seeded = cfg;
    apply_seed(seeded);
    ordered_json j;
    j["method"] = to_string(cfg.method);
    j["t1"] = cfg.t1.generic_string();
    j["t2"] = cfg.t2.generic_string();
    j["reference"] = cfg.reference ? json(cfg.reference->generic_string()) : json(nullptr);
    j["seed"] = cfg.seed;
    j["derived_seeds"] = {{"f1", seeded.f1.seed}, {"f2", seeded.f2.seed}, {"noise", seeded.smoothing.master_seed}};
    j["f1"] = to_json(cfg.f1);
    j["f2"] = to_json(cfg.f2);
    j["smoothing"] = {{"sigma", cfg.smoothing.sigma},
                      {"iterations", cfg.smoothing.iterations},
                      {"conf_threshold", cfg.smoothing.conf_threshold}};
    j["rcva"] = {{"window_radius", cfg.rcva.window_radius}};
    j["aggregate"] = to_string(cfg.aggregate);
    return j;
}

RunConfig run_config_from_json(const json& j) {
    try {
        if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "run configuration must be a JSON object");
        RunConfig cfg;
        if (j.contains("method")) cfg.method = parse_method(j.at("method").get<std::string>());
        if (j.contains("t1")) cfg.t1 = j.at("t1").get<std::string>();
        if (j.contains("t2")) cfg.t2 = j.at("t2").get<std::string>();
        cfg.reference = optional_path(j, "reference");
        read_field(j, "seed", cfg.seed);
        if (j.contains("f1")) cfg.f1 = extractor_from_json(j.at("f1"), cfg.f1);
        if (j.contains("f2")) cfg.f2 = extractor_from_json(j.at("f2"), cfg.f2);
        if (j.contains("smoothing")) {
            const json& s = j.at("smoothing");
            read_field(s, "sigma", cfg.smoothing.sigma);
            read_field(s, "iterations", cfg.smoothing.iterations);
            read_field(s, "conf_threshold", cfg.smoothing.conf_threshold);
        }
        if (j.contains("rcva")) read_field(j.at("rcva"), "window_radius", cfg.rcva.window_radius);
        if (j.contains("aggregate")) cfg.aggregate = parse_aggregate(j.at("aggregate").get<std::string>());
        apply_seed(cfg);
        return cfg;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad run configuration: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Outcome {
    ChangeResult primary;
    std::optional<ConfidenceMap> confidence;
    std::optional<EnsembleCounts> counts;
    std::optional<MagnitudeMap> rho_prime;
    std::optional<double> tau_prime;
};

Outcome from_run(ConfidenceRun run) {
    return {std::move(run.primary), std::move(run.confidence), std::move(run.counts), std::move(run.secondary_magnitude),
            run.secondary_tau};
}

bool uses_ensemble(Method m) { return m == Method::Proposed || m == Method::Unified || m == Method::ConfRcva; }

std::pair<Raster, Raster> load_pair(const RunConfig& cfg) {
    Raster a = load_raster(cfg.t1);
    Raster b = load_raster(cfg.t2);
    if (!a.same_shape(b))
        throw Error(ErrorCode::ShapeMismatch, cfg.t1.string() + " and " + cfg.t2.string() + " differ in shape");
    return normalize_pair(std::move(a), std::move(b));
}

Outcome compute(const RunConfig& cfg, const Raster& x1, const Raster& x2) {
    switch (cfg.method) {
        case Method::None: return {detect_pair(cfg.f1, x1, x2), std::nullopt, std::nullopt, std::nullopt, std::nullopt};
        case Method::Proposed: return from_run(run_proposed(x1, x2, cfg.f1, cfg.f2, cfg.smoothing));
        case Method::Unified: return from_run(run_unified(x1, x2, cfg.f1, cfg.smoothing));
        case Method::ConfRcva: return from_run(run_conf_rcva(x1, x2, cfg.f1, cfg.smoothing, cfg.rcva));
        case Method::DeepMagnitude: return from_run(run_deep_magnitude(x1, x2, cfg.f1));
    }
    throw Error(ErrorCode::InvalidArgument, "unhandled method");
}

void check_invariants(const Outcome& o) {
    if (threshold_labels(o.primary.magnitude, o.primary.tau) != o.primary.labels)
        throw InvariantViolation("change map disagrees with magnitude > tau");
    if (o.confidence) {
        require_same_shape(o.primary.labels, *o.confidence, "confidence map");
        for (std::size_t p = 0; p < o.confidence->size(); ++p) {
            const Confidence c = (*o.confidence)[p];
            const Label l = o.primary.labels[p];
            if ((c == Confidence::ConfidentChanged && l != Label::Changed) ||
                (c == Confidence::ConfidentUnchanged && l != Label::Unchanged))
                throw InvariantViolation("confidence class contradicts the primary label at pixel " + std::to_string(p));
        }
    }
    if (o.counts)
        for (std::uint32_t v : o.counts->k_prime.cells())
            if (v > o.counts->k) throw InvariantViolation("ensemble count exceeds K");
}

Raster as_raster(const Grid<float>& g) {
    return Raster(g.width(), g.height(), 1, std::vector<float>(g.cells().begin(), g.cells().end()));
}

Raster as_raster(const Grid<std::uint32_t>& g) {
    std::vector<float> v(g.size());
    std::transform(g.cells().begin(), g.cells().end(), v.begin(), [](std::uint32_t c) { return static_cast<float>(c); });
    return Raster(g.width(), g.height(), 1, std::move(v));
}

void write_text(const fs::path& path, const std::string& text) {
    detail::write_file(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    const auto bytes = detail::read_file(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedHeader, path.string() + ": " + e.what());
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

void write_counts(const EnsembleCounts& counts, const SmoothingConfig& s, double k_tau, const fs::path& dir) {
    save_raster(as_raster(counts.k_prime), dir / "counts.cdr");
    ordered_json j;
    j["k"] = counts.k;
    j["sigma"] = s.sigma;
    j["k_tau"] = k_tau;
    j["master_seed"] = s.master_seed;
    write_json(dir / "counts.json", j);
}

void write_outcome(const Outcome& o, const RunConfig& cfg, const fs::path& dir) {
    render_change(o.primary.labels, dir / "change.pgm");
    save_raster(as_raster(o.primary.magnitude), dir / "magnitude.cdr");
    ordered_json tau;
    tau["tau"] = o.primary.tau;
    tau["bins"] = kDefaultOtsuBins;
    if (o.tau_prime) tau["tau_prime"] = *o.tau_prime;
    write_json(dir / "tau.json", tau);
    if (o.confidence) render_confidence(*o.confidence, dir / "confidence.ppm");
    if (o.counts) write_counts(*o.counts, cfg.smoothing, cfg.smoothing.conf_threshold, dir);
    if (o.rho_prime) save_raster(as_raster(*o.rho_prime), dir / "rho_prime.cdr");
}

void print_table(std::ostream& log, const std::string& label, const RunEvaluation& ev) {
    log << table_header() << '\n' << format_row(label, ev.all_pixels) << '\n';
    if (ev.confident) log << format_row(label + " conf.", *ev.confident) << '\n';
}

ordered_json to_json(const RunEvaluation& ev) {
    ordered_json j;
    j["all_pixels"] = to_json(ev.all_pixels);
    j["confident"] = ev.confident ? to_json(*ev.confident) : ordered_json(nullptr);
    return j;
}

}  // namespace

void execute_detect(const RunConfig& cfg_in, const fs::path& out_dir, std::ostream& log) {
    RunConfig cfg = cfg_in;
    apply_seed(cfg);
    const auto [x1, x2] = load_pair(cfg);
    const Outcome o = compute(cfg, x1, x2);
    check_invariants(o);

    ensure_dir(out_dir);
    write_outcome(o, cfg, out_dir);
    write_json(out_dir / "run.json", to_json(cfg));

    if (cfg.reference) {
        const LabelMap ref = load_labels(*cfg.reference);
        const RunEvaluation ev = evaluate_run(o.primary, o.confidence ? &*o.confidence : nullptr, ref);
        write_json(out_dir / "metrics.json", to_json(ev));
        print_table(log, std::string(to_string(cfg.method)), ev);
    }
}

// ---------------------------------------------------------------------------
// Command-line parsing
// ---------------------------------------------------------------------------

namespace {

// Options shared by `detect` and `sweep`. Each option is applied on top of
// the defaults or a loaded run.json only when given explicitly.
struct RunOptions {
    std::string config_path;
    CLI::Option* config = nullptr;
    std::string out;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> setters;
    std::vector<CLI::Option*> confidence_only;
};

template <typename T, typename Apply>
CLI::Option* bind_option(CLI::App* app, RunOptions& o, const std::string& name, const std::string& desc, Apply apply) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, desc);
    o.setters.emplace_back(opt, [value, apply](RunConfig& c) { apply(c, *value); });
    return opt;
}

void add_extractor_options(CLI::App* app, RunOptions& o, const std::string& prefix, bool confidence_only) {
    const auto pick = [prefix](RunConfig& c) -> ExtractorSpec& { return prefix == "f1" ? c.f1 : c.f2; };
    std::vector<CLI::Option*> opts;
    opts.push_back(bind_option<std::string>(app, o, "--" + prefix + "-kind", "identity | random-conv | precomputed",
                                     [pick](RunConfig& c, const std::string& v) { pick(c).kind = parse_extractor_kind(v); })
                       ->check(CLI::IsMember({"identity", "random-conv", "precomputed"})));
    opts.push_back(bind_option<std::size_t>(app, o, "--" + prefix + "-depth", "number of convolution layers",
                                     [pick](RunConfig& c, std::size_t v) { pick(c).depth = v; }));
    opts.push_back(bind_option<std::vector<std::size_t>>(app, o, "--" + prefix + "-taps", "tapped layers, 1-based, comma separated",
                                                  [pick](RunConfig& c, const std::vector<std::size_t>& v) { pick(c).taps = v; })
                       ->delimiter(','));
    opts.push_back(bind_option<std::size_t>(app, o, "--" + prefix + "-channels", "channels per layer",
                                     [pick](RunConfig& c, std::size_t v) { pick(c).channels = v; }));
    opts.push_back(bind_option<std::size_t>(app, o, "--" + prefix + "-kernel", "odd convolution kernel size",
                                     [pick](RunConfig& c, std::size_t v) { pick(c).kernel_size = v; }));
    opts.push_back(bind_option<std::size_t>(app, o, "--" + prefix + "-pool", "odd box pooling size after each layer",
                                     [pick](RunConfig& c, std::size_t v) { pick(c).pool_size = v; }));
    opts.push_back(bind_option<std::string>(app, o, "--" + prefix + "-features", "directory with t1/ and t2/ layer_<i>.cdr files",
                                     [pick](RunConfig& c, const std::string& v) { pick(c).feature_dir = fs::path(v); }));
    if (confidence_only) o.confidence_only.insert(o.confidence_only.end(), opts.begin(), opts.end());
}

void add_run_options(CLI::App* app, RunOptions& o) {
    o.config = app->add_option("--config", o.config_path, "replay a run.json; explicit flags override it");
    app->add_option("--out", o.out, "output directory")->required();
    bind_option<std::string>(app, o, "--t1", "pre-change raster (CDR, PGM or PPM)", [](RunConfig& c, const std::string& v) { c.t1 = v; });
    bind_option<std::string>(app, o, "--t2", "post-change raster", [](RunConfig& c, const std::string& v) { c.t2 = v; });
    bind_option<std::string>(app, o, "--reference", "reference change map (PGM, dark = changed)",
                      [](RunConfig& c, const std::string& v) { c.reference = fs::path(v); });
    bind_option<std::string>(app, o, "--method", "none | proposed | unified | conf-rcva | deep-magnitude",
                      [](RunConfig& c, const std::string& v) { c.method = parse_method(v); })
        ->check(CLI::IsMember({"none", "proposed", "unified", "conf-rcva", "deep-magnitude"}));
    bind_option<std::uint64_t>(app, o, "--seed", "master seed for every random draw", [](RunConfig& c, std::uint64_t v) { c.seed = v; });
    o.confidence_only.push_back(bind_option<double>(app, o, "--sigma", "noise standard deviation",
                                             [](RunConfig& c, double v) { c.smoothing.sigma = v; }));
    o.confidence_only.push_back(bind_option<std::size_t>(app, o, "--iterations", "number of noisy runs K",
                                                  [](RunConfig& c, std::size_t v) { c.smoothing.iterations = v; }));
    o.confidence_only.push_back(bind_option<double>(app, o, "--conf-threshold", "consensus fraction K_tau in (0, 1]",
                                             [](RunConfig& c, double v) { c.smoothing.conf_threshold = v; }));
    o.confidence_only.push_back(bind_option<std::size_t>(app, o, "--rcva-window", "RCVA neighborhood radius",
                                                  [](RunConfig& c, std::size_t v) { c.rcva.window_radius = v; }));
    bind_option<std::string>(app, o, "--aggregate", "pooled | mean", [](RunConfig& c, const std::string& v) { c.aggregate = parse_aggregate(v); })
        ->check(CLI::IsMember({"pooled", "mean"}));
    add_extractor_options(app, o, "f1", false);
    add_extractor_options(app, o, "f2", true);
}

RunConfig build_config(const RunOptions& o) {
    RunConfig cfg = o.config->count() ? run_config_from_json(read_json(o.config_path)) : RunConfig{};
    for (const auto& [opt, set] : o.setters)
        if (opt->count()) set(cfg);
    if (cfg.t1.empty() || cfg.t2.empty()) throw UsageError("--t1 and --t2 are required (directly or via --config)");
    if (cfg.method == Method::None)
        for (const CLI::Option* opt : o.confidence_only)
            if (opt->count()) throw UsageError(opt->get_name() + " has no effect with --method none");
    apply_seed(cfg);
    return cfg;
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

void run_sweep(const RunConfig& cfg, const std::string& parameter, const std::vector<double>& values,
               const fs::path& out_dir, std::ostream& log) {
    if (!uses_ensemble(cfg.method)) throw UsageError("sweeps need an ensemble method (proposed, unified, conf-rcva)");
    if (values.size() < 2) throw UsageError("a sweep needs at least two values");
    if (!cfg.reference) throw UsageError("a sweep needs --reference");

    const auto [x1, x2] = load_pair(cfg);
    const LabelMap ref = load_labels(*cfg.reference);
    ensure_dir(out_dir);

    ordered_json manifest = to_json(cfg);
    manifest["sweep"] = {{"parameter", parameter}, {"values", values}};
    write_json(out_dir / "run.json", manifest);

    std::string csv = "value,f1_macro,pixel_pct\n";
    log << table_header() << '\n';
    const auto record = [&](std::size_t i, double value, const Outcome& o, const RunConfig& point_cfg) {
        check_invariants(o);
        const fs::path dir = out_dir / ("point_" + std::to_string(i));
        ensure_dir(dir);
        write_outcome(o, point_cfg, dir);
        const RunEvaluation ev = evaluate_run(o.primary, &*o.confidence, ref);
        write_json(dir / "metrics.json", to_json(ev));
        char line[96];
        std::snprintf(line, sizeof line, "%s,%.4f,%.4f\n", format_value(value).c_str(), ev.confident->f1_macro,
                      ev.confident->pixel_pct);
        csv += line;
        log << format_row(parameter + "=" + format_value(value), *ev.confident) << '\n';
    };

    if (parameter == "conf_threshold") {
        for (double v : values) validate_conf_threshold(v);
        const Outcome base = compute(cfg, x1, x2);
        for (std::size_t i = 0; i < values.size(); ++i) {
            RunConfig point = cfg;
            point.smoothing.conf_threshold = values[i];
            Outcome o{base.primary, fuse_confidence(base.primary, *base.counts, values[i]), base.counts, std::nullopt,
                      std::nullopt};
            record(i, values[i], o, point);
        }
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            RunConfig point = cfg;
            point.smoothing.sigma = values[i];
            record(i, values[i], compute(point, x1, x2), point);
        }
    }
    write_text(out_dir / "curve.csv", csv);
}

struct SceneFile {
    fs::path pred;
    fs::path reference;
};

std::string scene_label(const fs::path& pred) {
    const fs::path run_json = pred / "run.json";
    if (fs::exists(run_json)) {
        const json j = read_json(run_json);
        if (j.contains("method") && j.at("method").is_string()) return j.at("method").get<std::string>();
    }
    return pred.filename().empty() ? pred.parent_path().filename().string() : pred.filename().string();
}

void run_evaluate(const std::vector<std::string>& preds, const std::vector<std::string>& refs, Aggregate mode,
                  const std::string& out_path, std::ostream& log) {
    if (preds.size() != refs.size()) throw UsageError("give one --reference per --pred directory");
    std::vector<MetricsReport> all;
    std::vector<MetricsReport> conf;
    ordered_json scenes = ordered_json::array();
    log << table_header() << '\n';
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const fs::path dir = preds[i];
        const LabelMap pred = load_labels(dir / "change.pgm");
        const LabelMap ref = load_labels(refs[i]);
        std::optional<ConfidenceMap> mask;
        if (fs::exists(dir / "confidence.ppm")) mask = load_confidence(dir / "confidence.ppm");
        const RunEvaluation ev = evaluate_run(pred, mask ? &*mask : nullptr, ref);
        const std::string label = preds.size() > 1 ? dir.filename().string() : scene_label(dir);
        log << format_row(label, ev.all_pixels) << '\n';
        if (ev.confident) log << format_row(label + " conf.", *ev.confident) << '\n';
        all.push_back(ev.all_pixels);
        if (ev.confident) conf.push_back(*ev.confident);
        ordered_json s = to_json(ev);
        s["pred"] = dir.generic_string();
        s["reference"] = refs[i];
        scenes.push_back(std::move(s));
    }

    ordered_json result;
    result["scenes"] = scenes;
    if (preds.size() > 1) {
        const MetricsReport agg_all = aggregate(all, mode);
        const std::string name(to_string(mode));
        log << format_row(name, agg_all) << '\n';
        ordered_json agg;
        agg["mode"] = name;
        agg["all_pixels"] = to_json(agg_all);
        agg["confident"] = nullptr;
        if (conf.size() == preds.size()) {
            const MetricsReport agg_conf = aggregate(conf, mode);
            log << format_row(name + " conf.", agg_conf) << '\n';
            agg["confident"] = to_json(agg_conf);
        }
        result["aggregate"] = agg;
    }
    write_json(out_path.empty() ? fs::path(preds.front()) / "metrics.json" : fs::path(out_path), result);
}

void run_synth(const SceneSpec& spec, const fs::path& out_dir) {
    const Scene scene = generate(spec);
    ensure_dir(out_dir);
    save_raster(scene.t1, out_dir / "t1.cdr");
    save_raster(scene.t2, out_dir / "t2.cdr");
    render_change(scene.reference, out_dir / "reference.pgm");
    ordered_json j;
    j["width"] = spec.width;
    j["height"] = spec.height;
    j["bands"] = spec.bands;
    j["change_fraction"] = spec.change_fraction;
    j["change_contrast"] = spec.change_contrast;
    j["texture_scale"] = spec.texture_scale;
    j["sensor_noise"] = spec.sensor_noise;
    j["misregistration_shift"] = spec.misregistration_shift;
    j["seed"] = spec.seed;
    write_json(out_dir / "spec.json", j);
}

void run_render(const fs::path& in, const fs::path& out, std::size_t band) {
    const Raster r = load_raster(in);
    if (band >= r.bands())
        throw Error(ErrorCode::InvalidArgument,
                    in.string() + " has " + std::to_string(r.bands()) + " band(s); band " + std::to_string(band) + " requested");
    const auto b = r.band(band);
    render_scalar(Grid<float>(r.width(), r.height(), std::vector<float>(b.begin(), b.end())), out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bi-temporal change detection with per-pixel confidence"};
    app.require_subcommand(1);
    app.fallthrough();
    std::size_t threads = 0;
    app.add_option("--threads", threads, "worker threads, 0 = all hardware threads");

    RunOptions detect_opts;
    CLI::App* detect = app.add_subcommand("detect", "run one detection and write its maps");
    add_run_options(detect, detect_opts);

    RunOptions sweep_opts;
    std::string sweep_param;
    std::vector<double> sweep_values;
    CLI::App* sweep = app.add_subcommand("sweep", "evaluate a curve over K_tau or sigma");
    add_run_options(sweep, sweep_opts);
    sweep->add_option("--param", sweep_param, "conf_threshold | sigma")
        ->required()
        ->check(CLI::IsMember({"conf_threshold", "sigma"}));
    sweep->add_option("--values", sweep_values, "comma separated values")->required()->delimiter(',');

    std::vector<std::string> eval_preds;
    std::vector<std::string> eval_refs;
    std::string eval_aggregate = "pooled";
    std::string eval_out;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score prediction directories against references");
    evaluate->add_option("--pred", eval_preds, "directory holding change.pgm and optionally confidence.ppm")->required();
    evaluate->add_option("--reference", eval_refs, "reference map, one per --pred")->required();
    evaluate->add_option("--aggregate", eval_aggregate, "pooled | mean")->check(CLI::IsMember({"pooled", "mean"}));
    evaluate->add_option("--out", eval_out, "metrics.json path (default: first --pred directory)");

    SceneSpec scene;
    std::string synth_out;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--width", scene.width, "pixels")->capture_default_str();
    synth->add_option("--height", scene.height, "pixels")->capture_default_str();
    synth->add_option("--bands", scene.bands, "band count")->capture_default_str();
    synth->add_option("--change-fraction", scene.change_fraction, "target changed fraction")->capture_default_str();
    synth->add_option("--change-contrast", scene.change_contrast, "shift inside changed regions")->capture_default_str();
    synth->add_option("--texture-scale", scene.texture_scale, "texture correlation length")->capture_default_str();
    synth->add_option("--sensor-noise", scene.sensor_noise, "per-date noise sigma")->capture_default_str();
    synth->add_option("--shift", scene.misregistration_shift, "horizontal misregistration of t2")->capture_default_str();
    synth->add_option("--seed", scene.seed, "scene seed")->capture_default_str();

    std::string render_in;
    std::string render_out;
    std::size_t render_band = 0;
    CLI::App* render = app.add_subcommand("render", "write a grayscale PGM of one raster band");
    render->add_option("--in", render_in, "input raster")->required();
    render->add_option("--out", render_out, "output PGM")->required();
    render->add_option("--band", render_band, "band index, 0-based")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    set_max_threads(threads);
    try {
        if (detect->parsed()) {
            execute_detect(build_config(detect_opts), detect_opts.out, out);
        } else if (sweep->parsed()) {
            run_sweep(build_config(sweep_opts), sweep_param, sweep_values, sweep_opts.out, out);
        } else if (evaluate->parsed()) {
            run_evaluate(eval_preds, eval_refs, parse_aggregate(eval_aggregate), eval_out, out);
        } else if (synth->parsed()) {
            run_synth(scene, synth_out);
        } else if (render->parsed()) {
            run_render(render_in, render_out, render_band);
        }
    } catch (const InvariantViolation& e) {
        err << "invariant violation: " << e.what() << '\n';
        return kExitInvariant;
    } catch (const UsageError& e) {
        err << "usage: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitOk;
}

}  // namespace dcvaconf::cli
