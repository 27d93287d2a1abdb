#include "radreg_cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "radreg/io.hpp"
#include "radreg/metrics.hpp"
#include "radreg/synth.hpp"

namespace radreg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- helpers

std::vector<std::string> split(const std::string &line, char sep = ',') {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

void write_json(const fs::path &path, const json &doc) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    os << doc.dump(2) << '\n';
}

json read_json(const fs::path &path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot read '" + path.string() + "'");
    try {
        return json::parse(is);
    } catch (const json::parse_error &e) {
        throw UsageError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

/// Makes dir usable as an output directory. Existing content is an error
/// unless force is set, in which case only the entries this command writes
/// (names, or names starting with a prefix ending in '*') are removed.
void prepare_output(const fs::path &dir, bool force, const std::vector<std::string> &owned) {
    if (dir.empty()) throw UsageError("an output directory is required (--out)");
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw UsageError("'" + dir.string() + "' exists and is not a directory");
        if (!fs::is_empty(dir)) {
            if (!force) throw UsageError("'" + dir.string() + "' is not empty; use --force to overwrite");
            for (const auto &entry : fs::directory_iterator(dir)) {
                const std::string name = entry.path().filename().string();
                const bool mine = std::any_of(owned.begin(), owned.end(), [&](const std::string &o) {
                    return o.back() == '*' ? name.rfind(o.substr(0, o.size() - 1), 0) == 0 : name == o;
                });
                if (mine) fs::remove_all(entry.path());
            }
        }
    }
    fs::create_directories(dir);
}

Image make_phantom(const RunConfig &cfg) {
    if (cfg.phantom == "disk") return disk(cfg.size, 0.5);
    return shepp_logan(cfg.size);
}

RegistrationConfig registration_config(const RunConfig &cfg, MeasureKind kind, double alpha) {
    RegistrationConfig rc;
    rc.kind = kind;
    rc.alpha = alpha;
    rc.elastic = cfg.elastic;
    rc.optimizer = cfg.optimizer;
    rc.optimizer.timing = cfg.timing;
    rc.n_omega = cfg.n_omega;
    return rc;
}

json evaluation_json(const Evaluation &e) {
    return {{"value", e.value}, {"data", e.data}, {"elastic", e.elastic}};
}

json run_json(const RegistrationRun &run) {
    return {{"measure", std::string(to_string(run.kind))},
            {"alpha", run.alpha},
            {"scale", run.scale},
            {"data_raw_initial", run.data_raw_initial},
            {"status", std::string(to_string(run.result.status))},
            {"message", run.result.message},
            {"iterations", run.result.iterations()},
            {"evaluations", run.result.evaluations},
            {"initial", evaluation_json(run.result.initial)},
            {"final", evaluation_json(run.result.final)},
            {"seconds", run.seconds}};
}

// ---------------------------------------------------------------- options

struct Overrides {
    std::string config;
    std::string measure;
    std::string alpha;
    std::string mesh;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<int> max_iters;
    std::optional<int> n_omega;
    std::optional<int> size;
    std::optional<int> count;
    std::optional<double> noise;
    std::string noise_apply;
    std::string phantom;
    bool no_timing = false;
    bool force = false;
    bool verbose = false;
    bool quiet = false;
};

void add_run_options(CLI::App *app, Overrides &ov) {
    app->add_option("-c,--config", ov.config, "JSON run configuration");
    app->add_option("-m,--measure", ov.measure, "ssd, rssd, rsharp, a comma-separated list, or all");
    app->add_option("-a,--alpha", ov.alpha, "Regularisation weight(s), comma-separated, or paper-best");
    app->add_option("--mesh", ov.mesh, "Mesh preset: coarse or fine");
    app->add_option("--max-iters", ov.max_iters, "Optimiser iteration limit");
    app->add_option("--n-omega", ov.n_omega, "Number of projection angles over [0, pi)");
    app->add_flag("--no-timing", ov.no_timing, "Write 0 for all wall-clock columns (byte-reproducible outputs)");
}

void add_common_options(CLI::App *app, Overrides &ov) {
    app->add_option("-o,--out", ov.out, "Output directory")->required();
    app->add_flag("-f,--force", ov.force, "Overwrite outputs in a non-empty output directory");
    app->add_flag("-v,--verbose", ov.verbose, "Debug logging");
    app->add_flag("-q,--quiet", ov.quiet, "Warnings and errors only");
}

RunConfig resolve_config(const Overrides &ov) {
    RunConfig cfg = ov.config.empty() ? RunConfig{} : load_config(ov.config);
    if (const char *env = std::getenv("RADREG_SEED"); env && *env) {
        try {
            std::size_t used = 0;
            cfg.seed = std::stoull(env, &used);
            if (env[used] != '\0') throw std::invalid_argument(env);
        } catch (const std::exception &) {
            throw UsageError(std::string("RADREG_SEED is not an unsigned integer: ") + env);
        }
    }
    if (!ov.measure.empty()) cfg.measures = parse_measure_list(ov.measure);
    if (!ov.alpha.empty()) parse_alpha_list(ov.alpha, cfg);
    if (!ov.mesh.empty()) cfg.mesh = ov.mesh;
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.jobs) cfg.jobs = *ov.jobs;
    if (ov.max_iters) cfg.optimizer.max_iters = *ov.max_iters;
    if (ov.n_omega) cfg.n_omega = *ov.n_omega;
    if (ov.size) cfg.size = *ov.size;
    if (ov.count) cfg.count = *ov.count;
    if (ov.noise) cfg.noise.stddev = *ov.noise;
    if (!ov.noise_apply.empty()) {
        const std::string &t = ov.noise_apply;
        if (t != "both" && t != "reference" && t != "template" && t != "none") {
            throw UsageError("--noise-apply: expected both, reference, template or none");
        }
        cfg.noise.reference = t == "both" || t == "reference";
        cfg.noise.tpl = t == "both" || t == "template";
    }
    if (!ov.phantom.empty()) cfg.phantom = ov.phantom;
    if (ov.no_timing) cfg.timing = false;
    cfg.validate();
    return cfg;
}

void setup_logging(const Overrides &ov) {
    auto logger = spdlog::get("radreg");
    if (!logger) {
        logger = spdlog::stderr_color_mt("radreg");
        spdlog::set_default_logger(logger);
        spdlog::set_pattern("[%l] %v");
    }
    spdlog::set_level(ov.verbose ? spdlog::level::debug : ov.quiet ? spdlog::level::warn : spdlog::level::info);
}

// ---------------------------------------------------------------- register

struct RegisterArgs {
    std::string reference;
    std::string tpl;
    std::string truth;
};

int cmd_register(const RegisterArgs &a, const Overrides &ov) {
    const RunConfig cfg = resolve_config(ov);
    if (cfg.measures.size() != 1) throw UsageError("register takes exactly one measure");
    const MeasureKind kind = cfg.measures.front();
    const std::vector<double> alphas = cfg.alphas_for(kind);
    if (alphas.size() != 1) throw UsageError("register takes exactly one alpha");

    // Inputs are validated before anything is written.
    Image reference, tpl;
    try {
        reference = read_image(a.reference);
        tpl = read_image(a.tpl);
    } catch (const std::exception &e) {
        throw UsageError(e.what());
    }
    if (!reference.same_shape(tpl)) throw UsageError("reference and template sizes differ");
    std::optional<PixelField> target;
    if (!a.truth.empty()) {
        try {
            target = read_pixel_field_column(a.truth, "target", reference.size());
        } catch (const std::exception &e) {
            throw UsageError(e.what());
        }
    }
    const fs::path out = ov.out;
    const std::vector<std::string> outputs{"field.csv",     "field_pixels.csv", "warped.png",    "difference.png",
                                           "jacobian.csv",  "jacobian.png",     "trace.csv",     "manifest.json"};
    if (fs::exists(out) && !fs::is_directory(out)) throw UsageError("'" + out.string() + "' is not a directory");
    if (fs::exists(out) && !fs::is_empty(out) && !ov.force) {
        throw UsageError("'" + out.string() + "' is not empty; use --force to overwrite");
    }

    const auto mesh = std::make_shared<const TriMesh>(mesh_preset(cfg.mesh, reference.extent()));
    spdlog::info("registering {} to {} with {} (alpha {})", a.tpl, a.reference, to_string(kind), alphas.front());
    const RegistrationRun run = register_images(reference, tpl, mesh, registration_config(cfg, kind, alphas.front()));
    const int n = reference.size();
    const double rmse_initial = rmse(reference, tpl);
    const double rmse_final = rmse(reference, run.warped);
    spdlog::info("{} after {} iterations: RMSE {:.4g} -> {:.4g}", to_string(run.result.status),
                 run.result.iterations(), rmse_initial, rmse_final);

    prepare_output(out, ov.force, outputs);
    const PixelField pixels = rasterize_field(run.field, n);
    write_nodal_field_csv(out / "field.csv", run.field);
    write_pixel_field_csv(out / "field_pixels.csv", pixels, n, reference.extent());
    write_png(out / "warped.png", run.warped);
    Image diff = run.warped - reference;
    for (double &v : diff.pixels()) v = std::abs(v);
    write_png(out / "difference.png", diff);
    write_area_ratio_csv(out / "jacobian.csv", area_ratios(run.field));
    write_area_ratio_png(out / "jacobian.png", run.field, n);
    write_trace_csv(out / "trace.csv", run.result.trace);

    json manifest = run_json(run);
    manifest["reference"] = a.reference;
    manifest["template"] = a.tpl;
    manifest["size"] = n;
    manifest["mesh"] = {{"preset", cfg.mesh}, {"nodes", mesh->node_count()}, {"triangles", mesh->triangle_count()}};
    const ProjectorGeometry geom = ProjectorGeometry::standard(n, reference.extent(), cfg.n_omega);
    manifest["projector"] = {{"n_s", geom.n_s}, {"n_omega", geom.n_omega}, {"s_min", geom.s_min}, {"s_max", geom.s_max}};
    manifest["config"] = config_to_json(cfg);
    manifest["rmse_initial"] = rmse_initial;
    manifest["rmse_final"] = rmse_final;
    manifest["success"] = rmse_final < cfg.success_threshold;
    if (target) {
        const auto mask = object_mask(reference, cfg.mask_threshold);
        const FieldNorm fn = field_diff_norm(pixels, *target, std::span<const std::uint8_t>(mask));
        manifest["field_norm"] = fn.value;
        manifest["field_norm_pixels"] = fn.pixels;
    } else {
        manifest["field_norm"] = nullptr;
    }
    json files = json::array();
    for (const std::string &f : outputs) files.push_back(f);
    manifest["outputs"] = files;
    write_json(out / "manifest.json", manifest);
    return run.result.status == OptimizerStatus::NonFinite ? kExitRunFailure : kExitOk;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    bool identity = false;
};

std::string case_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "case_%03d", index);
    return buf;
}

json deformation_json(const DeformationSpec &d) {
    return {{"scale_min", d.scale_min},
            {"scale_max", d.scale_max},
            {"rotation_max_deg", d.rotation_max_deg},
            {"translation_max_px", d.translation_max / kReferencePixel},
            {"local_nodes", d.local_nodes},
            {"local_amplitude_px", d.local_amplitude / kReferencePixel}};
}

int cmd_generate(const GenerateArgs &a, const Overrides &ov) {
    const RunConfig cfg = resolve_config(ov);
    const fs::path out = ov.out;
    prepare_output(out, ov.force, {"cases.json", "case_*"});
    const Image reference = make_phantom(cfg);
    const std::vector<std::uint64_t> seeds = derive_seeds(cfg.seed, cfg.count);
    json index = {{"master_seed", cfg.seed},
                  {"count", cfg.count},
                  {"size", cfg.size},
                  {"phantom", cfg.phantom},
                  {"identity", a.identity},
                  {"deformation", deformation_json(cfg.deformation)},
                  {"cases", json::array()}};
    for (int c = 0; c < cfg.count; ++c) {
        DeformationSpec spec = a.identity ? DeformationSpec::identity(seeds[c]) : cfg.deformation;
        spec.seed = seeds[c];
        const SyntheticCase sc = make_case(reference, spec);
        const SyntheticDeformation def = random_deformation(spec, reference.extent());
        const std::string name = case_name(c);
        const fs::path dir = out / name;
        fs::create_directories(dir);
        write_png(dir / "R.png", sc.clean_reference);
        write_png(dir / "T.png", sc.clean_template);
        write_pixel_fields_csv(dir / "truth.csv", sc.truth, sc.target, "truth", "target", reference.size(),
                               reference.extent());
        const Mat2 &m = def.affine().linear;
        write_json(dir / "case.json",
                   {{"case_id", name},
                    {"seed", spec.seed},
                    {"size", cfg.size},
                    {"extent", reference.extent()},
                    {"phantom", cfg.phantom},
                    {"deformation", deformation_json(spec)},
                    {"affine",
                     {{"linear", {m.a11, m.a12, m.a21, m.a22}},
                      {"translation", {def.affine().translation.x, def.affine().translation.y}}}},
                    {"rmse_initial", rmse(sc.clean_reference, sc.clean_template)}});
        index["cases"].push_back({{"case_id", name}, {"seed", spec.seed}});
        spdlog::debug("wrote {}", dir.string());
    }
    write_json(out / "cases.json", index);
    spdlog::info("generated {} cases in {}", cfg.count, out.string());
    return kExitOk;
}

// ---------------------------------------------------------------- batch

struct LoadedCase {
    std::string id;
    std::uint64_t seed = 0;
    Image clean_reference;
    Image clean_template;
    Image reference;
    Image tpl;
    PixelField target;
    std::vector<std::uint8_t> mask;
};

std::vector<LoadedCase> load_cases(const fs::path &dir, const RunConfig &cfg) {
    if (!fs::is_directory(dir)) throw UsageError("cases directory '" + dir.string() + "' does not exist");
    std::vector<fs::path> dirs;
    for (const auto &entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "case.json")) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw UsageError("no case directories (with case.json) under '" + dir.string() + "'");
    std::vector<LoadedCase> cases;
    for (const fs::path &d : dirs) {
        LoadedCase c;
        c.id = d.filename().string();
        const json meta = read_json(d / "case.json");
        try {
            c.seed = meta.at("seed").get<std::uint64_t>();
            c.clean_reference = read_image(d / "R.png");
            c.clean_template = read_image(d / "T.png");
            if (!c.clean_reference.same_shape(c.clean_template)) throw std::runtime_error("R and T sizes differ");
            c.target = read_pixel_field_column(d / "truth.csv", "target", c.clean_reference.size());
        } catch (const UsageError &) {
            throw;
        } catch (const std::exception &e) {
            throw UsageError("case '" + c.id + "': " + e.what());
        }
        c.reference = c.clean_reference;
        c.tpl = c.clean_template;
        if (cfg.noise.active()) {
            if (cfg.noise.reference) {
                c.reference = add_noise(c.clean_reference, {cfg.noise.mean, cfg.noise.stddev, noise_seed(c.seed, false)});
            }
            if (cfg.noise.tpl) {
                c.tpl = add_noise(c.clean_template, {cfg.noise.mean, cfg.noise.stddev, noise_seed(c.seed, true)});
            }
        }
        c.mask = object_mask(c.clean_reference, cfg.mask_threshold);
        cases.push_back(std::move(c));
    }
    return cases;
}

struct Task {
    const LoadedCase *c = nullptr;
    MeasureKind kind = MeasureKind::RSSD;
    double alpha = 0.0;
    fs::path dir;
};

struct TaskResult {
    BatchRow row;
    std::vector<IterationRecord> trace;
    bool failed = false;
};

TaskResult run_task(const Task &t, const RunConfig &cfg, const std::shared_ptr<const TriMesh> &mesh) {
    TaskResult r;
    r.row.measure = std::string(to_string(t.kind));
    r.row.alpha = t.alpha;
    r.row.case_id = t.c->id;
    r.row.rmse_initial = rmse(t.c->clean_reference, t.c->clean_template);
    const RegistrationRun run = register_images(t.c->reference, t.c->tpl, mesh, registration_config(cfg, t.kind, t.alpha));
    const int n = t.c->clean_reference.size();
    const PixelField pixels = rasterize_field(run.field, n);
    // Metrics always use the noise-free images.
    const Image warped = warp(t.c->clean_template, pixels);
    const FieldNorm fn = field_diff_norm(pixels, t.c->target, std::span<const std::uint8_t>(t.c->mask));
    r.row.rmse_final = rmse(t.c->clean_reference, warped);
    r.row.field_norm = fn.value;
    r.row.iters = run.result.iterations();
    r.row.success = r.row.rmse_final < cfg.success_threshold;
    r.row.seconds = run.seconds;
    r.trace = run.result.trace;
    r.failed = run.result.status == OptimizerStatus::NonFinite;

    write_nodal_field_csv(t.dir / "field.csv", run.field);
    write_trace_csv(t.dir / "trace.csv", run.result.trace);
    json doc = run_json(run);
    doc["case_id"] = t.c->id;
    doc["rmse_initial"] = r.row.rmse_initial;
    doc["rmse_final"] = r.row.rmse_final;
    doc["field_norm"] = fn.value;
    doc["field_norm_pixels"] = fn.pixels;
    doc["success"] = r.row.success;
    write_json(t.dir / "run.json", doc);
    return r;
}

int cmd_batch(const std::string &cases_dir, const Overrides &ov) {
    const RunConfig cfg = resolve_config(ov);
    const std::vector<LoadedCase> cases = load_cases(cases_dir, cfg);
    const fs::path out = ov.out;
    prepare_output(out, ov.force, {"summary.csv", "stats.csv", "convergence.csv", "batch.json", "runs"});

    const auto mesh = std::make_shared<const TriMesh>(mesh_preset(cfg.mesh, cases.front().clean_reference.extent()));
    std::vector<Task> tasks;
    for (MeasureKind kind : cfg.measures) {
        for (double alpha : cfg.alphas_for(kind)) {
            for (const LoadedCase &c : cases) {
                const fs::path dir = out / "runs" / c.id / (std::string(to_string(kind)) + "_" + alpha_label(alpha));
                fs::create_directories(dir);
                tasks.push_back({&c, kind, alpha, dir});
            }
        }
    }

    unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs) : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size()));
    spdlog::info("{} runs ({} cases) on {} worker(s)", tasks.size(), cases.size(), jobs);

    std::vector<TaskResult> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    const auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
            const Task &t = tasks[i];
            try {
                results[i] = run_task(t, cfg, mesh);
            } catch (const std::exception &e) {
                spdlog::error("{} {} alpha {}: {}", t.c->id, to_string(t.kind), t.alpha, e.what());
                TaskResult &r = results[i];
                r.failed = true;
                r.row = {std::string(to_string(t.kind)), t.alpha, t.c->id, rmse(t.c->clean_reference, t.c->clean_template),
                         std::nan(""), std::nan(""), -1, false, 0.0};
            }
            const std::size_t k = ++done;
            spdlog::debug("[{}/{}] {} {} rmse {:.4g}", k, tasks.size(), t.c->id, to_string(t.kind),
                          results[i].row.rmse_final);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (std::thread &th : pool) th.join();

    std::vector<BatchRow> rows;
    std::vector<TracedRun> traced;
    int failures = 0;
    for (const TaskResult &r : results) {
        rows.push_back(r.row);
        if (r.failed) ++failures;
        traced.push_back({r.row.measure, r.row.alpha, r.row.success, r.trace});
    }
    write_summary_csv(out / "summary.csv", rows);
    write_stats_csv(out / "stats.csv", rows);
    write_convergence_csv(out / "convergence.csv", convergence_rows(traced));
    json meta = {{"cases_dir", cases_dir}, {"config", config_to_json(cfg)}, {"cases", json::array()}};
    for (const LoadedCase &c : cases) meta["cases"].push_back({{"case_id", c.id}, {"seed", c.seed}});
    write_json(out / "batch.json", meta);

    for (MeasureKind kind : cfg.measures) {
        for (double alpha : cfg.alphas_for(kind)) {
            int ok = 0, total = 0;
            for (const BatchRow &r : rows) {
                if (r.measure == to_string(kind) && r.alpha == alpha) {
                    ++total;
                    ok += r.success;
                }
            }
            spdlog::info("{} alpha {}: {}/{} successful", to_string(kind), alpha, ok, total);
        }
    }
    if (failures) spdlog::warn("{} run(s) failed", failures);
    return failures ? kExitRunFailure : kExitOk;
}

// ---------------------------------------------------------------- report

int cmd_report(const std::string &batch_dir, const std::string &out_path) {
    const fs::path summary = fs::path(batch_dir) / "summary.csv";
    if (!fs::exists(summary)) throw UsageError("no summary.csv in '" + batch_dir + "'");
    std::vector<BatchRow> rows;
    try {
        rows = read_summary_csv(summary);
    } catch (const std::exception &e) {
        throw UsageError(e.what());
    }
    if (!out_path.empty()) write_stats_csv(out_path, rows);

    std::vector<std::pair<std::string, double>> groups;
    for (const BatchRow &r : rows) {
        if (std::find(groups.begin(), groups.end(), std::make_pair(r.measure, r.alpha)) == groups.end()) {
            groups.emplace_back(r.measure, r.alpha);
        }
    }
    std::printf("%-8s %10s %6s %9s %12s %12s %12s %10s\n", "measure", "alpha", "runs", "success", "rmse_median",
                "rmse_q1", "rmse_q3", "iters_med");
    for (const auto &[measure, alpha] : groups) {
        std::vector<RunMetrics> runs;
        for (const BatchRow &r : rows) {
            if (r.measure == measure && r.alpha == alpha && r.iters >= 0) {
                runs.push_back({r.rmse_initial, r.rmse_final, r.field_norm, r.iters, r.success, r.seconds});
            }
        }
        if (runs.empty()) continue;
        const BatchSummary s = batch_stats(runs);
        std::printf("%-8s %10s %6zu %5zu/%-3zu %12.4g %12.4g %12.4g %10.1f\n", measure.c_str(),
                    alpha_label(alpha).c_str(), s.count, s.successes, s.count, s.rmse_final.median, s.rmse_final.q1,
                    s.rmse_final.q3, s.iterations.median);
    }
    return kExitOk;
}

} // namespace

// ---------------------------------------------------------------- CSV schemas

std::string alpha_label(double alpha) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", alpha);
    return buf;
}

void write_summary_csv(const fs::path &path, const std::vector<BatchRow> &rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    os << "measure,alpha,case_id,rmse_initial,rmse_final,field_norm,iters,success,seconds\n";
    for (const BatchRow &r : rows) {
        os << r.measure << ',' << format_double(r.alpha) << ',' << r.case_id << ',' << format_double(r.rmse_initial)
           << ',' << format_double(r.rmse_final) << ',' << format_double(r.field_norm) << ',' << r.iters << ','
           << (r.success ? 1 : 0) << ',' << format_double(r.seconds) << '\n';
    }
}

std::vector<BatchRow> read_summary_csv(const fs::path &path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read '" + path.string() + "'");
    std::string line;
    std::getline(is, line);
    if (line != "measure,alpha,case_id,rmse_initial,rmse_final,field_norm,iters,success,seconds") {
        throw std::runtime_error("'" + path.string() + "' does not have the summary header");
    }
    std::vector<BatchRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != 9) throw std::runtime_error("'" + path.string() + "': malformed row '" + line + "'");
        BatchRow r;
        r.measure = cells[0];
        r.alpha = std::stod(cells[1]);
        r.case_id = cells[2];
        r.rmse_initial = std::stod(cells[3]);
        r.rmse_final = std::stod(cells[4]);
        r.field_norm = std::stod(cells[5]);
        r.iters = std::stoi(cells[6]);
        r.success = cells[7] == "1";
        r.seconds = std::stod(cells[8]);
        rows.push_back(r);
    }
    return rows;
}

void write_stats_csv(const fs::path &path, const std::vector<BatchRow> &rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    os << "measure,alpha,runs,failed,successes,success_rate,rmse_min,rmse_q1,rmse_median,rmse_q3,rmse_max,"
          "field_norm_q1,field_norm_median,field_norm_q3,iters_q1,iters_median,iters_q3,iters_success_median\n";
    std::vector<std::pair<std::string, double>> groups;
    for (const BatchRow &r : rows) {
        if (std::find(groups.begin(), groups.end(), std::make_pair(r.measure, r.alpha)) == groups.end()) {
            groups.emplace_back(r.measure, r.alpha);
        }
    }
    for (const auto &[measure, alpha] : groups) {
        std::vector<RunMetrics> runs;
        std::vector<double> success_iters;
        int failed = 0;
        for (const BatchRow &r : rows) {
            if (r.measure != measure || r.alpha != alpha) continue;
            if (r.iters < 0) {
                ++failed;
                continue;
            }
            runs.push_back({r.rmse_initial, r.rmse_final, r.field_norm, r.iters, r.success, r.seconds});
            if (r.success) success_iters.push_back(r.iters);
        }
        os << measure << ',' << format_double(alpha) << ',' << runs.size() + failed << ',' << failed << ',';
        if (runs.empty()) {
            os << "0,0,,,,,,,,,,,,\n";
            continue;
        }
        const BatchSummary s = batch_stats(runs);
        const auto d = [](const Distribution &x, bool extremes) {
            std::string t;
            if (extremes) t += format_double(x.min) + ',';
            t += format_double(x.q1) + ',' + format_double(x.median) + ',' + format_double(x.q3);
            if (extremes) t += ',' + format_double(x.max);
            return t;
        };
        os << s.successes << ',' << format_double(s.success_rate) << ',' << d(s.rmse_final, true) << ','
           << d(s.field_norm, false) << ',' << d(s.iterations, false) << ','
           << (success_iters.empty() ? std::string() : format_double(distribution(success_iters).median)) << '\n';
    }
}

std::vector<ConvergenceRow> convergence_rows(const std::vector<TracedRun> &runs) {
    std::vector<std::pair<std::string, double>> groups;
    for (const TracedRun &r : runs) {
        if (std::find(groups.begin(), groups.end(), std::make_pair(r.measure, r.alpha)) == groups.end()) {
            groups.emplace_back(r.measure, r.alpha);
        }
    }
    std::vector<ConvergenceRow> out;
    for (const auto &[measure, alpha] : groups) {
        std::vector<const TracedRun *> ok;
        std::size_t longest = 0;
        for (const TracedRun &r : runs) {
            if (r.measure == measure && r.alpha == alpha && r.success && !r.trace.empty()) {
                ok.push_back(&r);
                longest = std::max(longest, r.trace.size());
            }
        }
        for (std::size_t it = 1; it <= longest; ++it) {
            double sum = 0.0;
            int pending = 0;
            for (const TracedRun *r : ok) {
                sum += r->trace[std::min(it, r->trace.size()) - 1].data;
                if (r->trace.size() > it) ++pending;
            }
            out.push_back({measure, alpha, static_cast<int>(it), sum / static_cast<double>(ok.size()), pending});
        }
    }
    return out;
}

void write_convergence_csv(const fs::path &path, const std::vector<ConvergenceRow> &rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    os << "measure,alpha,iteration,mean_data,pending\n";
    for (const ConvergenceRow &r : rows) {
        os << r.measure << ',' << format_double(r.alpha) << ',' << r.iteration << ',' << format_double(r.mean_data)
           << ',' << r.pending << '\n';
    }
}

void write_trace_csv(const fs::path &path, const std::vector<IterationRecord> &trace) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    os << "iter,value,data,elastic,grad_inf,step,evaluations,seconds\n";
    for (const IterationRecord &r : trace) {
        os << r.iter << ',' << format_double(r.value) << ',' << format_double(r.data) << ','
           << format_double(r.elastic) << ',' << format_double(r.grad_inf) << ',' << format_double(r.step) << ','
           << r.evaluations << ',' << format_double(r.seconds) << '\n';
    }
}

// ---------------------------------------------------------------- entry

int run_cli(const std::vector<std::string> &args) {
    CLI::App app{"Deformable image registration with Radon-transform similarity measures"};
    app.require_subcommand(1);
    Overrides ov;

    RegisterArgs reg;
    CLI::App *c_reg = app.add_subcommand("register", "Register a template image to a reference image");
    c_reg->add_option("reference", reg.reference, "Reference image (PNG or PGM)")->required();
    c_reg->add_option("template", reg.tpl, "Template image (PNG or PGM)")->required();
    c_reg->add_option("--truth", reg.truth, "truth.csv of a generated case, for the field-error norm");
    add_run_options(c_reg, ov);
    add_common_options(c_reg, ov);

    GenerateArgs gen;
    CLI::App *c_gen = app.add_subcommand("generate", "Write synthetic cases (random deformations of a phantom)");
    c_gen->add_option("-n,--count", ov.count, "Number of cases");
    c_gen->add_option("-s,--seed", ov.seed, "Master seed (overrides RADREG_SEED)");
    c_gen->add_option("--size", ov.size, "Image size in pixels");
    c_gen->add_option("--phantom", ov.phantom, "shepp-logan or disk");
    c_gen->add_flag("--identity", gen.identity, "Identity deformations (T == R)");
    c_gen->add_option("-c,--config", ov.config, "JSON run configuration");
    add_common_options(c_gen, ov);

    std::string cases_dir;
    CLI::App *c_batch = app.add_subcommand("batch", "Register every case for each measure and alpha");
    c_batch->add_option("cases", cases_dir, "Directory written by generate")->required();
    c_batch->add_option("--noise", ov.noise, "Gaussian noise standard deviation added before registration");
    c_batch->add_option("--noise-apply", ov.noise_apply, "both, reference, template or none");
    c_batch->add_option("-j,--jobs", ov.jobs, "Concurrent registrations (default: hardware threads)");
    add_run_options(c_batch, ov);
    add_common_options(c_batch, ov);

    std::string batch_dir, report_out;
    CLI::App *c_report = app.add_subcommand("report", "Summarise a batch directory");
    c_report->add_option("batch", batch_dir, "Directory written by batch")->required();
    c_report->add_option("-o,--out", report_out, "Also write the statistics as CSV");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        setup_logging(ov);
        if (c_reg->parsed()) return cmd_register(reg, ov);
        if (c_gen->parsed()) return cmd_generate(gen, ov);
        if (c_batch->parsed()) return cmd_batch(cases_dir, ov);
        if (c_report->parsed()) return cmd_report(batch_dir, report_out);
    } catch (const UsageError &e) {
        spdlog::error("{}", e.what());
        return kExitUsage;
    } catch (const std::exception &e) {
        spdlog::error("{}", e.what());
        return kExitRunFailure;
    }
    return kExitUsage;
}

} // namespace radreg::cli
