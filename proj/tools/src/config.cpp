#include "radreg_cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace radreg::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json &obj, const std::string &where, std::initializer_list<const char *> allowed) {
    if (!obj.is_object()) throw UsageError(where + ": expected a JSON object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto &item : obj.items()) {
        if (!keys.count(item.key())) throw UsageError(where + ": unknown key '" + item.key() + "'");
    }
}

template <class T>
void read(const json &obj, const char *key, T &out, const std::string &where) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) throw UsageError("");
        } else if constexpr (std::is_integral_v<T>) {
            if (!it->is_number_integer()) throw UsageError("");
            if constexpr (std::is_unsigned_v<T>) {
                if (it->is_number_integer() && !it->is_number_unsigned()) throw UsageError("");
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) throw UsageError("");
        } else {
            if (!it->is_string()) throw UsageError("");
        }
        out = it->get<T>();
    } catch (const std::exception &) {
        throw UsageError(where + "." + key + ": wrong type");
    }
}

std::string noise_target(const NoiseConfig &n) {
    if (n.reference && n.tpl) return "both";
    if (n.reference) return "reference";
    if (n.tpl) return "template";
    return "none";
}

} // namespace

std::vector<double> RunConfig::alphas_for(MeasureKind kind) const {
    if (paper_best) return {paper_best_alpha(kind)};
    return alphas;
}

void RunConfig::validate() const {
    try {
        if (measures.empty()) throw UsageError("at least one measure is required");
        if (!paper_best && alphas.empty()) throw UsageError("at least one alpha is required");
        for (double a : alphas) {
            if (!(a > 0.0)) throw UsageError("alpha values must be positive");
        }
        if (mesh != "coarse" && mesh != "fine") throw UsageError("mesh must be 'coarse' or 'fine'");
        if (n_omega < 2) throw UsageError("projector.n_omega must be at least 2");
        elastic.validate();
        optimizer.validate();
        if (!(noise.stddev >= 0.0)) throw UsageError("noise.stddev must be non-negative");
        deformation.validate();
        if (size < 16) throw UsageError("size must be at least 16");
        if (count < 0) throw UsageError("count must be non-negative");
        if (phantom != "shepp-logan" && phantom != "disk") throw UsageError("phantom must be 'shepp-logan' or 'disk'");
        if (!(success_threshold > 0.0)) throw UsageError("success_threshold must be positive");
        if (jobs < 0) throw UsageError("jobs must be non-negative");
    } catch (const UsageError &) {
        throw;
    } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
    }
}

RunConfig config_from_json(const json &doc) {
    reject_unknown(doc, "config",
                   {"measure", "alpha", "mesh", "projector", "elastic", "optimizer", "timing", "noise", "deformation",
                    "seed", "size", "count", "phantom", "success_threshold", "mask_threshold", "jobs"});
    RunConfig cfg;
    if (const auto it = doc.find("measure"); it != doc.end()) {
        cfg.measures.clear();
        try {
            if (it->is_string()) {
                cfg.measures.push_back(parse_measure(it->get<std::string>()));
            } else if (it->is_array()) {
                for (const json &m : *it) cfg.measures.push_back(parse_measure(m.get<std::string>()));
            } else {
                throw UsageError("config.measure: expected a name or a list of names");
            }
        } catch (const std::invalid_argument &e) {
            throw UsageError(std::string("config.measure: ") + e.what());
        } catch (const json::exception &) {
            throw UsageError("config.measure: expected a name or a list of names");
        }
    }
    if (const auto it = doc.find("alpha"); it != doc.end()) {
        cfg.alphas.clear();
        if (it->is_string()) {
            parse_alpha_list(it->get<std::string>(), cfg);
        } else if (it->is_number()) {
            cfg.paper_best = false;
            cfg.alphas.push_back(it->get<double>());
        } else if (it->is_array()) {
            cfg.paper_best = false;
            for (const json &a : *it) {
                if (!a.is_number()) throw UsageError("config.alpha: list entries must be numbers");
                cfg.alphas.push_back(a.get<double>());
            }
        } else {
            throw UsageError("config.alpha: expected \"paper-best\", a number or a list of numbers");
        }
    }
    read(doc, "mesh", cfg.mesh, "config");
    if (const auto it = doc.find("projector"); it != doc.end()) {
        reject_unknown(*it, "config.projector", {"n_omega"});
        read(*it, "n_omega", cfg.n_omega, "config.projector");
    }
    if (const auto it = doc.find("elastic"); it != doc.end()) {
        reject_unknown(*it, "config.elastic", {"lambda", "mu"});
        read(*it, "lambda", cfg.elastic.lambda, "config.elastic");
        read(*it, "mu", cfg.elastic.mu, "config.elastic");
    }
    if (const auto it = doc.find("optimizer"); it != doc.end()) {
        const std::string w = "config.optimizer";
        reject_unknown(*it, w,
                       {"max_iters", "grad_tol", "step_tol", "value_tol", "value_window", "c1", "c2", "memory",
                        "max_line_evals", "initial_step"});
        OptimizerConfig &o = cfg.optimizer;
        read(*it, "max_iters", o.max_iters, w);
        read(*it, "grad_tol", o.grad_tol, w);
        read(*it, "step_tol", o.step_tol, w);
        read(*it, "value_tol", o.value_tol, w);
        read(*it, "value_window", o.value_window, w);
        read(*it, "c1", o.c1, w);
        read(*it, "c2", o.c2, w);
        read(*it, "memory", o.memory, w);
        read(*it, "max_line_evals", o.max_line_evals, w);
        read(*it, "initial_step", o.initial_step, w);
    }
    read(doc, "timing", cfg.timing, "config");
    if (const auto it = doc.find("noise"); it != doc.end()) {
        reject_unknown(*it, "config.noise", {"mean", "stddev", "apply_to"});
        read(*it, "mean", cfg.noise.mean, "config.noise");
        read(*it, "stddev", cfg.noise.stddev, "config.noise");
        std::string target = noise_target(cfg.noise);
        read(*it, "apply_to", target, "config.noise");
        if (target == "both") {
            cfg.noise.reference = cfg.noise.tpl = true;
        } else if (target == "reference" || target == "template" || target == "none") {
            cfg.noise.reference = target == "reference";
            cfg.noise.tpl = target == "template";
        } else {
            throw UsageError("config.noise.apply_to: expected both, reference, template or none");
        }
    }
    if (const auto it = doc.find("deformation"); it != doc.end()) {
        const std::string w = "config.deformation";
        reject_unknown(*it, w,
                       {"scale_min", "scale_max", "rotation_max_deg", "translation_max_px", "local_nodes",
                        "local_amplitude_px"});
        DeformationSpec &d = cfg.deformation;
        double t_px = d.translation_max / kReferencePixel, a_px = d.local_amplitude / kReferencePixel;
        read(*it, "scale_min", d.scale_min, w);
        read(*it, "scale_max", d.scale_max, w);
        read(*it, "rotation_max_deg", d.rotation_max_deg, w);
        read(*it, "translation_max_px", t_px, w);
        read(*it, "local_nodes", d.local_nodes, w);
        read(*it, "local_amplitude_px", a_px, w);
        d.translation_max = t_px * kReferencePixel;
        d.local_amplitude = a_px * kReferencePixel;
    }
    read(doc, "seed", cfg.seed, "config");
    read(doc, "size", cfg.size, "config");
    read(doc, "count", cfg.count, "config");
    read(doc, "phantom", cfg.phantom, "config");
    read(doc, "success_threshold", cfg.success_threshold, "config");
    read(doc, "mask_threshold", cfg.mask_threshold, "config");
    read(doc, "jobs", cfg.jobs, "config");
    cfg.validate();
    return cfg;
}

json config_to_json(const RunConfig &cfg) {
    json measures = json::array();
    for (MeasureKind k : cfg.measures) measures.push_back(std::string(to_string(k)));
    const OptimizerConfig &o = cfg.optimizer;
    const DeformationSpec &d = cfg.deformation;
    return json{
        {"measure", measures},
        {"alpha", cfg.paper_best ? json("paper-best") : json(cfg.alphas)},
        {"mesh", cfg.mesh},
        {"projector", {{"n_omega", cfg.n_omega}}},
        {"elastic", {{"lambda", cfg.elastic.lambda}, {"mu", cfg.elastic.mu}}},
        {"optimizer",
         {{"max_iters", o.max_iters},
          {"grad_tol", o.grad_tol},
          {"step_tol", o.step_tol},
          {"value_tol", o.value_tol},
          {"value_window", o.value_window},
          {"c1", o.c1},
          {"c2", o.c2},
          {"memory", o.memory},
          {"max_line_evals", o.max_line_evals},
          {"initial_step", o.initial_step}}},
        {"timing", cfg.timing},
        {"noise", {{"mean", cfg.noise.mean}, {"stddev", cfg.noise.stddev}, {"apply_to", noise_target(cfg.noise)}}},
        {"deformation",
         {{"scale_min", d.scale_min},
          {"scale_max", d.scale_max},
          {"rotation_max_deg", d.rotation_max_deg},
          {"translation_max_px", d.translation_max / kReferencePixel},
          {"local_nodes", d.local_nodes},
          {"local_amplitude_px", d.local_amplitude / kReferencePixel}}},
        {"seed", cfg.seed},
        {"size", cfg.size},
        {"count", cfg.count},
        {"phantom", cfg.phantom},
        {"success_threshold", cfg.success_threshold},
        {"mask_threshold", cfg.mask_threshold},
        {"jobs", cfg.jobs},
    };
}

RunConfig load_config(const std::filesystem::path &path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot read config '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error &e) {
        throw UsageError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return config_from_json(doc);
}

void parse_alpha_list(const std::string &text, RunConfig &cfg) {
    if (text == "paper-best") {
        cfg.paper_best = true;
        cfg.alphas.clear();
        return;
    }
    std::vector<double> values;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception &) {
            throw UsageError("alpha: '" + item + "' is not a number (or use paper-best)");
        }
    }
    if (values.empty()) throw UsageError("alpha: empty list");
    cfg.paper_best = false;
    cfg.alphas = std::move(values);
}

std::vector<MeasureKind> parse_measure_list(const std::string &text) {
    std::vector<MeasureKind> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "all") {
            const auto &all = all_measures();
            out.insert(out.end(), all.begin(), all.end());
            continue;
        }
        try {
            out.push_back(parse_measure(item));
        } catch (const std::invalid_argument &e) {
            throw UsageError(e.what());
        }
    }
    if (out.empty()) throw UsageError("measure: empty list");
    return out;
}

std::uint64_t noise_seed(std::uint64_t case_seed, bool for_template) {
    // Distinct streams for the two images, unrelated to the deformation stream.
    return derive_seeds(case_seed ^ 0x6e6f697365ULL, 2)[for_template ? 1 : 0];
}

} // namespace radreg::cli
