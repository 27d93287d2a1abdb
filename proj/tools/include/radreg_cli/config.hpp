#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "radreg/elastic.hpp"
#include "radreg/metrics.hpp"
#include "radreg/optimize.hpp"
#include "radreg/similarity.hpp"
#include "radreg/synth.hpp"

namespace radreg::cli {

/// Bad arguments or configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Which images receive noise in a batch, and how much.
struct NoiseConfig {
    double mean = 0.0;
    double stddev = 0.0;
    bool reference = true;
    bool tpl = true;

    bool active() const { return (stddev > 0.0 || mean != 0.0) && (reference || tpl); }

    friend bool operator==(const NoiseConfig &, const NoiseConfig &) = default;
};

/// Everything a run needs, read from a JSON document with flag overrides on
/// top. Unknown keys are rejected.
struct RunConfig {
    std::vector<MeasureKind> measures{MeasureKind::RSSD};
    bool paper_best = true;       ///< alpha per measure from the preset table
    std::vector<double> alphas;   ///< used when paper_best is false
    std::string mesh = "coarse";
    int n_omega = 180;
    ElasticParams elastic;
    OptimizerConfig optimizer = registration_optimizer_defaults();
    bool timing = true;
    NoiseConfig noise;
    DeformationSpec deformation;
    std::uint64_t seed = 1;
    int size = 128;
    int count = 30;
    std::string phantom = "shepp-logan";
    double success_threshold = kSuccessThreshold;
    double mask_threshold = 0.01;
    int jobs = 0; ///< 0: one per hardware thread

    /// Alphas to run for a measure.
    std::vector<double> alphas_for(MeasureKind kind) const;
    void validate() const;

    friend bool operator==(const RunConfig &, const RunConfig &) = default;
};

RunConfig config_from_json(const nlohmann::json &doc);
nlohmann::json config_to_json(const RunConfig &cfg);
RunConfig load_config(const std::filesystem::path &path);

/// "paper-best" or a comma-separated list of numbers.
void parse_alpha_list(const std::string &text, RunConfig &cfg);
/// Comma-separated measure names.
std::vector<MeasureKind> parse_measure_list(const std::string &text);

/// Seed for the noise added to one image of a case.
std::uint64_t noise_seed(std::uint64_t case_seed, bool for_template);

} // namespace radreg::cli
