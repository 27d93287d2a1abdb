#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "radreg/image.hpp"

namespace radreg {

/// Registrations with RMSE(R, T_u) below this are counted as successful.
inline constexpr double kSuccessThreshold = 0.1;

/// sqrt(mean((A - B)^2)).
double rmse(const Image &a, const Image &b);

/// Pixels of the object of interest: reference intensity above threshold.
std::vector<std::uint8_t> object_mask(const Image &reference, double threshold = 0.01);

struct FieldNorm {
    double value = 0.0;
    std::size_t pixels = 0; ///< masked pixel count
    bool empty_mask = false;
};

/// sqrt(||F1 - G1||^2 + ||F2 - G2||^2) over the masked pixels (all pixels when
/// no mask is given).
FieldNorm field_diff_norm(const PixelField &f, const PixelField &g,
                          std::optional<std::span<const std::uint8_t>> mask = std::nullopt);

struct RunMetrics {
    double rmse_initial = 0.0;
    double rmse_final = 0.0;
    double field_norm_diff = 0.0;
    int iterations = 0;
    bool success = false;
    double seconds = 0.0;
};

RunMetrics make_metrics(double rmse_initial, double rmse_final, double field_norm, int iterations, double seconds,
                        double threshold = kSuccessThreshold);

struct Distribution {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

struct BatchSummary {
    std::size_t count = 0;
    std::size_t successes = 0;
    double success_rate = 0.0;
    Distribution rmse_final;
    Distribution field_norm;
    Distribution iterations;
};

/// Quantile of already-sorted data, linear interpolation between order
/// statistics at position p (n - 1).
double quantile_sorted(std::span<const double> sorted, double p);

Distribution distribution(std::vector<double> values);

/// Throws std::invalid_argument for an empty list.
BatchSummary batch_stats(std::span<const RunMetrics> runs);

} // namespace radreg
