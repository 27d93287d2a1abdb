#include "radreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radreg {

double rmse(const Image &a, const Image &b) {
    if (!a.same_shape(b)) throw std::invalid_argument("rmse: image dimensions differ");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.count(); ++k) {
        const double d = a.pixels()[k] - b.pixels()[k];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.count()));
}

std::vector<std::uint8_t> object_mask(const Image &reference, double threshold) {
    std::vector<std::uint8_t> mask(reference.count());
    for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = reference.pixels()[k] > threshold ? 1 : 0;
    return mask;
}

FieldNorm field_diff_norm(const PixelField &f, const PixelField &g, std::optional<std::span<const std::uint8_t>> mask) {
    if (f.size() != g.size()) throw std::invalid_argument("field_diff_norm: field shapes differ");
    if (mask && mask->size() != f.size()) throw std::invalid_argument("field_diff_norm: mask shape differs");
    FieldNorm out;
    double acc = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p) {
        if (mask && !(*mask)[p]) continue;
        const Vec2 d = f[p] - g[p];
        acc += dot(d, d);
        ++out.pixels;
    }
    out.value = std::sqrt(acc);
    out.empty_mask = out.pixels == 0;
    return out;
}

RunMetrics make_metrics(double rmse_initial, double rmse_final, double field_norm, int iterations, double seconds,
                        double threshold) {
    return {rmse_initial, rmse_final, field_norm, iterations, rmse_final < threshold, seconds};
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty data");
    const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Distribution distribution(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return {values.front(), quantile_sorted(values, 0.25), quantile_sorted(values, 0.5), quantile_sorted(values, 0.75),
            values.back()};
}

BatchSummary batch_stats(std::span<const RunMetrics> runs) {
    if (runs.empty()) throw std::invalid_argument("batch_stats: no runs");
    BatchSummary s;
    s.count = runs.size();
    std::vector<double> rm, fn, it;
    for (const RunMetrics &r : runs) {
        if (r.success) ++s.successes;
        rm.push_back(r.rmse_final);
        fn.push_back(r.field_norm_diff);
        it.push_back(r.iterations);
    }
    s.success_rate = static_cast<double>(s.successes) / static_cast<double>(s.count);
    s.rmse_final = distribution(std::move(rm));
    s.field_norm = distribution(std::move(fn));
    s.iterations = distribution(std::move(it));
    return s;
}

} // namespace radreg
