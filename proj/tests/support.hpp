// Shared fixtures for the unit tests.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "radreg/image.hpp"

namespace radreg::test {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    std::vector<double> v(n);
    for (double &x : v) x = dist(rng);
    return v;
}

inline Image random_image(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Image img(n);
    for (double &v : img.pixels()) v = dist(rng);
    return img;
}

/// Sum of isotropic Gaussian bumps: smooth, compactly concentrated in the domain.
inline Image gaussian_blobs(int n, const std::vector<std::array<double, 4>> &blobs) {
    Image img(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 c = img.center(i, j);
            double v = 0.0;
            for (const auto &[cx, cy, sigma, amp] : blobs) {
                const double dx = c.x - cx, dy = c.y - cy;
                v += amp * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            }
            img(i, j) = v;
        }
    }
    return img;
}

inline double max_abs(const std::vector<double> &v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string &name) {
    const auto dir = std::filesystem::temp_directory_path() / ("radreg_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace radreg::test
