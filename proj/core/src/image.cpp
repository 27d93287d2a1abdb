#include "radreg/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "radreg/mesh.hpp"

namespace radreg {

Image::Image(int n, double extent) : Image(n, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0), extent) {}

Image::Image(int n, std::vector<double> pixels, double extent)
    : n_(n), extent_(extent), pixels_(std::move(pixels)) {
    if (n < 2) {
        throw std::invalid_argument("Image: size must be at least 2, got " + std::to_string(n));
    }
    if (!(extent > 0.0)) {
        throw std::invalid_argument("Image: extent must be positive");
    }
    if (pixels_.size() != static_cast<std::size_t>(n) * n) {
        throw std::invalid_argument("Image: pixel count does not match N*N");
    }
    for (double v : pixels_) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("Image: non-finite pixel value");
        }
    }
}

std::vector<Vec2> Image::centers() const {
    std::vector<Vec2> out;
    out.reserve(pixels_.size());
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            out.push_back(center(i, j));
        }
    }
    return out;
}

Image &Image::operator+=(const Image &other) {
    if (!same_shape(other)) throw std::invalid_argument("Image: shape mismatch");
    for (std::size_t k = 0; k < pixels_.size(); ++k) pixels_[k] += other.pixels_[k];
    return *this;
}

Image &Image::operator-=(const Image &other) {
    if (!same_shape(other)) throw std::invalid_argument("Image: shape mismatch");
    for (std::size_t k = 0; k < pixels_.size(); ++k) pixels_[k] -= other.pixels_[k];
    return *this;
}

Image &Image::operator*=(double s) {
    for (double &v : pixels_) v *= s;
    return *this;
}

namespace {

double pixel_or_zero(const Image &img, int row, int col) {
    const int n = img.size();
    if (row < 0 || col < 0 || row >= n || col >= n) return 0.0;
    return img(row, col);
}

struct Corners {
    double v00, v01, v10, v11;
    double ty, tx;
};

Corners corners(const Image &img, double row, double col) {
    const double r0 = std::floor(row);
    const double c0 = std::floor(col);
    // Far-away points only need all four neighbours to be outside the grid.
    const double lim = static_cast<double>(img.size()) + 1.0;
    const int r = static_cast<int>(std::clamp(r0, -2.0, lim));
    const int c = static_cast<int>(std::clamp(c0, -2.0, lim));
    return {pixel_or_zero(img, r, c), pixel_or_zero(img, r, c + 1), pixel_or_zero(img, r + 1, c),
            pixel_or_zero(img, r + 1, c + 1), row - r0, col - c0};
}

} // namespace

double sample_grid(const Image &img, double row, double col) {
    const Corners k = corners(img, row, col);
    return (1.0 - k.ty) * ((1.0 - k.tx) * k.v00 + k.tx * k.v01) + k.ty * ((1.0 - k.tx) * k.v10 + k.tx * k.v11);
}

ImageSample sample_grid_grad(const Image &img, double row, double col) {
    const Corners k = corners(img, row, col);
    const double inv_h = 1.0 / img.spacing();
    ImageSample s;
    s.value = (1.0 - k.ty) * ((1.0 - k.tx) * k.v00 + k.tx * k.v01) + k.ty * ((1.0 - k.tx) * k.v10 + k.tx * k.v11);
    s.gradient.x = ((1.0 - k.ty) * (k.v01 - k.v00) + k.ty * (k.v11 - k.v10)) * inv_h;
    s.gradient.y = ((1.0 - k.tx) * (k.v10 - k.v00) + k.tx * (k.v11 - k.v01)) * inv_h;
    return s;
}

double sample_bilinear(const Image &img, Vec2 x) {
    const double h = img.spacing();
    return sample_grid(img, (x.y + img.extent()) / h - 0.5, (x.x + img.extent()) / h - 0.5);
}

ImageSample sample_bilinear_grad(const Image &img, Vec2 x) {
    const double h = img.spacing();
    return sample_grid_grad(img, (x.y + img.extent()) / h - 0.5, (x.x + img.extent()) / h - 0.5);
}

Image warp(const Image &img, const PixelField &field) {
    const int n = img.size();
    if (field.size() != img.count()) {
        throw std::invalid_argument("warp: field size does not match image");
    }
    Image out(n, img.extent());
    const double inv_h = 1.0 / img.spacing();
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j, ++k) {
            out(i, j) = sample_grid(img, i + field[k].y * inv_h, j + field[k].x * inv_h);
        }
    }
    return out;
}

Image warp(const Image &img, const DisplacementField &field) {
    return warp(img, rasterize_field(field, img.size()));
}

namespace {

struct Ellipse {
    double intensity, semi_x, semi_y, cx, cy, phi_deg;
};

// Toft's modified Shepp-Logan table (higher contrast than the original).
constexpr std::array<Ellipse, 10> kSheppLogan{{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

} // namespace

Image shepp_logan(int n, double extent, int supersample) {
    if (n < 16) {
        throw std::invalid_argument("shepp_logan: size must be at least 16");
    }
    if (supersample < 1) throw std::invalid_argument("shepp_logan: supersample must be >= 1");
    // The ellipse table lives on the unit square.
    const auto value_at = [](Vec2 p) {
        double v = 0.0;
        for (const Ellipse &e : kSheppLogan) {
            const double phi = e.phi_deg * std::numbers::pi / 180.0;
            const double c = std::cos(phi), s = std::sin(phi);
            const double dx = p.x - e.cx, dy = p.y - e.cy;
            const double u = (dx * c + dy * s) / e.semi_x;
            const double w = (dy * c - dx * s) / e.semi_y;
            if (u * u + w * w <= 1.0) v += e.intensity;
        }
        return std::clamp(v, 0.0, 1.0);
    };
    Image img(n, extent);
    const double h = img.spacing() / extent;
    const double sub = h / supersample;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 c = img.center(i, j) * (1.0 / extent);
            double acc = 0.0;
            for (int a = 0; a < supersample; ++a) {
                for (int b = 0; b < supersample; ++b) {
                    acc += value_at({c.x - 0.5 * h + (b + 0.5) * sub, c.y - 0.5 * h + (a + 0.5) * sub});
                }
            }
            img(i, j) = acc / (static_cast<double>(supersample) * supersample);
        }
    }
    return img;
}

Image disk(int n, double radius, double intensity, Vec2 centre, double extent, int supersample) {
    if (supersample < 1) throw std::invalid_argument("disk: supersample must be >= 1");
    Image img(n, extent);
    const double h = img.spacing();
    const double sub = h / supersample;
    const double r2 = radius * radius;
    const double weight = intensity / (static_cast<double>(supersample) * supersample);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Vec2 c = img.center(i, j);
            int inside = 0;
            for (int a = 0; a < supersample; ++a) {
                for (int b = 0; b < supersample; ++b) {
                    const double x = c.x - 0.5 * h + (b + 0.5) * sub - centre.x;
                    const double y = c.y - 0.5 * h + (a + 0.5) * sub - centre.y;
                    if (x * x + y * y <= r2) ++inside;
                }
            }
            img(i, j) = weight * inside;
        }
    }
    return img;
}

Image add_noise(const Image &img, const NoiseSpec &spec) {
    if (!(spec.stddev >= 0.0)) {
        throw std::invalid_argument("add_noise: stddev must be non-negative");
    }
    Image out = img;
    if (spec.stddev == 0.0) {
        for (double &v : out.pixels()) v += spec.mean;
        return out;
    }
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> dist(spec.mean, spec.stddev);
    for (double &v : out.pixels()) v += dist(rng);
    return out;
}

} // namespace radreg
