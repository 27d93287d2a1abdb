#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "radreg/geometry.hpp"

namespace radreg {

class DisplacementField;

/// Square grayscale raster on the physical domain [-a, a]^2.
///
/// Pixels are stored row-major. Row i and column j have their centre at
///   x = -a + (j + 0.5) h,  y = -a + (i + 0.5) h,  h = 2a / N,
/// so row 0 is the bottom of the domain (smallest y). File writers flip rows
/// so images appear upright.
class Image {
public:
    Image() = default;
    explicit Image(int n, double extent = 1.0);
    Image(int n, std::vector<double> pixels, double extent = 1.0);

    int size() const { return n_; }
    double extent() const { return extent_; }
    double spacing() const { return 2.0 * extent_ / n_; }
    double pixel_area() const { return spacing() * spacing(); }
    std::size_t count() const { return pixels_.size(); }

    double operator()(int row, int col) const { return pixels_[index(row, col)]; }
    double &operator()(int row, int col) { return pixels_[index(row, col)]; }

    std::span<const double> pixels() const { return pixels_; }
    std::span<double> pixels() { return pixels_; }

    Vec2 center(int row, int col) const {
        const double h = spacing();
        return {-extent_ + (col + 0.5) * h, -extent_ + (row + 0.5) * h};
    }

    /// Pixel-centre coordinates of every pixel, row-major.
    std::vector<Vec2> centers() const;

    bool same_shape(const Image &other) const { return n_ == other.n_ && extent_ == other.extent_; }

    friend bool operator==(const Image &, const Image &) = default;

    Image &operator+=(const Image &other);
    Image &operator-=(const Image &other);
    Image &operator*=(double s);
    friend Image operator+(Image a, const Image &b) { return a += b; }
    friend Image operator-(Image a, const Image &b) { return a -= b; }
    friend Image operator*(Image a, double s) { return a *= s; }
    friend Image operator*(double s, Image a) { return a *= s; }

private:
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(col);
    }

    int n_ = 0;
    double extent_ = 1.0;
    std::vector<double> pixels_;
};

/// Per-pixel displacement vectors, row-major, one entry per pixel centre.
using PixelField = std::vector<Vec2>;

struct ImageSample {
    double value = 0.0;
    Vec2 gradient; ///< spatial derivative of the bilinear interpolant
};

/// Bilinear interpolation between pixel centres; the image is extended by zero
/// outside the grid, so points beyond the outermost centres fade towards 0.
double sample_bilinear(const Image &img, Vec2 x);

/// Bilinear value together with its exact derivative. On cell boundaries the
/// derivative is taken from the cell selected by floor().
ImageSample sample_bilinear_grad(const Image &img, Vec2 x);

/// Same interpolants addressed by continuous grid coordinates (row, col), where
/// integer coordinates are pixel centres. Gradients are still per physical unit.
double sample_grid(const Image &img, double row, double col);
ImageSample sample_grid_grad(const Image &img, double row, double col);

/// Backward warp: out(x) = img(x + u(x)) at every pixel centre.
Image warp(const Image &img, const PixelField &field);
Image warp(const Image &img, const DisplacementField &field);

/// Modified (Toft) Shepp-Logan phantom, clamped to [0, 1] and averaged over
/// supersample^2 points per pixel; supersample = 1 samples pixel centres only.
Image shepp_logan(int n, double extent = 1.0, int supersample = 4);

/// Disk of the given radius with area-weighted anti-aliasing (supersample^2
/// subsamples per pixel).
Image disk(int n, double radius, double intensity = 1.0, Vec2 centre = {}, double extent = 1.0,
           int supersample = 8);

struct NoiseSpec {
    double mean = 0.0;
    double stddev = 0.0;
    std::uint64_t seed = 0;
};

/// Adds i.i.d. Gaussian noise drawn from a stream seeded by spec.seed. No clamping.
Image add_noise(const Image &img, const NoiseSpec &spec);

} // namespace radreg
