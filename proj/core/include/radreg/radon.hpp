#pragma once

#include <span>
#include <vector>

#include "radreg/image.hpp"

namespace radreg {

/// Parallel-beam sampling of the Radon transform of an N x N image.
///
/// Angles are omega_m = m * pi / n_omega for m in [0, n_omega). Offsets are
/// s_k = s_min + k * h_s for k in [0, n_s), symmetric about 0.
struct ProjectorGeometry {
    int image_size = 0;
    double extent = 1.0;
    int n_s = 0;
    int n_omega = 0;
    double s_min = 0.0;
    double s_max = 0.0;
    /// Each pixel is projected as subpixels^2 equal parts (2 x 2 as in MATLAB's
    /// radon), which suppresses the aliasing of one-pixel-wide bins.
    int subpixels = 2;

    double h_s() const { return (s_max - s_min) / (n_s - 1); }
    double h_omega() const;
    double angle(int m) const;
    double offset(int k) const { return s_min + k * h_s(); }

    /// Default sampling: n_s = 2 ceil(|c|) + 3 bins one pixel apart, where c is
    /// the offset of the grid corner from the central pixel (185 bins at N = 128),
    /// so every pixel projects inside the range at every angle.
    static ProjectorGeometry standard(int image_size, double extent = 1.0, int n_omega = 180);

    /// Throws std::invalid_argument when the invariants do not hold.
    void validate() const;

    friend bool operator==(const ProjectorGeometry &, const ProjectorGeometry &) = default;
};

/// n_s x n_omega line-integral samples. Storage is one contiguous column of
/// n_s offsets per angle.
class Sinogram {
public:
    Sinogram() = default;
    explicit Sinogram(const ProjectorGeometry &geom);
    Sinogram(const ProjectorGeometry &geom, std::vector<double> data);

    int n_s() const { return n_s_; }
    int n_omega() const { return n_omega_; }
    double s_min() const { return s_min_; }
    double s_max() const { return s_max_; }

    double operator()(int k, int m) const { return data_[static_cast<std::size_t>(m) * n_s_ + k]; }
    double &operator()(int k, int m) { return data_[static_cast<std::size_t>(m) * n_s_ + k]; }

    std::span<const double> column(int m) const { return {data_.data() + static_cast<std::size_t>(m) * n_s_, static_cast<std::size_t>(n_s_)}; }
    std::span<double> column(int m) { return {data_.data() + static_cast<std::size_t>(m) * n_s_, static_cast<std::size_t>(n_s_)}; }
    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    bool matches(const ProjectorGeometry &geom) const;

    friend bool operator==(const Sinogram &, const Sinogram &) = default;

private:
    int n_s_ = 0;
    int n_omega_ = 0;
    double s_min_ = 0.0;
    double s_max_ = 0.0;
    std::vector<double> data_;
};

/// Pixel-driven projector pair. Each pixel's intensity times its area is split
/// into subpixels^2 equal parts; each part goes to the two s-bins adjacent to
/// the projection of its centre, with linear weights, divided by h_s so columns
/// are line-integral densities. The
/// back-projector applies the same weights transposed, times h_omega, and no
/// ramp filter. With <f,g>_img = h^2 sum f g and <p,q>_sino = h_s h_omega sum p q
/// the pair is an exact adjoint.
class RadonProjector {
public:
    explicit RadonProjector(ProjectorGeometry geom);

    const ProjectorGeometry &geometry() const { return geom_; }

    Sinogram forward(const Image &img) const;
    Image adjoint(const Sinogram &sino) const;
    Image pseudo_reconstruction(const Image &img) const { return adjoint(forward(img)); }

private:
    ProjectorGeometry geom_;
    std::vector<double> cos_;
    std::vector<double> sin_;
};

Sinogram radon_forward(const Image &img, const ProjectorGeometry &geom);
Image radon_adjoint(const Sinogram &sino, const ProjectorGeometry &geom);
Image pseudo_reconstruction(const Image &img, const ProjectorGeometry &geom);

/// Weighted inner products under which radon_adjoint is the adjoint of radon_forward.
double image_inner(const Image &a, const Image &b);
double sinogram_inner(const Sinogram &a, const Sinogram &b, const ProjectorGeometry &geom);

} // namespace radreg
