#include "radreg/radon.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace radreg {

double ProjectorGeometry::h_omega() const { return std::numbers::pi / n_omega; }

double ProjectorGeometry::angle(int m) const { return m * std::numbers::pi / n_omega; }

ProjectorGeometry ProjectorGeometry::standard(int image_size, double extent, int n_omega) {
    if (image_size < 2) throw std::invalid_argument("ProjectorGeometry: image size must be >= 2");
    const int half = image_size - (image_size - 1) / 2 - 1;
    const int n_s = 2 * static_cast<int>(std::ceil(std::sqrt(2.0) * half)) + 3;
    const double h = 2.0 * extent / image_size;
    const double s_max = 0.5 * (n_s - 1) * h;
    ProjectorGeometry g{image_size, extent, n_s, n_omega, -s_max, s_max};
    g.validate();
    return g;
}

void ProjectorGeometry::validate() const {
    if (image_size < 2) throw std::invalid_argument("ProjectorGeometry: image size must be >= 2");
    if (!(extent > 0.0)) throw std::invalid_argument("ProjectorGeometry: extent must be positive");
    if (n_s < 3) throw std::invalid_argument("ProjectorGeometry: n_s must be >= 3");
    if (n_omega < 2) throw std::invalid_argument("ProjectorGeometry: n_omega must be >= 2");
    if (!(s_max > s_min)) throw std::invalid_argument("ProjectorGeometry: empty s-range");
    if (subpixels < 1) throw std::invalid_argument("ProjectorGeometry: subpixels must be >= 1");
}

namespace {

// Offsets, in bin units, of the sub-pixel centres' projections relative to the
// pixel centre's, for per-pixel steps dx (column) and dy (row).
void subpixel_offsets(int sub, double dx, double dy, std::vector<double> &out) {
    out.clear();
    for (int a = 0; a < sub; ++a) {
        const double oy = (a + 0.5) / sub - 0.5;
        for (int b = 0; b < sub; ++b) out.push_back(((b + 0.5) / sub - 0.5) * dx + oy * dy);
    }
}

} // namespace

Sinogram::Sinogram(const ProjectorGeometry &geom)
    : Sinogram(geom, std::vector<double>(static_cast<std::size_t>(geom.n_s) * geom.n_omega, 0.0)) {}

Sinogram::Sinogram(const ProjectorGeometry &geom, std::vector<double> data)
    : n_s_(geom.n_s), n_omega_(geom.n_omega), s_min_(geom.s_min), s_max_(geom.s_max), data_(std::move(data)) {
    geom.validate();
    if (data_.size() != static_cast<std::size_t>(n_s_) * n_omega_) {
        throw std::invalid_argument("Sinogram: data size does not match geometry");
    }
    for (double v : data_) {
        if (!std::isfinite(v)) throw std::invalid_argument("Sinogram: non-finite value");
    }
}

bool Sinogram::matches(const ProjectorGeometry &geom) const {
    return n_s_ == geom.n_s && n_omega_ == geom.n_omega && s_min_ == geom.s_min && s_max_ == geom.s_max;
}

RadonProjector::RadonProjector(ProjectorGeometry geom) : geom_(geom) {
    geom_.validate();
    cos_.resize(geom_.n_omega);
    sin_.resize(geom_.n_omega);
    for (int m = 0; m < geom_.n_omega; ++m) {
        cos_[m] = std::cos(geom_.angle(m));
        sin_[m] = std::sin(geom_.angle(m));
    }
}

Sinogram RadonProjector::forward(const Image &img) const {
    if (img.size() != geom_.image_size || img.extent() != geom_.extent) {
        throw std::invalid_argument("radon_forward: image does not match projector geometry (" +
                                    std::to_string(img.size()) + " vs " + std::to_string(geom_.image_size) + ")");
    }
    Sinogram sino(geom_);
    const int n = img.size();
    const int n_s = geom_.n_s;
    const double h = img.spacing();
    const double inv_hs = 1.0 / geom_.h_s();
    const int sub = geom_.subpixels;
    const double weight = img.pixel_area() * inv_hs / (static_cast<double>(sub) * sub);
    const double x0 = -img.extent() + 0.5 * h;
    const std::span<const double> px = img.pixels();
    std::vector<double> offsets;
    for (int m = 0; m < geom_.n_omega; ++m) {
        double *col = sino.column(m).data();
        const double dx = h * cos_[m] * inv_hs;
        const double dy = h * sin_[m] * inv_hs;
        const double base = ((x0 * cos_[m] + x0 * sin_[m]) - geom_.s_min) * inv_hs;
        subpixel_offsets(sub, dx, dy, offsets);
        std::size_t p = 0;
        for (int i = 0; i < n; ++i) {
            const double row_base = base + i * dy;
            for (int j = 0; j < n; ++j, ++p) {
                const double v = px[p];
                if (v == 0.0) continue;
                const double w = v * weight;
                const double t0 = row_base + j * dx;
                for (double off : offsets) {
                    const double t = t0 + off;
                    const double kf = std::floor(t);
                    const int k = static_cast<int>(kf);
                    const double f = t - kf;
                    if (k >= 0 && k < n_s) col[k] += w * (1.0 - f);
                    if (k + 1 >= 0 && k + 1 < n_s) col[k + 1] += w * f;
                }
            }
        }
    }
    return sino;
}

Image RadonProjector::adjoint(const Sinogram &sino) const {
    if (!sino.matches(geom_)) {
        throw std::invalid_argument("radon_adjoint: sinogram does not match projector geometry");
    }
    const int n = geom_.image_size;
    const int n_s = geom_.n_s;
    Image out(n, geom_.extent);
    const double h = out.spacing();
    const double inv_hs = 1.0 / geom_.h_s();
    const int sub = geom_.subpixels;
    const double x0 = -geom_.extent + 0.5 * h;
    const std::span<double> px = out.pixels();
    std::vector<double> offsets;
    for (int m = 0; m < geom_.n_omega; ++m) {
        const double *col = sino.column(m).data();
        const double dx = h * cos_[m] * inv_hs;
        const double dy = h * sin_[m] * inv_hs;
        const double base = ((x0 * cos_[m] + x0 * sin_[m]) - geom_.s_min) * inv_hs;
        subpixel_offsets(sub, dx, dy, offsets);
        std::size_t p = 0;
        for (int i = 0; i < n; ++i) {
            const double row_base = base + i * dy;
            for (int j = 0; j < n; ++j, ++p) {
                const double t0 = row_base + j * dx;
                double acc = 0.0;
                for (double off : offsets) {
                    const double t = t0 + off;
                    const double kf = std::floor(t);
                    const int k = static_cast<int>(kf);
                    const double f = t - kf;
                    if (k >= 0 && k < n_s) acc += (1.0 - f) * col[k];
                    if (k + 1 >= 0 && k + 1 < n_s) acc += f * col[k + 1];
                }
                px[p] += acc;
            }
        }
    }
    const double sub_weight = 1.0 / (static_cast<double>(sub) * sub);
    for (double &v : px) v *= sub_weight;
    const double h_omega = geom_.h_omega();
    for (double &v : px) v *= h_omega;
    return out;
}

Sinogram radon_forward(const Image &img, const ProjectorGeometry &geom) { return RadonProjector(geom).forward(img); }

Image radon_adjoint(const Sinogram &sino, const ProjectorGeometry &geom) { return RadonProjector(geom).adjoint(sino); }

Image pseudo_reconstruction(const Image &img, const ProjectorGeometry &geom) {
    return RadonProjector(geom).pseudo_reconstruction(img);
}

double image_inner(const Image &a, const Image &b) {
    if (!a.same_shape(b)) throw std::invalid_argument("image_inner: shape mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.count(); ++k) acc += a.pixels()[k] * b.pixels()[k];
    return a.pixel_area() * acc;
}

double sinogram_inner(const Sinogram &a, const Sinogram &b, const ProjectorGeometry &geom) {
    if (!a.matches(geom) || !b.matches(geom)) throw std::invalid_argument("sinogram_inner: geometry mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) acc += a.data()[k] * b.data()[k];
    return geom.h_s() * geom.h_omega() * acc;
}

} // namespace radreg
