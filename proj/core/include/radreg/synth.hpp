#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "radreg/geometry.hpp"
#include "radreg/image.hpp"
#include "radreg/mesh.hpp"

namespace radreg {

/// Pixel size of the 128 x 128 grid on [-1, 1]^2 that the default ranges refer to.
inline constexpr double kReferencePixel = 2.0 / 128.0;

/// Standard deviations of the low- and high-noise experiments.
inline constexpr double kLowNoise = 0.05;
inline constexpr double kHighNoise = 0.1;

/// Random deformation protocol: a global affine map (rotation times
/// inhomogeneous scaling, plus translation) followed by random nodal
/// perturbations on a small Delaunay mesh. Lengths are physical units.
struct DeformationSpec {
    double scale_min = 0.69;
    double scale_max = 0.91;
    double rotation_max_deg = 30.0;
    double translation_max = 9.0 * kReferencePixel;
    int local_nodes = 40;
    double local_amplitude = 3.0 * kReferencePixel;
    std::uint64_t seed = 0;

    /// All ranges collapsed onto the identity map.
    static DeformationSpec identity(std::uint64_t seed = 0);
    void validate() const;

    friend bool operator==(const DeformationSpec &, const DeformationSpec &) = default;
};

struct AffineMap {
    Mat2 linear;
    Vec2 translation;

    Vec2 operator()(Vec2 x) const { return linear * x + translation; }
};

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64 &rng);

/// linear = R(theta) diag(s1, s2), s_i ~ U[scale_min, scale_max],
/// theta ~ U[-rot, rot], translation ~ U[-t, t]^2.
AffineMap random_affine(const DeformationSpec &spec, std::mt19937_64 &rng);

/// i.i.d. U[-amp, amp]^2 nodal perturbations on a Delaunay mesh of
/// spec.local_nodes nodes (4 corners plus well-separated random points). Draws
/// that would fold the field are rejected and redrawn.
DisplacementField random_local(const DeformationSpec &spec, std::mt19937_64 &rng, double extent = 1.0);

/// Composite map used to build a template: T(y) = R(psi(y)) with
/// psi(y) = w + l(w), w = A^{-1}(y - t).
class SyntheticDeformation {
public:
    SyntheticDeformation(AffineMap affine, DisplacementField local);

    const AffineMap &affine() const { return affine_; }
    const DisplacementField &local() const { return local_; }

    /// psi(y).
    Vec2 backward(Vec2 y) const;
    /// psi(y) - y, the field with T = warp(R, truth).
    Vec2 truth(Vec2 y) const { return backward(y) - y; }
    /// psi^{-1}(x): exact per deformed triangle, Newton outside the deformed domain.
    Vec2 inverse(Vec2 x) const;
    /// psi^{-1}(x) - x: the displacement a registration of (R, T) should recover.
    Vec2 target(Vec2 x) const { return inverse(x) - x; }

private:
    AffineMap affine_;
    Mat2 inverse_linear_;
    DisplacementField local_;
};

SyntheticDeformation random_deformation(const DeformationSpec &spec, double extent = 1.0);

struct NoisePair {
    NoiseSpec reference;
    NoiseSpec tpl;
};

struct SyntheticCase {
    Image reference;       ///< possibly noisy
    Image tpl;             ///< possibly noisy
    Image clean_reference;
    Image clean_template;
    PixelField truth;      ///< T = warp(R, truth) before noise
    PixelField target;     ///< ground truth for the registration field
    std::uint64_t seed = 0;
    std::optional<NoisePair> noise;
};

SyntheticCase make_case(const Image &reference, const DeformationSpec &spec,
                        const std::optional<NoisePair> &noise = std::nullopt);

/// count distinct per-case seeds derived from a master seed (splitmix64).
std::vector<std::uint64_t> derive_seeds(std::uint64_t master, int count);

} // namespace radreg
