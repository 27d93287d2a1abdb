#include "radreg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace radreg {

DeformationSpec DeformationSpec::identity(std::uint64_t seed) {
    DeformationSpec s;
    s.scale_min = s.scale_max = 1.0;
    s.rotation_max_deg = 0.0;
    s.translation_max = 0.0;
    s.local_amplitude = 0.0;
    s.seed = seed;
    return s;
}

void DeformationSpec::validate() const {
    if (!(scale_min > 0.0 && scale_min <= scale_max)) throw std::invalid_argument("DeformationSpec: bad scale range");
    if (!(rotation_max_deg >= 0.0)) throw std::invalid_argument("DeformationSpec: negative rotation range");
    if (!(translation_max >= 0.0)) throw std::invalid_argument("DeformationSpec: negative translation range");
    if (!(local_amplitude >= 0.0)) throw std::invalid_argument("DeformationSpec: negative local amplitude");
    if (local_nodes < 4) throw std::invalid_argument("DeformationSpec: local mesh needs at least 4 nodes");
}

double uniform01(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace {

// Local perturbations may compress any triangle to half its area, no further.
constexpr double kMinLocalJacobian = 0.5;

double uniform(std::mt19937_64 &rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Smallest per-triangle det(I + grad l): how close x -> x + l(x) comes to folding.
double min_jacobian(const DisplacementField &f) {
    const TriMesh &mesh = f.mesh();
    double worst = std::numeric_limits<double>::infinity();
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const Triangle &tri = mesh.triangles()[t];
        const double area2 = 2.0 * mesh.signed_area(t);
        double g11 = 0, g12 = 0, g21 = 0, g22 = 0;
        for (int i = 0; i < 3; ++i) {
            const Vec2 &pj = mesh.nodes()[tri[(i + 1) % 3]];
            const Vec2 &pk = mesh.nodes()[tri[(i + 2) % 3]];
            const double dx = (pj.y - pk.y) / area2, dy = (pk.x - pj.x) / area2;
            const Vec2 &u = f.nodal()[tri[i]];
            g11 += u.x * dx;
            g12 += u.x * dy;
            g21 += u.y * dx;
            g22 += u.y * dy;
        }
        worst = std::min(worst, (1.0 + g11) * (1.0 + g22) - g12 * g21);
    }
    return worst;
}

} // namespace

AffineMap random_affine(const DeformationSpec &spec, std::mt19937_64 &rng) {
    spec.validate();
    const double s1 = uniform(rng, spec.scale_min, spec.scale_max);
    const double s2 = uniform(rng, spec.scale_min, spec.scale_max);
    const double rot = spec.rotation_max_deg * std::numbers::pi / 180.0;
    const double theta = uniform(rng, -rot, rot);
    const double tx = uniform(rng, -spec.translation_max, spec.translation_max);
    const double ty = uniform(rng, -spec.translation_max, spec.translation_max);
    return {Mat2::rotation(theta) * Mat2::diagonal(s1, s2), {tx, ty}};
}

DisplacementField random_local(const DeformationSpec &spec, std::mt19937_64 &rng, double extent) {
    spec.validate();
    std::vector<Vec2> pts{{-extent, -extent}, {extent, -extent}, {extent, extent}, {-extent, extent}};
    const int wanted = spec.local_nodes;
    // Poisson-disk style rejection keeps the triangles well shaped.
    double min_sep = 0.5 * std::sqrt(4.0 * extent * extent / wanted);
    int attempts = 0;
    while (static_cast<int>(pts.size()) < wanted) {
        Vec2 p{uniform(rng, -extent, extent), uniform(rng, -extent, extent)};
        // Points close to an edge are snapped onto it; otherwise they would
        // form slivers with the corners.
        const auto snap = [&](double v) {
            return std::abs(v) > extent - 0.5 * min_sep ? std::copysign(extent, v) : v;
        };
        p = {snap(p.x), snap(p.y)};
        bool ok = true;
        for (const Vec2 &q : pts) {
            if (!ok) break;
            ok = norm(p - q) >= min_sep;
        }
        if (ok) pts.push_back(p);
        if (++attempts % 10000 == 0) min_sep *= 0.8;
    }
    auto mesh = std::make_shared<const TriMesh>(delaunay_mesh(std::move(pts), extent));

    std::vector<Vec2> nodal(static_cast<std::size_t>(mesh->node_count()));
    const double amp = spec.local_amplitude;
    for (int draw = 0;; ++draw) {
        for (Vec2 &u : nodal) u = {uniform(rng, -amp, amp), uniform(rng, -amp, amp)};
        DisplacementField field(mesh, nodal);
        if (amp == 0.0 || min_jacobian(field) >= kMinLocalJacobian) return field;
        if (draw >= 1000) {
            throw std::runtime_error("random_local: could not draw a non-folding perturbation");
        }
    }
}

SyntheticDeformation::SyntheticDeformation(AffineMap affine, DisplacementField local)
    : affine_(affine), inverse_linear_(affine.linear.inverse()), local_(std::move(local)) {
    if (!(std::abs(affine_.linear.determinant()) > 0.0)) {
        throw std::invalid_argument("SyntheticDeformation: singular affine map");
    }
}

Vec2 SyntheticDeformation::backward(Vec2 y) const {
    const Vec2 w = inverse_linear_ * (y - affine_.translation);
    return w + local_(w);
}

Vec2 SyntheticDeformation::inverse(Vec2 x) const {
    // w -> w + l(w) is affine on every triangle of the local mesh, so a deformed
    // triangle containing x gives the preimage exactly.
    const TriMesh &mesh = local_.mesh();
    const auto &nodes = mesh.nodes();
    const auto &u = local_.nodal();
    for (const Triangle &tri : mesh.triangles()) {
        const Vec2 a = nodes[tri[0]] + u[tri[0]], b = nodes[tri[1]] + u[tri[1]], c = nodes[tri[2]] + u[tri[2]];
        const double area2 = cross(b - a, c - a);
        const double l1 = cross(x - a, c - a) / area2;
        const double l2 = cross(b - a, x - a) / area2;
        const double l0 = 1.0 - l1 - l2;
        if (l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12) {
            return affine_(l0 * nodes[tri[0]] + l1 * nodes[tri[1]] + l2 * nodes[tri[2]]);
        }
    }
    // Outside the deformed domain l is extended from the boundary; Newton on
    // the piecewise-affine map.
    Vec2 w = x;
    for (int it = 0; it < 100; ++it) {
        const Vec2 r = w + local_(w) - x;
        if (norm(r) <= 1e-15) break;
        const ShapeValues sv = mesh.locate(w);
        const Triangle &tri = mesh.triangles()[sv.triangle];
        const double area2 = 2.0 * mesh.signed_area(sv.triangle);
        Mat2 j = Mat2::identity();
        for (int i = 0; i < 3; ++i) {
            const Vec2 &pj = nodes[tri[(i + 1) % 3]];
            const Vec2 &pk = nodes[tri[(i + 2) % 3]];
            const double dx = (pj.y - pk.y) / area2, dy = (pk.x - pj.x) / area2;
            j.a11 += u[tri[i]].x * dx;
            j.a12 += u[tri[i]].x * dy;
            j.a21 += u[tri[i]].y * dx;
            j.a22 += u[tri[i]].y * dy;
        }
        w = w - j.inverse() * r;
    }
    return affine_(w);
}

SyntheticDeformation random_deformation(const DeformationSpec &spec, double extent) {
    std::mt19937_64 rng(spec.seed);
    AffineMap affine = random_affine(spec, rng);
    DisplacementField local = random_local(spec, rng, extent);
    return SyntheticDeformation(affine, std::move(local));
}

SyntheticCase make_case(const Image &reference, const DeformationSpec &spec, const std::optional<NoisePair> &noise) {
    const SyntheticDeformation def = random_deformation(spec, reference.extent());
    const std::vector<Vec2> centres = reference.centers();
    PixelField truth(centres.size()), target(centres.size());
    for (std::size_t p = 0; p < centres.size(); ++p) {
        truth[p] = def.truth(centres[p]);
        target[p] = def.target(centres[p]);
    }
    SyntheticCase c;
    c.clean_reference = reference;
    c.clean_template = warp(reference, truth);
    c.truth = std::move(truth);
    c.target = std::move(target);
    c.seed = spec.seed;
    c.noise = noise;
    if (noise) {
        c.reference = add_noise(c.clean_reference, noise->reference);
        c.tpl = add_noise(c.clean_template, noise->tpl);
    } else {
        c.reference = c.clean_reference;
        c.tpl = c.clean_template;
    }
    return c;
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t master, int count) {
    if (count < 0) throw std::invalid_argument("derive_seeds: negative count");
    std::vector<std::uint64_t> out;
    out.reserve(static_cast<std::size_t>(count));
    std::uint64_t state = master;
    while (static_cast<int>(out.size()) < count) {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        if (std::find(out.begin(), out.end(), z) == out.end()) out.push_back(z);
    }
    return out;
}

} // namespace radreg
