#include "radreg/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <numbers>
#include <stdexcept>
#include <string>

namespace radreg {

std::string_view to_string(MeasureKind kind) {
    switch (kind) {
    case MeasureKind::SSD: return "ssd";
    case MeasureKind::RSSD: return "rssd";
    case MeasureKind::RSharpRSSD: return "rsharp";
    }
    return "unknown";
}

MeasureKind parse_measure(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "ssd") return MeasureKind::SSD;
    if (s == "rssd") return MeasureKind::RSSD;
    if (s == "rsharp" || s == "r#rssd" || s == "rsharprssd" || s == "r#ssd") return MeasureKind::RSharpRSSD;
    throw std::invalid_argument("unknown measure '" + std::string(name) + "' (expected ssd, rssd or rsharp)");
}

const std::vector<MeasureKind> &all_measures() {
    static const std::vector<MeasureKind> kinds{MeasureKind::RSSD, MeasureKind::SSD, MeasureKind::RSharpRSSD};
    return kinds;
}

double paper_best_alpha(MeasureKind kind) {
    switch (kind) {
    case MeasureKind::RSSD: return 0.02;
    case MeasureKind::SSD: return 0.003;
    case MeasureKind::RSharpRSSD: return 0.007;
    }
    return 0.0;
}

SimilarityContext::SimilarityContext(Image reference, Image tpl, const ProjectorGeometry &geom,
                                     std::shared_ptr<const TriMesh> mesh)
    : reference_(std::move(reference)), template_(std::move(tpl)), projector_(geom), mesh_(std::move(mesh)),
      table_(*mesh_, reference_.size()) {
    if (!reference_.same_shape(template_)) {
        throw std::invalid_argument("SimilarityContext: reference and template differ in size");
    }
    if (mesh_->extent() != reference_.extent()) {
        throw std::invalid_argument("SimilarityContext: mesh and image extents differ");
    }
    ref_sino_ = projector_.forward(reference_);
    ref_pseudo_ = projector_.adjoint(ref_sino_);
}

Image SimilarityContext::warped_template(std::span<const double> u) const {
    return warp(template_, table_.rasterize(u));
}

namespace {

double squared_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc;
}

double ssd_weight(const Image &img) { return 4.0 / (static_cast<double>(img.size()) * img.size()); }

double rssd_weight(const ProjectorGeometry &g) {
    return 2.0 * std::numbers::pi / (static_cast<double>(g.n_omega) * g.n_s);
}

Sinogram sinogram_residual(const SimilarityContext &ctx, const Image &warped) {
    Sinogram s = ctx.projector().forward(warped);
    const auto ref = ctx.reference_sinogram().data();
    auto d = s.data();
    for (std::size_t k = 0; k < d.size(); ++k) d[k] -= ref[k];
    return s;
}

Image pseudo_residual(const SimilarityContext &ctx, const Image &warped) {
    return ctx.projector().pseudo_reconstruction(warped) - ctx.reference_pseudo();
}

} // namespace

double eval_ssd(const SimilarityContext &ctx, std::span<const double> u) {
    const Image r = ctx.warped_template(u) - ctx.reference();
    return ssd_weight(r) * squared_norm(r.pixels());
}

double eval_rssd(const SimilarityContext &ctx, std::span<const double> u) {
    const Sinogram d = sinogram_residual(ctx, ctx.warped_template(u));
    return 0.5 * rssd_weight(ctx.projector().geometry()) * squared_norm(d.data());
}

double eval_rsharp(const SimilarityContext &ctx, std::span<const double> u) {
    const Image d = pseudo_residual(ctx, ctx.warped_template(u));
    return 0.5 * ssd_weight(d) * squared_norm(d.pixels());
}

double evaluate(MeasureKind kind, const SimilarityContext &ctx, std::span<const double> u) {
    switch (kind) {
    case MeasureKind::SSD: return eval_ssd(ctx, u);
    case MeasureKind::RSSD: return eval_rssd(ctx, u);
    case MeasureKind::RSharpRSSD: return eval_rsharp(ctx, u);
    }
    throw std::invalid_argument("evaluate: unknown measure");
}

MeasureEvaluation evaluate_with_gradient(MeasureKind kind, const SimilarityContext &ctx, std::span<const double> u) {
    if (static_cast<int>(u.size()) != ctx.dof_count()) {
        throw std::invalid_argument("evaluate_with_gradient: dof vector has wrong length");
    }
    const Image &tpl = ctx.tpl();
    const int n = tpl.size();
    const PixelField disp = ctx.shape_table().rasterize(u);

    const double inv_h = 1.0 / tpl.spacing();
    Image warped(n, tpl.extent());
    std::vector<Vec2> grad_t(disp.size());
    std::size_t p = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j, ++p) {
            const ImageSample s = sample_grid_grad(tpl, i + disp[p].y * inv_h, j + disp[p].x * inv_h);
            warped(i, j) = s.value;
            grad_t[p] = s.gradient;
        }
    }

    // dD/d(T_u) at every pixel.
    MeasureEvaluation out;
    Image weight;
    const ProjectorGeometry &geom = ctx.projector().geometry();
    switch (kind) {
    case MeasureKind::SSD: {
        Image r = warped - ctx.reference();
        const double c = ssd_weight(r);
        out.value = c * squared_norm(r.pixels());
        weight = std::move(r) * (2.0 * c);
        break;
    }
    case MeasureKind::RSSD: {
        const Sinogram d = sinogram_residual(ctx, warped);
        const double c = rssd_weight(geom);
        out.value = 0.5 * c * squared_norm(d.data());
        // A^T = h^2 / (h_s h_omega) R# for the projector pair.
        weight = ctx.projector().adjoint(d) * (c * tpl.pixel_area() / (geom.h_s() * geom.h_omega()));
        break;
    }
    case MeasureKind::RSharpRSSD: {
        const Image d = pseudo_residual(ctx, warped);
        const double c = ssd_weight(d);
        out.value = 0.5 * c * squared_norm(d.pixels());
        // R#R is self-adjoint as a matrix.
        weight = ctx.projector().pseudo_reconstruction(d) * c;
        break;
    }
    }

    std::vector<Vec2> density(grad_t.size());
    const auto w = weight.pixels();
    for (std::size_t q = 0; q < density.size(); ++q) density[q] = w[q] * grad_t[q];
    out.gradient.assign(u.size(), 0.0);
    ctx.shape_table().scatter(density, out.gradient);
    return out;
}

std::vector<double> grad(MeasureKind kind, const SimilarityContext &ctx, std::span<const double> u) {
    return evaluate_with_gradient(kind, ctx, u).gradient;
}

double normalization_scale(MeasureKind kind, const SimilarityContext &ctx) {
    const std::vector<double> zero(static_cast<std::size_t>(ctx.dof_count()), 0.0);
    const double d0 = evaluate(kind, ctx, zero);
    return d0 > 1e-300 ? 1.0 / d0 : 1.0;
}

ObjectiveValue eval_objective(MeasureKind kind, const SimilarityContext &ctx, const StiffnessMatrix &k,
                              std::span<const double> u, double alpha, double scale) {
    if (!(alpha > 0.0)) throw std::invalid_argument("eval_objective: alpha must be positive");
    MeasureEvaluation m = evaluate_with_gradient(kind, ctx, u);
    const ElasticEnergy e = energy_and_grad(k, u);
    ObjectiveValue out;
    out.data_raw = m.value;
    out.data = scale * m.value;
    out.elastic = e.energy;
    out.value = out.data + alpha * e.energy;
    out.gradient = std::move(m.gradient);
    for (std::size_t i = 0; i < u.size(); ++i) out.gradient[i] = scale * out.gradient[i] + alpha * e.gradient[i];
    return out;
}

} // namespace radreg
