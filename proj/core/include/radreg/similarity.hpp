#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "radreg/elastic.hpp"
#include "radreg/image.hpp"
#include "radreg/mesh.hpp"
#include "radreg/radon.hpp"

namespace radreg {

enum class MeasureKind { SSD, RSSD, RSharpRSSD };

/// "ssd", "rssd" or "rsharp".
std::string_view to_string(MeasureKind kind);
/// Accepts the names produced by to_string plus "r#rssd"; case-insensitive.
MeasureKind parse_measure(std::string_view name);
const std::vector<MeasureKind> &all_measures();

/// Best regularisation weights reported for the three measures on noise-free
/// Shepp-Logan registrations with the coarse mesh.
double paper_best_alpha(MeasureKind kind);

/// Everything about a reference/template pair that does not depend on u:
/// projector, sinogram and pseudo-reconstruction of the reference, and the
/// pixel-centre shape-function table of the mesh.
class SimilarityContext {
public:
    SimilarityContext(Image reference, Image tpl, const ProjectorGeometry &geom, std::shared_ptr<const TriMesh> mesh);

    const Image &reference() const { return reference_; }
    const Image &tpl() const { return template_; }
    const RadonProjector &projector() const { return projector_; }
    const TriMesh &mesh() const { return *mesh_; }
    const std::shared_ptr<const TriMesh> &mesh_ptr() const { return mesh_; }
    const PixelShapeTable &shape_table() const { return table_; }
    const Sinogram &reference_sinogram() const { return ref_sino_; }
    const Image &reference_pseudo() const { return ref_pseudo_; }
    int dof_count() const { return mesh_->dof_count(); }

    /// T_u sampled at every pixel centre.
    Image warped_template(std::span<const double> u) const;

private:
    Image reference_;
    Image template_;
    RadonProjector projector_;
    std::shared_ptr<const TriMesh> mesh_;
    PixelShapeTable table_;
    Sinogram ref_sino_;
    Image ref_pseudo_;
};

/// (4/N^2) ||T_u - R||^2, without a factor 1/2.
double eval_ssd(const SimilarityContext &ctx, std::span<const double> u);
/// 1/2 (2 pi / (N_omega N_s)) ||sino(T_u) - sino(R)||^2.
double eval_rssd(const SimilarityContext &ctx, std::span<const double> u);
/// 1/2 (4/N^2) ||BP(sino(T_u)) - BP(sino(R))||^2.
double eval_rsharp(const SimilarityContext &ctx, std::span<const double> u);

double evaluate(MeasureKind kind, const SimilarityContext &ctx, std::span<const double> u);

struct MeasureEvaluation {
    double value = 0.0;
    std::vector<double> gradient;
};

/// Value and exact nodal gradient of the discrete measure. The gradient is the
/// pixel-sum of f_u(x) N_A(x) with f_u = w(x) grad T_u(x), where w is the
/// residual for SSD, R#R of the residual for RSSD and (R#R)^2 of the residual
/// for R#RSSD, each times the measure's quadrature constant.
MeasureEvaluation evaluate_with_gradient(MeasureKind kind, const SimilarityContext &ctx, std::span<const double> u);

std::vector<double> grad(MeasureKind kind, const SimilarityContext &ctx, std::span<const double> u);

/// 1 / D(R, T; 0), or 1 when the pair already matches at u = 0.
double normalization_scale(MeasureKind kind, const SimilarityContext &ctx);

struct ObjectiveValue {
    double value = 0.0;    ///< J = scale D + alpha S
    double data = 0.0;     ///< scale D
    double data_raw = 0.0; ///< D
    double elastic = 0.0;  ///< S = 1/2 u^T K u
    std::vector<double> gradient;
};

/// J(u) = scale D(R, T; u) + alpha S(u) and its gradient.
ObjectiveValue eval_objective(MeasureKind kind, const SimilarityContext &ctx, const StiffnessMatrix &k,
                              std::span<const double> u, double alpha, double scale = 1.0);

} // namespace radreg
