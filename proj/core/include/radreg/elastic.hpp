#pragma once

#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "radreg/mesh.hpp"

namespace radreg {

/// Lame constants of the isotropic elasticity tensor C e = lambda tr(e) I + 2 mu e.
struct ElasticParams {
    double lambda = 1.0;
    double mu = 1.0;

    void validate() const;

    friend bool operator==(const ElasticParams &, const ElasticParams &) = default;
};

/// Sparse symmetric P1 plane-strain stiffness matrix over interleaved nodal
/// dofs (u_x0, u_y0, u_x1, ...). The linear elastic energy is 0.5 u^T K u.
class StiffnessMatrix {
public:
    explicit StiffnessMatrix(Eigen::SparseMatrix<double> k) : k_(std::move(k)) {}

    const Eigen::SparseMatrix<double> &matrix() const { return k_; }
    int dof_count() const { return static_cast<int>(k_.rows()); }

    std::vector<double> apply(std::span<const double> u) const;

private:
    Eigen::SparseMatrix<double> k_;
};

StiffnessMatrix assemble_stiffness(const TriMesh &mesh, const ElasticParams &params);

struct ElasticEnergy {
    double energy = 0.0;
    std::vector<double> gradient;
};

/// energy = 0.5 u^T K u, gradient = K u.
ElasticEnergy energy_and_grad(const StiffnessMatrix &k, std::span<const double> u);

/// The three discrete rigid motions (x-translation, y-translation, linearised
/// rotation about the origin) as dof vectors.
std::vector<std::vector<double>> rigid_motions(const TriMesh &mesh);

} // namespace radreg
