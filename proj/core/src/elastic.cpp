#include "radreg/elastic.hpp"

#include <array>
#include <stdexcept>

namespace radreg {

void ElasticParams::validate() const {
    if (!(mu > 0.0)) throw std::invalid_argument("ElasticParams: mu must be positive");
    if (!(lambda >= 0.0)) throw std::invalid_argument("ElasticParams: lambda must be non-negative");
}

std::vector<double> StiffnessMatrix::apply(std::span<const double> u) const {
    if (static_cast<Eigen::Index>(u.size()) != k_.cols()) {
        throw std::invalid_argument("StiffnessMatrix::apply: dimension mismatch");
    }
    const Eigen::Map<const Eigen::VectorXd> x(u.data(), static_cast<Eigen::Index>(u.size()));
    const Eigen::VectorXd y = k_ * x;
    return {y.data(), y.data() + y.size()};
}

StiffnessMatrix assemble_stiffness(const TriMesh &mesh, const ElasticParams &params) {
    params.validate();
    const double l = params.lambda, m = params.mu;
    // Strain ordering (e11, e22, 2 e12).
    const std::array<std::array<double, 3>, 3> d{{{l + 2 * m, l, 0.0}, {l, l + 2 * m, 0.0}, {0.0, 0.0, m}}};

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(mesh.triangle_count()) * 36);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const Triangle &tri = mesh.triangles()[t];
        const double area = mesh.signed_area(t);
        if (!(area > 0.0)) throw std::invalid_argument("assemble_stiffness: degenerate triangle");
        // Constant P1 gradients: dN_i/dx = (y_j - y_k) / 2A, dN_i/dy = (x_k - x_j) / 2A.
        std::array<double, 3> bx{}, by{};
        for (int i = 0; i < 3; ++i) {
            const Vec2 &pj = mesh.nodes()[tri[(i + 1) % 3]];
            const Vec2 &pk = mesh.nodes()[tri[(i + 2) % 3]];
            bx[i] = (pj.y - pk.y) / (2.0 * area);
            by[i] = (pk.x - pj.x) / (2.0 * area);
        }
        // B is 3 x 6 over local dofs (ux0, uy0, ux1, uy1, ux2, uy2).
        std::array<std::array<double, 6>, 3> b{};
        for (int i = 0; i < 3; ++i) {
            b[0][2 * i] = bx[i];
            b[1][2 * i + 1] = by[i];
            b[2][2 * i] = by[i];
            b[2][2 * i + 1] = bx[i];
        }
        std::array<std::array<double, 6>, 3> db{};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 6; ++c)
                for (int q = 0; q < 3; ++q) db[r][c] += d[r][q] * b[q][c];
        for (int r = 0; r < 6; ++r) {
            for (int c = 0; c < 6; ++c) {
                double v = 0.0;
                for (int q = 0; q < 3; ++q) v += b[q][r] * db[q][c];
                triplets.emplace_back(2 * tri[r / 2] + r % 2, 2 * tri[c / 2] + c % 2, area * v);
            }
        }
    }
    Eigen::SparseMatrix<double> k(mesh.dof_count(), mesh.dof_count());
    k.setFromTriplets(triplets.begin(), triplets.end());
    k.makeCompressed();
    return StiffnessMatrix(std::move(k));
}

ElasticEnergy energy_and_grad(const StiffnessMatrix &k, std::span<const double> u) {
    ElasticEnergy out;
    out.gradient = k.apply(u);
    double e = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) e += u[i] * out.gradient[i];
    out.energy = 0.5 * e;
    return out;
}

std::vector<std::vector<double>> rigid_motions(const TriMesh &mesh) {
    const auto n = static_cast<std::size_t>(mesh.dof_count());
    std::vector<std::vector<double>> out(3, std::vector<double>(n, 0.0));
    for (int a = 0; a < mesh.node_count(); ++a) {
        const Vec2 &p = mesh.nodes()[a];
        out[0][2 * a] = 1.0;
        out[1][2 * a + 1] = 1.0;
        out[2][2 * a] = -p.y;
        out[2][2 * a + 1] = p.x;
    }
    return out;
}

} // namespace radreg
