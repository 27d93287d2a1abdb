#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "radreg/geometry.hpp"
#include "radreg/image.hpp"

namespace radreg {

using Triangle = std::array<int, 3>;

/// Result of locating a point: containing triangle and its barycentric weights,
/// which are exactly the values of the three non-zero P1 shape functions.
struct ShapeValues {
    int triangle = -1;
    std::array<double, 3> weights{};
};

/// Triangulation of [-a, a]^2 with counter-clockwise triangles. All nodes are
/// free degrees of freedom, boundary nodes included.
class TriMesh {
public:
    /// Validates orientation, containment in the closed domain and full coverage.
    TriMesh(std::vector<Vec2> nodes, std::vector<Triangle> triangles, double extent = 1.0);

    const std::vector<Vec2> &nodes() const { return nodes_; }
    const std::vector<Triangle> &triangles() const { return triangles_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }
    int triangle_count() const { return static_cast<int>(triangles_.size()); }
    int dof_count() const { return 2 * node_count(); }
    double extent() const { return extent_; }

    double signed_area(int t) const;

    /// Barycentric weights of x with respect to triangle t (sum to 1 exactly
    /// up to rounding of the last weight).
    std::array<double, 3> barycentric(int t, Vec2 x) const;

    /// P1 shape values at x. Ties on shared edges go to the lowest triangle
    /// index. Points outside the domain are clamped onto it first.
    ShapeValues locate(Vec2 x) const;

private:
    std::vector<Vec2> nodes_;
    std::vector<Triangle> triangles_;
    double extent_ = 1.0;
};

/// Structured (k+1)^2 grid with every cell split along its rising diagonal.
TriMesh build_structured_mesh(double extent, int divisions);

/// Bowyer-Watson Delaunay triangulation of a point set whose convex hull is the
/// square [-a, a]^2.
TriMesh delaunay_mesh(std::vector<Vec2> points, double extent = 1.0);

/// 41 nodes / 64 triangles / 82 dof: a 5x5 lattice plus the 16 cell centres.
TriMesh coarse_mesh(double extent = 1.0);

/// Structured k = 16 grid: 289 nodes, 512 triangles.
TriMesh fine_mesh(double extent = 1.0);

/// "coarse" or "fine"; throws std::invalid_argument otherwise.
TriMesh mesh_preset(const std::string &name, double extent = 1.0);

void write_mesh(std::ostream &os, const TriMesh &mesh);
TriMesh read_mesh(std::istream &is, double extent = 1.0);

/// Continuous piecewise-linear displacement u(x) = sum_A N_A(x) u_A.
class DisplacementField {
public:
    explicit DisplacementField(std::shared_ptr<const TriMesh> mesh);
    DisplacementField(std::shared_ptr<const TriMesh> mesh, std::vector<Vec2> nodal);

    /// From the interleaved dof vector (u_x0, u_y0, u_x1, ...).
    static DisplacementField from_dofs(std::shared_ptr<const TriMesh> mesh, std::span<const double> dofs);

    const TriMesh &mesh() const { return *mesh_; }
    const std::shared_ptr<const TriMesh> &mesh_ptr() const { return mesh_; }
    const std::vector<Vec2> &nodal() const { return nodal_; }
    std::vector<Vec2> &nodal() { return nodal_; }
    std::vector<double> dofs() const;

    Vec2 operator()(Vec2 x) const;

private:
    std::shared_ptr<const TriMesh> mesh_;
    std::vector<Vec2> nodal_;
};

inline Vec2 eval_field(const DisplacementField &field, Vec2 x) { return field(x); }

/// Cached point location of every pixel centre of an N x N image, reused to
/// rasterize fields and to scatter pixel densities back onto nodes.
class PixelShapeTable {
public:
    PixelShapeTable(const TriMesh &mesh, int n);

    int image_size() const { return n_; }
    int dof_count() const { return dof_count_; }
    const std::vector<ShapeValues> &entries() const { return entries_; }

    /// Per-pixel displacement for interleaved nodal dofs.
    PixelField rasterize(std::span<const double> dofs) const;

    /// out[2A + d] += sum_p N_A(x_p) density[p].d, i.e. the transpose of rasterize.
    void scatter(std::span<const Vec2> density, std::span<double> out) const;

private:
    int n_;
    int dof_count_;
    std::vector<ShapeValues> entries_;
    std::vector<Triangle> node_ids_;
};

PixelField rasterize_field(const DisplacementField &field, int n);

/// Area of each displaced triangle divided by its reference area.
std::vector<double> area_ratios(const DisplacementField &field);

} // namespace radreg
