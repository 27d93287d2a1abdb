#include "radreg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace radreg {

namespace {

constexpr double kInsideTol = 1e-12;

} // namespace

TriMesh::TriMesh(std::vector<Vec2> nodes, std::vector<Triangle> triangles, double extent)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)), extent_(extent) {
    if (nodes_.size() < 3 || triangles_.empty()) {
        throw std::invalid_argument("TriMesh: need at least 3 nodes and 1 triangle");
    }
    const double slack = 1e-9 * extent_;
    for (const Vec2 &p : nodes_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || std::abs(p.x) > extent_ + slack ||
            std::abs(p.y) > extent_ + slack) {
            throw std::invalid_argument("TriMesh: node outside the closed domain");
        }
    }
    double total = 0.0;
    for (int t = 0; t < triangle_count(); ++t) {
        for (int v : triangles_[t]) {
            if (v < 0 || v >= node_count()) {
                throw std::invalid_argument("TriMesh: triangle references a missing node");
            }
        }
        const double area = signed_area(t);
        if (!(area > 0.0)) {
            throw std::invalid_argument("TriMesh: triangle " + std::to_string(t) +
                                        " is degenerate or clockwise");
        }
        total += area;
    }
    const double domain = 4.0 * extent_ * extent_;
    if (std::abs(total - domain) > 1e-9 * domain) {
        throw std::invalid_argument("TriMesh: triangles do not cover the domain (area " +
                                    std::to_string(total) + ")");
    }
}

double TriMesh::signed_area(int t) const {
    const Triangle &tri = triangles_[t];
    const Vec2 &a = nodes_[tri[0]], &b = nodes_[tri[1]], &c = nodes_[tri[2]];
    return 0.5 * cross(b - a, c - a);
}

std::array<double, 3> TriMesh::barycentric(int t, Vec2 x) const {
    const Triangle &tri = triangles_[t];
    const Vec2 &a = nodes_[tri[0]], &b = nodes_[tri[1]], &c = nodes_[tri[2]];
    const double area2 = cross(b - a, c - a);
    const double l0 = cross(b - x, c - x) / area2;
    const double l1 = cross(c - x, a - x) / area2;
    return {l0, l1, 1.0 - l0 - l1};
}

ShapeValues TriMesh::locate(Vec2 x) const {
    const Vec2 p{std::clamp(x.x, -extent_, extent_), std::clamp(x.y, -extent_, extent_)};
    int best = 0;
    double best_min = -std::numeric_limits<double>::infinity();
    std::array<double, 3> best_w{};
    for (int t = 0; t < triangle_count(); ++t) {
        const auto w = barycentric(t, p);
        const double m = std::min({w[0], w[1], w[2]});
        if (m >= -kInsideTol) {
            return {t, w};
        }
        if (m > best_min) {
            best_min = m;
            best = t;
            best_w = w;
        }
    }
    // Rounding skim at the boundary: project onto the closest triangle.
    for (double &v : best_w) v = std::max(v, 0.0);
    const double s = best_w[0] + best_w[1] + best_w[2];
    for (double &v : best_w) v /= s;
    return {best, best_w};
}

TriMesh build_structured_mesh(double extent, int divisions) {
    if (divisions < 1) throw std::invalid_argument("build_structured_mesh: divisions must be >= 1");
    const int k = divisions;
    const double h = 2.0 * extent / k;
    std::vector<Vec2> nodes;
    nodes.reserve(static_cast<std::size_t>(k + 1) * (k + 1));
    for (int r = 0; r <= k; ++r) {
        for (int c = 0; c <= k; ++c) {
            // Pin the last row/column to the boundary exactly.
            const double x = c == k ? extent : -extent + c * h;
            const double y = r == k ? extent : -extent + r * h;
            nodes.push_back({x, y});
        }
    }
    std::vector<Triangle> tris;
    tris.reserve(static_cast<std::size_t>(2) * k * k);
    const auto id = [k](int r, int c) { return r * (k + 1) + c; };
    for (int r = 0; r < k; ++r) {
        for (int c = 0; c < k; ++c) {
            tris.push_back({id(r, c), id(r, c + 1), id(r + 1, c + 1)});
            tris.push_back({id(r, c), id(r + 1, c + 1), id(r + 1, c)});
        }
    }
    return TriMesh(std::move(nodes), std::move(tris), extent);
}

namespace {

struct Circle {
    Vec2 centre;
    double radius2;
};

Circle circumcircle(const Vec2 &a, const Vec2 &b, const Vec2 &c) {
    const double d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    const double a2 = dot(a, a), b2 = dot(b, b), c2 = dot(c, c);
    const Vec2 centre{(a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d,
                      (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d};
    const Vec2 r = a - centre;
    return {centre, dot(r, r)};
}

} // namespace

TriMesh delaunay_mesh(std::vector<Vec2> points, double extent) {
    if (points.size() < 3) throw std::invalid_argument("delaunay_mesh: need at least 3 points");
    const int n = static_cast<int>(points.size());
    const double big = 100.0 * extent;
    std::vector<Vec2> all = points;
    all.push_back({-big, -big});
    all.push_back({big, -big});
    all.push_back({0.0, big});

    struct Tri {
        Triangle v;
        Circle circle;
    };
    const auto make = [&all](int a, int b, int c) {
        if (cross(all[b] - all[a], all[c] - all[a]) < 0.0) std::swap(b, c);
        return Tri{{a, b, c}, circumcircle(all[a], all[b], all[c])};
    };

    std::vector<Tri> tris{make(n, n + 1, n + 2)};
    for (int p = 0; p < n; ++p) {
        const Vec2 &q = all[p];
        std::vector<Tri> keep;
        std::map<std::pair<int, int>, int> edges;
        for (const Tri &t : tris) {
            const Vec2 d = q - t.circle.centre;
            if (dot(d, d) < t.circle.radius2 * (1.0 - 1e-12)) {
                for (int e = 0; e < 3; ++e) {
                    int a = t.v[e], b = t.v[(e + 1) % 3];
                    if (a > b) std::swap(a, b);
                    ++edges[{a, b}];
                }
            } else {
                keep.push_back(t);
            }
        }
        for (const auto &[edge, count] : edges) {
            if (count == 1) keep.push_back(make(edge.first, edge.second, p));
        }
        tris = std::move(keep);
    }

    std::vector<Triangle> out;
    for (const Tri &t : tris) {
        if (t.v[0] < n && t.v[1] < n && t.v[2] < n) out.push_back(t.v);
    }
    // Deterministic element order: by sorted vertex triple.
    std::sort(out.begin(), out.end(), [](Triangle a, Triangle b) {
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        return a < b;
    });
    return TriMesh(std::move(points), std::move(out), extent);
}

TriMesh coarse_mesh(double extent) {
    std::vector<Vec2> pts;
    const double h = extent / 2.0;
    for (int r = 0; r <= 4; ++r) {
        for (int c = 0; c <= 4; ++c) {
            pts.push_back({-extent + c * h, -extent + r * h});
        }
    }
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            pts.push_back({-extent + (c + 0.5) * h, -extent + (r + 0.5) * h});
        }
    }
    return delaunay_mesh(std::move(pts), extent);
}

TriMesh fine_mesh(double extent) { return build_structured_mesh(extent, 16); }

TriMesh mesh_preset(const std::string &name, double extent) {
    if (name == "coarse") return coarse_mesh(extent);
    if (name == "fine") return fine_mesh(extent);
    throw std::invalid_argument("unknown mesh preset '" + name + "' (expected coarse or fine)");
}

void write_mesh(std::ostream &os, const TriMesh &mesh) {
    os.precision(17);
    os << "nodes " << mesh.node_count() << '\n';
    for (const Vec2 &p : mesh.nodes()) os << p.x << ' ' << p.y << '\n';
    os << "triangles " << mesh.triangle_count() << '\n';
    for (const Triangle &t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

TriMesh read_mesh(std::istream &is, double extent) {
    std::string tag;
    int count = 0;
    if (!(is >> tag >> count) || tag != "nodes" || count < 3) {
        throw std::runtime_error("read_mesh: expected 'nodes <count>'");
    }
    std::vector<Vec2> nodes(static_cast<std::size_t>(count));
    for (Vec2 &p : nodes) {
        if (!(is >> p.x >> p.y)) throw std::runtime_error("read_mesh: truncated node list");
    }
    if (!(is >> tag >> count) || tag != "triangles" || count < 1) {
        throw std::runtime_error("read_mesh: expected 'triangles <count>'");
    }
    std::vector<Triangle> tris(static_cast<std::size_t>(count));
    for (Triangle &t : tris) {
        if (!(is >> t[0] >> t[1] >> t[2])) throw std::runtime_error("read_mesh: truncated triangle list");
    }
    return TriMesh(std::move(nodes), std::move(tris), extent);
}

DisplacementField::DisplacementField(std::shared_ptr<const TriMesh> mesh)
    : DisplacementField(mesh, std::vector<Vec2>(static_cast<std::size_t>(mesh->node_count()))) {}

DisplacementField::DisplacementField(std::shared_ptr<const TriMesh> mesh, std::vector<Vec2> nodal)
    : mesh_(std::move(mesh)), nodal_(std::move(nodal)) {
    if (!mesh_) throw std::invalid_argument("DisplacementField: null mesh");
    if (static_cast<int>(nodal_.size()) != mesh_->node_count()) {
        throw std::invalid_argument("DisplacementField: nodal count does not match mesh");
    }
    for (const Vec2 &v : nodal_) {
        if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
            throw std::invalid_argument("DisplacementField: non-finite nodal value");
        }
    }
}

DisplacementField DisplacementField::from_dofs(std::shared_ptr<const TriMesh> mesh, std::span<const double> dofs) {
    if (static_cast<int>(dofs.size()) != mesh->dof_count()) {
        throw std::invalid_argument("DisplacementField: dof vector has wrong length");
    }
    std::vector<Vec2> nodal(dofs.size() / 2);
    for (std::size_t a = 0; a < nodal.size(); ++a) nodal[a] = {dofs[2 * a], dofs[2 * a + 1]};
    return DisplacementField(std::move(mesh), std::move(nodal));
}

std::vector<double> DisplacementField::dofs() const {
    std::vector<double> out(2 * nodal_.size());
    for (std::size_t a = 0; a < nodal_.size(); ++a) {
        out[2 * a] = nodal_[a].x;
        out[2 * a + 1] = nodal_[a].y;
    }
    return out;
}

Vec2 DisplacementField::operator()(Vec2 x) const {
    const ShapeValues sv = mesh_->locate(x);
    const Triangle &tri = mesh_->triangles()[sv.triangle];
    Vec2 u;
    for (int k = 0; k < 3; ++k) u += sv.weights[k] * nodal_[tri[k]];
    return u;
}

PixelShapeTable::PixelShapeTable(const TriMesh &mesh, int n)
    : n_(n), dof_count_(mesh.dof_count()), entries_(static_cast<std::size_t>(n) * n) {
    const Image grid(n, mesh.extent());
    const double h = grid.spacing();
    const double a = mesh.extent();
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const Triangle &tri = mesh.triangles()[t];
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (int v : tri) {
            xmin = std::min(xmin, mesh.nodes()[v].x);
            xmax = std::max(xmax, mesh.nodes()[v].x);
            ymin = std::min(ymin, mesh.nodes()[v].y);
            ymax = std::max(ymax, mesh.nodes()[v].y);
        }
        const int c0 = std::max(0, static_cast<int>(std::floor((xmin + a) / h - 0.5)));
        const int c1 = std::min(n - 1, static_cast<int>(std::ceil((xmax + a) / h - 0.5)));
        const int r0 = std::max(0, static_cast<int>(std::floor((ymin + a) / h - 0.5)));
        const int r1 = std::min(n - 1, static_cast<int>(std::ceil((ymax + a) / h - 0.5)));
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                ShapeValues &e = entries_[static_cast<std::size_t>(r) * n + c];
                if (e.triangle >= 0) continue;
                const auto w = mesh.barycentric(t, grid.center(r, c));
                if (std::min({w[0], w[1], w[2]}) >= -kInsideTol) e = {t, w};
            }
        }
    }
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            ShapeValues &e = entries_[static_cast<std::size_t>(r) * n + c];
            if (e.triangle < 0) e = mesh.locate(grid.center(r, c));
        }
    }
    node_ids_.resize(entries_.size());
    for (std::size_t p = 0; p < entries_.size(); ++p) node_ids_[p] = mesh.triangles()[entries_[p].triangle];
}

PixelField PixelShapeTable::rasterize(std::span<const double> dofs) const {
    if (static_cast<int>(dofs.size()) != dof_count_) {
        throw std::invalid_argument("PixelShapeTable::rasterize: dof vector has wrong length");
    }
    PixelField out(entries_.size());
    for (std::size_t p = 0; p < entries_.size(); ++p) {
        const auto &w = entries_[p].weights;
        const Triangle &tri = node_ids_[p];
        Vec2 u;
        for (int k = 0; k < 3; ++k) {
            u.x += w[k] * dofs[2 * tri[k]];
            u.y += w[k] * dofs[2 * tri[k] + 1];
        }
        out[p] = u;
    }
    return out;
}

void PixelShapeTable::scatter(std::span<const Vec2> density, std::span<double> out) const {
    if (density.size() != entries_.size() || static_cast<int>(out.size()) != dof_count_) {
        throw std::invalid_argument("PixelShapeTable::scatter: size mismatch");
    }
    for (std::size_t p = 0; p < entries_.size(); ++p) {
        const auto &w = entries_[p].weights;
        const Triangle &tri = node_ids_[p];
        for (int k = 0; k < 3; ++k) {
            out[2 * tri[k]] += w[k] * density[p].x;
            out[2 * tri[k] + 1] += w[k] * density[p].y;
        }
    }
}

PixelField rasterize_field(const DisplacementField &field, int n) {
    return PixelShapeTable(field.mesh(), n).rasterize(field.dofs());
}

std::vector<double> area_ratios(const DisplacementField &field) {
    const TriMesh &mesh = field.mesh();
    std::vector<double> out(static_cast<std::size_t>(mesh.triangle_count()));
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const Triangle &tri = mesh.triangles()[t];
        const Vec2 a = mesh.nodes()[tri[0]] + field.nodal()[tri[0]];
        const Vec2 b = mesh.nodes()[tri[1]] + field.nodal()[tri[1]];
        const Vec2 c = mesh.nodes()[tri[2]] + field.nodal()[tri[2]];
        out[t] = 0.5 * cross(b - a, c - a) / mesh.signed_area(t);
    }
    return out;
}

} // namespace radreg
