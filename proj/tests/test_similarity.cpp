#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "radreg/optimize.hpp"
#include "radreg/similarity.hpp"
#include "support.hpp"

using namespace radreg;

namespace {

std::shared_ptr<const TriMesh> coarse() { return std::make_shared<const TriMesh>(coarse_mesh()); }

Image smooth_reference(int n) {
    return test::gaussian_blobs(n, {{0.1, 0.2, 0.25, 0.8}, {-0.35, -0.2, 0.18, 0.6}, {0.3, -0.4, 0.12, 0.5}});
}

Image smooth_template(int n) {
    return test::gaussian_blobs(n, {{0.15, 0.17, 0.24, 0.8}, {-0.3, -0.25, 0.2, 0.6}, {0.33, -0.35, 0.12, 0.5}});
}

std::vector<double> constant_dofs(const TriMesh &m, Vec2 t) {
    std::vector<double> d;
    for (int a = 0; a < m.node_count(); ++a) {
        d.push_back(t.x);
        d.push_back(t.y);
    }
    return d;
}

double sum_sq(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

} // namespace

TEST_CASE("measure names") {
    for (MeasureKind k : all_measures()) CHECK(parse_measure(to_string(k)) == k);
    CHECK(parse_measure("SSD") == MeasureKind::SSD);
    CHECK(parse_measure("R#RSSD") == MeasureKind::RSharpRSSD);
    CHECK(to_string(MeasureKind::RSharpRSSD) == "rsharp");
    CHECK_THROWS_AS(parse_measure("ncc"), std::invalid_argument);
    CHECK(all_measures().size() == 3);
    CHECK(paper_best_alpha(MeasureKind::RSSD) == 0.02);
    CHECK(paper_best_alpha(MeasureKind::SSD) == 0.003);
    CHECK(paper_best_alpha(MeasureKind::RSharpRSSD) == 0.007);
}

TEST_CASE("identical images give zero value and zero gradient") {
    const Image r = smooth_reference(32);
    const SimilarityContext ctx(r, r, ProjectorGeometry::standard(32), coarse());
    const std::vector<double> u(ctx.dof_count(), 0.0);
    for (MeasureKind k : all_measures()) {
        const MeasureEvaluation e = evaluate_with_gradient(k, ctx, u);
        CHECK(e.value == 0.0);
        for (double g : e.gradient) CHECK(g == 0.0);
        CHECK(normalization_scale(k, ctx) == 1.0);
        const StiffnessMatrix stiff = assemble_stiffness(ctx.mesh(), {});
        const ObjectiveValue j = eval_objective(k, ctx, stiff, u, 0.5);
        CHECK(j.value == 0.0);
        CHECK(test::max_abs(j.gradient) == 0.0);
    }
}

TEST_CASE("SSD of a constant unit residual is four") {
    Image one(32);
    for (double &v : one.pixels()) v = 1.0;
    const SimilarityContext ctx(Image(32), one, ProjectorGeometry::standard(32), coarse());
    CHECK(eval_ssd(ctx, std::vector<double>(ctx.dof_count(), 0.0)) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("projection-domain measures equal their residual-operator forms") {
    const int n = 32;
    const auto g = ProjectorGeometry::standard(n);
    const SimilarityContext ctx(smooth_reference(n), smooth_template(n), g, coarse());
    const auto u = test::random_vector(ctx.dof_count(), 3, 0.04);
    const Image r = ctx.warped_template(u) - ctx.reference();
    const Sinogram rr = radon_forward(r, g);
    const double rssd = 0.5 * (2 * std::numbers::pi / (g.n_omega * g.n_s)) * sum_sq(rr.data());
    CHECK(eval_rssd(ctx, u) == doctest::Approx(rssd).epsilon(1e-10));
    const Image bp = radon_adjoint(rr, g);
    CHECK(eval_rsharp(ctx, u) == doctest::Approx(0.5 * (4.0 / (n * n)) * sum_sq(bp.pixels())).epsilon(1e-10));
    CHECK(eval_ssd(ctx, u) == doctest::Approx((4.0 / (n * n)) * sum_sq(r.pixels())).epsilon(1e-12));
    for (MeasureKind k : all_measures()) CHECK(evaluate(k, ctx, u) == evaluate_with_gradient(k, ctx, u).value);
    // 1/2 <R#R r, r>_img = 1/2 ||R r||^2_sino
    CHECK(0.5 * image_inner(pseudo_reconstruction(r, g), r) ==
          doctest::Approx(0.5 * sinogram_inner(rr, rr, g)).epsilon(1e-8));
}

TEST_CASE("translated disk: positive, and decreasing towards the true shift") {
    const int n = 64;
    const Vec2 t{0.12, -0.05};
    const Image ref = disk(n, 0.4), tpl = disk(n, 0.4, 1.0, t);
    const SimilarityContext ctx(ref, tpl, ProjectorGeometry::standard(n), coarse());
    for (MeasureKind k : all_measures()) {
        CAPTURE(to_string(k));
        double prev = evaluate(k, ctx, std::vector<double>(ctx.dof_count(), 0.0));
        CHECK(prev > 0.0);
        for (int step = 1; step <= 10; ++step) {
            const double cur = evaluate(k, ctx, constant_dofs(ctx.mesh(), t * (step / 10.0)));
            CHECK(cur <= prev);
            prev = cur;
        }
        // T_u is then the disk at the origin, up to interpolation.
        CHECK(prev < 0.05 * evaluate(k, ctx, std::vector<double>(ctx.dof_count(), 0.0)));
    }
}

TEST_CASE("analytic gradients match central differences") {
    const int n = 64;
    const SimilarityContext ctx(smooth_reference(n), smooth_template(n), ProjectorGeometry::standard(n), coarse());
    const auto u = test::random_vector(ctx.dof_count(), 11, 0.03);
    const double h = 1e-6;
    for (MeasureKind k : all_measures()) {
        CAPTURE(to_string(k));
        const auto g = grad(k, ctx, u);
        const double gmax = test::max_abs(g);
        REQUIRE(gmax > 0.0);
        double worst = 0.0;
        for (int i = 0; i < ctx.dof_count(); ++i) {
            auto up = u, dn = u;
            up[i] += h;
            dn[i] -= h;
            const double fd = (evaluate(k, ctx, up) - evaluate(k, ctx, dn)) / (2 * h);
            worst = std::max(worst, std::abs(fd - g[i]) / gmax);
        }
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("directional derivative of the objective") {
    const int n = 32;
    const SimilarityContext ctx(smooth_reference(n), smooth_template(n), ProjectorGeometry::standard(n), coarse());
    const StiffnessMatrix stiff = assemble_stiffness(ctx.mesh(), {});
    const auto u = test::random_vector(ctx.dof_count(), 12, 0.03);
    const auto v = test::random_vector(ctx.dof_count(), 13);
    const double h = 1e-6;
    for (MeasureKind k : all_measures()) {
        const double scale = normalization_scale(k, ctx);
        const ObjectiveValue j = eval_objective(k, ctx, stiff, u, 0.01, scale);
        CHECK(j.value == doctest::Approx(j.data + 0.01 * j.elastic));
        CHECK(j.data == doctest::Approx(scale * j.data_raw));
        auto up = u, dn = u;
        for (std::size_t i = 0; i < u.size(); ++i) {
            up[i] += h * v[i];
            dn[i] -= h * v[i];
        }
        const double fd = (eval_objective(k, ctx, stiff, up, 0.01, scale).value -
                           eval_objective(k, ctx, stiff, dn, 0.01, scale).value) /
                          (2 * h);
        double dir = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) dir += j.gradient[i] * v[i];
        CHECK(fd == doctest::Approx(dir).epsilon(1e-4));
    }
}

TEST_CASE("measures depend on the images only through the residual") {
    const int n = 32;
    // Interior-only displacement keeps every sample inside the pixel-centre hull.
    auto mesh = std::make_shared<const TriMesh>(fine_mesh());
    auto u = test::random_vector(mesh->dof_count(), 14, 0.02);
    for (int a = 0; a < mesh->node_count(); ++a) {
        const Vec2 p = mesh->nodes()[a];
        if (std::max(std::abs(p.x), std::abs(p.y)) > 0.8) u[2 * a] = u[2 * a + 1] = 0.0;
    }
    const Image r = smooth_reference(n), t = smooth_template(n);
    Image shift(n);
    for (double &v : shift.pixels()) v = 0.3;
    const auto g = ProjectorGeometry::standard(n);
    const SimilarityContext a(r, t, g, mesh), b(r + shift, t + shift, g, mesh);
    for (MeasureKind k : all_measures()) CHECK(evaluate(k, b, u) == doctest::Approx(evaluate(k, a, u)).epsilon(1e-10));
}

TEST_CASE("RSSD gradient agrees with a dense-matrix oracle") {
    const int n = 16;
    const auto g = ProjectorGeometry::standard(n);
    const auto mesh = coarse();
    const Image ref = smooth_reference(n), tpl = smooth_template(n);
    const SimilarityContext ctx(ref, tpl, g, mesh);
    const auto u = test::random_vector(ctx.dof_count(), 15, 0.05);
    // Dense forward matrix, column p = R e_p.
    const int np = n * n, ns = g.n_s * g.n_omega;
    std::vector<double> a(static_cast<std::size_t>(np) * ns);
    for (int p = 0; p < np; ++p) {
        Image e(n);
        e.pixels()[p] = 1.0;
        const Sinogram s = radon_forward(e, g);
        std::copy(s.data().begin(), s.data().end(), a.begin() + static_cast<std::ptrdiff_t>(p) * ns);
    }
    const PixelField px = rasterize_field(DisplacementField::from_dofs(mesh, u), n);
    Image r(n);
    std::vector<Vec2> dt(np);
    for (int p = 0; p < np; ++p) {
        const ImageSample s = sample_bilinear_grad(tpl, ref.center(p / n, p % n) + px[p]);
        r.pixels()[p] = s.value - ref.pixels()[p];
        dt[p] = s.gradient;
    }
    std::vector<double> ar(ns, 0.0);
    for (int p = 0; p < np; ++p)
        for (int q = 0; q < ns; ++q) ar[q] += a[static_cast<std::size_t>(p) * ns + q] * r.pixels()[p];
    const double c = 2 * std::numbers::pi / (g.n_omega * g.n_s);
    std::vector<Vec2> density(np);
    for (int p = 0; p < np; ++p) {
        double w = 0.0;
        for (int q = 0; q < ns; ++q) w += a[static_cast<std::size_t>(p) * ns + q] * ar[q];
        density[p] = dt[p] * (c * w);
    }
    std::vector<double> expect(ctx.dof_count(), 0.0);
    PixelShapeTable(*mesh, n).scatter(density, expect);
    const auto got = grad(MeasureKind::RSSD, ctx, u);
    const double scale = test::max_abs(expect);
    for (int i = 0; i < ctx.dof_count(); ++i) CHECK(std::abs(got[i] - expect[i]) <= 1e-10 * scale);
}

TEST_CASE("a huge elastic weight pins the field at zero") {
    const int n = 32;
    const Image ref = disk(n, 0.4), tpl = disk(n, 0.4, 1.0, {0.1, 0.0});
    for (MeasureKind k : all_measures()) {
        RegistrationConfig cfg;
        cfg.kind = k;
        cfg.alpha = 1e6;
        const RegistrationRun run = register_images(ref, tpl, coarse(), cfg);
        double umax = 0.0;
        for (const Vec2 &v : run.field.nodal()) umax = std::max({umax, std::abs(v.x), std::abs(v.y)});
        CHECK(umax <= 1e-3);
    }
}

TEST_CASE("context rejects inconsistent inputs") {
    CHECK_THROWS_AS(SimilarityContext(Image(32), Image(16), ProjectorGeometry::standard(32), coarse()),
                    std::invalid_argument);
    CHECK_THROWS_AS(SimilarityContext(Image(16), Image(16), ProjectorGeometry::standard(32), coarse()),
                    std::invalid_argument);
    const SimilarityContext ctx(Image(16), Image(16), ProjectorGeometry::standard(16), coarse());
    CHECK_THROWS_AS(evaluate(MeasureKind::SSD, ctx, std::vector<double>(3)), std::invalid_argument);
}
