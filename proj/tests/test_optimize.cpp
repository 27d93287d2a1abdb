#include <doctest.h>

#include <Eigen/Dense>
#include <memory>

#include "radreg/metrics.hpp"
#include "radreg/optimize.hpp"
#include "support.hpp"

using namespace radreg;

namespace {

ObjectiveFn rosenbrock() {
    return [](std::span<const double> x, std::span<double> g) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        const double v = a * a + 100.0 * b * b;
        return Evaluation{v, v, 0.0};
    };
}

struct Quadratic {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;

    explicit Quadratic(int n, std::uint64_t seed) {
        const auto m = test::random_vector(static_cast<std::size_t>(n) * n, seed);
        const Eigen::MatrixXd q = Eigen::Map<const Eigen::MatrixXd>(m.data(), n, n);
        a = q * q.transpose() + Eigen::MatrixXd::Identity(n, n);
        const auto bv = test::random_vector(n, seed + 1);
        b = Eigen::Map<const Eigen::VectorXd>(bv.data(), n);
    }

    ObjectiveFn fn() const {
        return [this](std::span<const double> x, std::span<double> g) {
            const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
            const Eigen::VectorXd ax = a * xv;
            Eigen::Map<Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size())) = ax - b;
            const double v = 0.5 * xv.dot(ax) - b.dot(xv);
            return Evaluation{v, v, 0.0};
        };
    }
};

OptimizerConfig untimed() {
    OptimizerConfig c;
    c.timing = false;
    return c;
}

} // namespace

TEST_CASE("convex quadratic reaches the direct solution") {
    const Quadratic q(10, 21);
    OptimizerConfig cfg = untimed();
    cfg.grad_tol = 1e-11;
    const MinimizeResult r = minimize(q.fn(), std::vector<double>(10, 0.0), cfg);
    const Eigen::VectorXd exact = q.a.ldlt().solve(q.b);
    CHECK((Eigen::Map<const Eigen::VectorXd>(r.x.data(), 10) - exact).norm() <= 1e-8);
    CHECK(r.iterations() <= 50);
    CHECK(r.status != OptimizerStatus::MaxIters);
}

TEST_CASE("a stationary start returns immediately") {
    const Quadratic q(4, 3);
    const Eigen::VectorXd exact = q.a.ldlt().solve(q.b);
    const std::vector<double> x0(exact.data(), exact.data() + 4);
    OptimizerConfig cfg = untimed();
    cfg.grad_tol = 1e-8;
    const MinimizeResult r = minimize(q.fn(), x0, cfg);
    CHECK(r.iterations() == 0);
    CHECK(r.x == x0);
    CHECK(r.status == OptimizerStatus::ConvergedGrad);
}

TEST_CASE("Rosenbrock") {
    OptimizerConfig cfg = untimed();
    cfg.grad_tol = 1e-9;
    cfg.max_iters = 500;
    cfg.initial_step = 1.0;
    const MinimizeResult r = minimize(rosenbrock(), {-1.2, 1.0}, cfg);
    CHECK(std::abs(r.x[0] - 1.0) <= 1e-6);
    CHECK(std::abs(r.x[1] - 1.0) <= 1e-6);
    SUBCASE("accepted iterates never increase the objective") {
        double prev = r.initial.value;
        for (const IterationRecord &rec : r.trace) {
            CHECK(rec.value <= prev);
            prev = rec.value;
        }
    }
    SUBCASE("trace is complete and deterministic") {
        for (std::size_t i = 0; i < r.trace.size(); ++i) CHECK(r.trace[i].iter == static_cast<int>(i) + 1);
        CHECK(r.trace.back().evaluations == r.evaluations);
        const MinimizeResult again = minimize(rosenbrock(), {-1.2, 1.0}, cfg);
        CHECK(again.trace == r.trace);
        CHECK(again.x == r.x);
    }
}

TEST_CASE("stop rules") {
    SUBCASE("iteration cap") {
        OptimizerConfig cfg = untimed();
        cfg.max_iters = 3;
        cfg.grad_tol = 0.0;
        const MinimizeResult r = minimize(rosenbrock(), {-1.2, 1.0}, cfg);
        CHECK(r.status == OptimizerStatus::MaxIters);
        CHECK(r.iterations() == 3);
    }
    SUBCASE("stalled objective") {
        OptimizerConfig cfg = untimed();
        cfg.grad_tol = 0.0;
        cfg.max_iters = 100;
        cfg.initial_step = 1.0;
        // Any decrease counts as stalled: the rule fires once the window fills.
        cfg.value_tol = 1e9;
        cfg.value_window = 3;
        const MinimizeResult r = minimize(rosenbrock(), {-1.2, 1.0}, cfg);
        CHECK(r.status == OptimizerStatus::ConvergedValue);
        CHECK(r.iterations() == 3);
        // Disabled, the same run continues.
        cfg.value_tol = 0.0;
        CHECK(minimize(rosenbrock(), {-1.2, 1.0}, cfg).iterations() > 3);
    }
    SUBCASE("non-finite objective") {
        const ObjectiveFn bad = [](std::span<const double> x, std::span<double> g) {
            g[0] = 1.0;
            const double v = x[0] < 0.5 ? std::nan("") : x[0];
            return Evaluation{v, v, 0.0};
        };
        OptimizerConfig cfg = untimed();
        const MinimizeResult start = minimize(bad, {0.0}, cfg);
        CHECK(start.status == OptimizerStatus::NonFinite);
        CHECK(start.iterations() == 0);
        // NaN trial points are backed away from; the result stays finite.
        const MinimizeResult r = minimize(bad, {1.0}, cfg);
        CHECK(std::isfinite(r.final.value));
        CHECK(r.x[0] >= 0.5);
        CHECK(r.final.value < 1.0);
    }
}

TEST_CASE("configuration checks and status names") {
    OptimizerConfig c;
    CHECK_NOTHROW(c.validate());
    c.c2 = 1e-5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = OptimizerConfig{};
    c.memory = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = OptimizerConfig{};
    c.max_iters = -1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = OptimizerConfig{};
    c.value_window = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    for (OptimizerStatus s : {OptimizerStatus::ConvergedGrad, OptimizerStatus::ConvergedStep,
                              OptimizerStatus::ConvergedValue, OptimizerStatus::MaxIters, OptimizerStatus::NonFinite})
        CHECK(parse_status(to_string(s)) == s);
    CHECK(to_string(OptimizerStatus::MaxIters) == "max_iters");
    CHECK_THROWS_AS(parse_status("done"), std::invalid_argument);
    CHECK(registration_optimizer_defaults().value_tol > 0.0);
}

TEST_CASE("registering an image onto itself does nothing") {
    const Image img = shepp_logan(64);
    const auto mesh = std::make_shared<const TriMesh>(coarse_mesh());
    for (MeasureKind k : all_measures()) {
        RegistrationConfig cfg;
        cfg.kind = k;
        cfg.alpha = paper_best_alpha(k);
        const RegistrationRun run = register_images(img, img, mesh, cfg);
        CHECK(rmse(run.warped, img) <= 1e-6);
        for (const Vec2 &v : run.field.nodal()) CHECK(std::max(std::abs(v.x), std::abs(v.y)) <= 1e-3);
        CHECK(run.result.iterations() <= 5);
    }
}

TEST_CASE("a translated disk is recovered to within half a pixel") {
    const int n = 64;
    const double px = 2.0 / n;
    const Vec2 t{3 * px, 0.0};
    const Image ref = disk(n, 0.4), tpl = disk(n, 0.4, 1.0, t);
    RegistrationConfig cfg;
    cfg.kind = MeasureKind::RSSD;
    cfg.alpha = 0.02;
    const RegistrationRun run = register_images(ref, tpl, std::make_shared<const TriMesh>(coarse_mesh()), cfg);
    const PixelField f = rasterize_field(run.field, n);
    Vec2 mean{};
    int count = 0;
    for (std::size_t p = 0; p < f.size(); ++p) {
        if (ref.pixels()[p] <= 0.5) continue;
        mean += f[p];
        ++count;
    }
    mean *= 1.0 / count;
    CHECK(std::abs(mean.x - t.x) <= 0.5 * px);
    CHECK(std::abs(mean.y - t.y) <= 0.5 * px);
    CHECK(rmse(run.warped, ref) < rmse(tpl, ref));
    // The run is reproducible.
    cfg.optimizer.timing = false;
    const RegistrationRun a = register_images(ref, tpl, std::make_shared<const TriMesh>(coarse_mesh()), cfg);
    const RegistrationRun b = register_images(ref, tpl, std::make_shared<const TriMesh>(coarse_mesh()), cfg);
    CHECK(a.result.trace == b.result.trace);
    CHECK(a.field.nodal() == b.field.nodal());
}
