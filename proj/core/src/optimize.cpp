#include "radreg/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace radreg {

void OptimizerConfig::validate() const {
    if (max_iters < 1) throw std::invalid_argument("OptimizerConfig: max_iters must be >= 1");
    if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0)) throw std::invalid_argument("OptimizerConfig: need 0 < c1 < c2 < 1");
    if (!(grad_tol >= 0.0) || !(step_tol >= 0.0)) throw std::invalid_argument("OptimizerConfig: negative tolerance");
    if (memory < 1) throw std::invalid_argument("OptimizerConfig: memory must be >= 1");
    if (max_line_evals < 2) throw std::invalid_argument("OptimizerConfig: max_line_evals must be >= 2");
    if (!(initial_step > 0.0)) throw std::invalid_argument("OptimizerConfig: initial_step must be positive");
    if (!(value_tol >= 0.0)) throw std::invalid_argument("OptimizerConfig: negative value_tol");
    if (value_window < 1) throw std::invalid_argument("OptimizerConfig: value_window must be >= 1");
}

std::string_view to_string(OptimizerStatus status) {
    switch (status) {
    case OptimizerStatus::ConvergedGrad: return "converged_grad";
    case OptimizerStatus::ConvergedStep: return "converged_step";
    case OptimizerStatus::ConvergedValue: return "converged_value";
    case OptimizerStatus::MaxIters: return "max_iters";
    case OptimizerStatus::NonFinite: return "non_finite";
    }
    return "unknown";
}

OptimizerStatus parse_status(std::string_view name) {
    for (auto s : {OptimizerStatus::ConvergedGrad, OptimizerStatus::ConvergedStep, OptimizerStatus::ConvergedValue,
                   OptimizerStatus::MaxIters, OptimizerStatus::NonFinite}) {
        if (to_string(s) == name) return s;
    }
    throw std::invalid_argument("unknown optimizer status '" + std::string(name) + "'");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double inf_norm(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(std::span<const double> a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

/// A trial point on the search line x + alpha d.
struct LinePoint {
    double alpha = 0.0;
    Evaluation eval;
    double slope = 0.0; ///< directional derivative g(x + alpha d) . d
    std::vector<double> x;
    std::vector<double> g;
    bool finite = true;
};

class LineSearch {
public:
    LineSearch(const ObjectiveFn &f, const OptimizerConfig &cfg, std::span<const double> x, std::span<const double> d,
               const LinePoint &origin, int &evals)
        : f_(f), cfg_(cfg), x_(x), d_(d), origin_(origin), evals_(evals) {}

    /// Returns a point satisfying the strong Wolfe conditions, or failing that
    /// the best point with sufficient decrease, or nullopt-like alpha == 0.
    LinePoint run(double alpha0) {
        LinePoint prev = origin_;
        double alpha = alpha0;
        for (int i = 0; i < cfg_.max_line_evals; ++i) {
            LinePoint cur = eval(alpha);
            if (!cur.finite) {
                // Step left the region where the objective is defined; pull back.
                alpha = prev.alpha + 0.25 * (alpha - prev.alpha);
                continue;
            }
            if (!armijo(cur) || (i > 0 && cur.eval.value >= prev.eval.value)) return zoom(prev, cur);
            if (std::abs(cur.slope) <= -cfg_.c2 * origin_.slope) return cur;
            if (cur.slope >= 0.0) return zoom(cur, prev);
            remember(cur);
            prev = std::move(cur);
            alpha *= 4.0;
        }
        return best_;
    }

private:
    bool armijo(const LinePoint &p) const {
        return p.eval.value <= origin_.eval.value + cfg_.c1 * p.alpha * origin_.slope;
    }

    void remember(const LinePoint &p) {
        if (armijo(p) && p.alpha > 0.0 && p.eval.value < best_value_) {
            best_value_ = p.eval.value;
            best_ = p;
        }
    }

    LinePoint eval(double alpha) {
        LinePoint p;
        p.alpha = alpha;
        p.x.resize(x_.size());
        p.g.assign(x_.size(), 0.0);
        for (std::size_t i = 0; i < x_.size(); ++i) p.x[i] = x_[i] + alpha * d_[i];
        p.eval = f_(p.x, p.g);
        ++evals_;
        ++used_;
        p.finite = std::isfinite(p.eval.value) && all_finite(p.g);
        p.slope = p.finite ? dot(p.g, d_) : 0.0;
        return p;
    }

    static double cubic_min(const LinePoint &a, const LinePoint &b) {
        const double d1 = a.slope + b.slope - 3.0 * (a.eval.value - b.eval.value) / (a.alpha - b.alpha);
        const double disc = d1 * d1 - a.slope * b.slope;
        if (disc < 0.0) return 0.5 * (a.alpha + b.alpha);
        const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
        return b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    }

    LinePoint zoom(LinePoint lo, LinePoint hi) {
        remember(lo);
        while (used_ < cfg_.max_line_evals) {
            const double left = std::min(lo.alpha, hi.alpha), right = std::max(lo.alpha, hi.alpha);
            const double width = right - left;
            if (width <= 1e-16 * std::max(1.0, right)) break;
            double alpha = hi.finite ? cubic_min(lo, hi) : 0.5 * (lo.alpha + hi.alpha);
            if (!std::isfinite(alpha) || alpha < left + 0.1 * width || alpha > right - 0.1 * width) {
                alpha = 0.5 * (lo.alpha + hi.alpha);
            }
            LinePoint cur = eval(alpha);
            if (!cur.finite || !armijo(cur) || cur.eval.value >= lo.eval.value) {
                hi = std::move(cur);
                continue;
            }
            if (std::abs(cur.slope) <= -cfg_.c2 * origin_.slope) return cur;
            if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            remember(cur);
            lo = std::move(cur);
        }
        return best_;
    }

    const ObjectiveFn &f_;
    const OptimizerConfig &cfg_;
    std::span<const double> x_;
    std::span<const double> d_;
    const LinePoint &origin_;
    int &evals_;
    int used_ = 0;
    LinePoint best_;
    double best_value_ = std::numeric_limits<double>::infinity();
};

} // namespace

MinimizeResult minimize(const ObjectiveFn &objective, std::vector<double> x0, const OptimizerConfig &cfg) {
    cfg.validate();
    if (!all_finite(x0)) throw std::invalid_argument("minimize: initial point is not finite");
    const auto start = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        if (!cfg.timing) return 0.0;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    const std::size_t n = x0.size();
    MinimizeResult res;
    LinePoint cur;
    cur.x = std::move(x0);
    cur.g.assign(n, 0.0);
    cur.eval = objective(cur.x, cur.g);
    res.evaluations = 1;
    res.initial = cur.eval;
    if (!std::isfinite(cur.eval.value) || !all_finite(cur.g)) {
        res.x = cur.x;
        res.final = cur.eval;
        res.status = OptimizerStatus::NonFinite;
        res.message = "objective is not finite at the initial point";
        return res;
    }

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    std::vector<double> d(n);
    res.status = OptimizerStatus::MaxIters;

    for (int iter = 1;; ++iter) {
        if (inf_norm(cur.g) <= cfg.grad_tol) {
            res.status = OptimizerStatus::ConvergedGrad;
            res.message = "gradient below tolerance";
            break;
        }
        if (iter > cfg.max_iters) {
            res.status = OptimizerStatus::MaxIters;
            res.message = "iteration limit reached";
            break;
        }

        // Two-loop recursion: d = -H g.
        std::vector<double> q = cur.g;
        std::vector<double> a(s_hist.size());
        for (std::size_t k = s_hist.size(); k-- > 0;) {
            a[k] = rho_hist[k] * dot(s_hist[k], q);
            for (std::size_t i = 0; i < n; ++i) q[i] -= a[k] * y_hist[k][i];
        }
        double alpha0 = 1.0;
        if (!s_hist.empty()) {
            const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
            for (double &v : q) v *= gamma;
        } else {
            alpha0 = std::min(1.0, cfg.initial_step / inf_norm(cur.g));
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double b = rho_hist[k] * dot(y_hist[k], q);
            for (std::size_t i = 0; i < n; ++i) q[i] += (a[k] - b) * s_hist[k][i];
        }
        for (std::size_t i = 0; i < n; ++i) d[i] = -q[i];

        cur.alpha = 0.0;
        cur.slope = dot(cur.g, d);
        if (!(cur.slope < 0.0)) {
            // Not a descent direction: restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = -cur.g[i];
            cur.slope = dot(cur.g, d);
            alpha0 = std::min(1.0, cfg.initial_step / inf_norm(cur.g));
        }

        LinePoint next = LineSearch(objective, cfg, cur.x, d, cur, res.evaluations).run(alpha0);
        if (next.alpha == 0.0 && !s_hist.empty()) {
            // Retry once along steepest descent with fresh curvature.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = -cur.g[i];
            cur.slope = dot(cur.g, d);
            next = LineSearch(objective, cfg, cur.x, d, cur, res.evaluations)
                       .run(std::min(1.0, cfg.initial_step / inf_norm(cur.g)));
        }
        if (next.alpha == 0.0) {
            res.status = OptimizerStatus::ConvergedStep;
            res.message = "line search could not decrease the objective";
            break;
        }

        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = next.x[i] - cur.x[i];
            y[i] = next.g[i] - cur.g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > cfg.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        const double step_inf = inf_norm(s);
        cur = std::move(next);
        res.trace.push_back({iter, cur.eval.value, cur.eval.data, cur.eval.elastic, inf_norm(cur.g), cur.alpha,
                             res.evaluations, elapsed()});
        if (step_inf <= cfg.step_tol) {
            res.status = OptimizerStatus::ConvergedStep;
            res.message = "step below tolerance";
            break;
        }
        if (cfg.value_tol > 0.0 && iter >= cfg.value_window) {
            const double before = iter == cfg.value_window ? res.initial.value : res.trace[iter - cfg.value_window - 1].value;
            if (before - cur.eval.value <= cfg.value_tol * std::abs(cur.eval.value)) {
                res.status = OptimizerStatus::ConvergedValue;
                res.message = "relative decrease over the window below tolerance";
                break;
            }
        }
    }

    res.x = std::move(cur.x);
    res.final = cur.eval;
    return res;
}

OptimizerConfig registration_optimizer_defaults() {
    OptimizerConfig cfg;
    cfg.value_tol = 0.01;
    cfg.value_window = 5;
    return cfg;
}

RegistrationRun register_images(const Image &reference, const Image &tpl, std::shared_ptr<const TriMesh> mesh,
                                const RegistrationConfig &cfg) {
    if (!reference.same_shape(tpl)) throw std::invalid_argument("register_images: image sizes differ");
    if (!(cfg.alpha > 0.0)) throw std::invalid_argument("register_images: alpha must be positive");
    cfg.optimizer.validate();
    const auto start = std::chrono::steady_clock::now();

    const ProjectorGeometry geom = ProjectorGeometry::standard(reference.size(), reference.extent(), cfg.n_omega);
    const SimilarityContext ctx(reference, tpl, geom, mesh);
    const StiffnessMatrix k = assemble_stiffness(*mesh, cfg.elastic);
    const double scale = normalization_scale(cfg.kind, ctx);

    const ObjectiveFn fn = [&](std::span<const double> u, std::span<double> g) {
        ObjectiveValue v = eval_objective(cfg.kind, ctx, k, u, cfg.alpha, scale);
        std::copy(v.gradient.begin(), v.gradient.end(), g.begin());
        return Evaluation{v.value, v.data, v.elastic};
    };
    MinimizeResult result = minimize(fn, std::vector<double>(static_cast<std::size_t>(mesh->dof_count()), 0.0),
                                     cfg.optimizer);

    DisplacementField field = DisplacementField::from_dofs(mesh, result.x);
    Image warped = ctx.warped_template(result.x);
    const double seconds =
        cfg.optimizer.timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() : 0.0;
    return RegistrationRun{cfg.kind,         cfg.alpha,         scale, result.initial.data / scale,
                           std::move(field), std::move(warped), std::move(result), seconds};
}

} // namespace radreg
