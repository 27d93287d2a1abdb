#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "radreg/elastic.hpp"
#include "radreg/image.hpp"
#include "radreg/mesh.hpp"
#include "radreg/similarity.hpp"

namespace radreg {

struct OptimizerConfig {
    int max_iters = 200;
    double grad_tol = 1e-6;  ///< stop when ||g||_inf <= grad_tol
    double step_tol = 1e-10; ///< stop when ||x_{k+1} - x_k||_inf <= step_tol
    double c1 = 1e-4;        ///< sufficient decrease
    double c2 = 0.9;         ///< curvature
    int memory = 10;         ///< L-BFGS history length
    int max_line_evals = 30;
    /// Length (inf-norm) of the first trial step, before any curvature
    /// information exists.
    double initial_step = 0.05;
    /// Stop once the last value_window iterations together lowered the
    /// objective by at most value_tol |J| (0 disables the test).
    double value_tol = 0.0;
    int value_window = 10;
    bool timing = true; ///< record wall-clock seconds in the trace

    void validate() const;

    friend bool operator==(const OptimizerConfig &, const OptimizerConfig &) = default;
};

enum class OptimizerStatus { ConvergedGrad, ConvergedStep, ConvergedValue, MaxIters, NonFinite };

std::string_view to_string(OptimizerStatus status);
OptimizerStatus parse_status(std::string_view name);

/// What the objective reports besides its value. For registration, data is the
/// normalised similarity and elastic the regulariser; plain functions leave
/// data equal to the value.
struct Evaluation {
    double value = 0.0;
    double data = 0.0;
    double elastic = 0.0;
};

/// Computes the objective at x and writes its gradient into grad.
using ObjectiveFn = std::function<Evaluation(std::span<const double> x, std::span<double> grad)>;

struct IterationRecord {
    int iter = 0;
    double value = 0.0;
    double data = 0.0;
    double elastic = 0.0;
    double grad_inf = 0.0;
    double step = 0.0; ///< accepted line-search step length
    int evaluations = 0; ///< cumulative
    double seconds = 0.0; ///< cumulative wall time (0 when timing is off)

    friend bool operator==(const IterationRecord &, const IterationRecord &) = default;
};

struct MinimizeResult {
    std::vector<double> x;
    Evaluation final;
    Evaluation initial;
    std::vector<IterationRecord> trace;
    OptimizerStatus status = OptimizerStatus::MaxIters;
    int evaluations = 0;
    std::string message;

    int iterations() const { return static_cast<int>(trace.size()); }
};

/// L-BFGS with a strong-Wolfe line search (bracketing + cubic zoom). Returns
/// the best iterate seen.
MinimizeResult minimize(const ObjectiveFn &objective, std::vector<double> x0, const OptimizerConfig &cfg);

/// Optimiser settings for registration: as OptimizerConfig, plus a stop once
/// five iterations have lowered J by less than 1% (the bilinear interpolant
/// leaves kinks that keep ||g|| from ever reaching grad_tol).
OptimizerConfig registration_optimizer_defaults();

struct RegistrationConfig {
    MeasureKind kind = MeasureKind::RSSD;
    double alpha = 0.02;
    ElasticParams elastic;
    OptimizerConfig optimizer = registration_optimizer_defaults();
    int n_omega = 180;
};

/// One registration: configuration, final field and the optimiser trace.
struct RegistrationRun {
    MeasureKind kind = MeasureKind::RSSD;
    double alpha = 0.0;
    double scale = 1.0;          ///< 1 / D(R, T; 0)
    double data_raw_initial = 0.0;
    DisplacementField field;
    Image warped;
    MinimizeResult result;
    double seconds = 0.0;
};

/// Minimises D/D(0) + alpha S over the nodal displacements of mesh, from u = 0.
RegistrationRun register_images(const Image &reference, const Image &tpl, std::shared_ptr<const TriMesh> mesh,
                                const RegistrationConfig &cfg);

} // namespace radreg
