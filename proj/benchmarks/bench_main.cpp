// Throughput of the projector pair, the warp and one objective evaluation.
#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "radreg/optimize.hpp"
#include "radreg/radon.hpp"
#include "radreg/similarity.hpp"

using namespace radreg;

namespace {

void BM_Forward(benchmark::State &state) {
    const int n = static_cast<int>(state.range(0));
    const RadonProjector proj(ProjectorGeometry::standard(n));
    const Image img = shepp_logan(n);
    for (auto _ : state) benchmark::DoNotOptimize(proj.forward(img));
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Adjoint(benchmark::State &state) {
    const int n = static_cast<int>(state.range(0));
    const RadonProjector proj(ProjectorGeometry::standard(n));
    const Sinogram s = proj.forward(shepp_logan(n));
    for (auto _ : state) benchmark::DoNotOptimize(proj.adjoint(s));
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Adjoint)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Warp(benchmark::State &state) {
    const int n = static_cast<int>(state.range(0));
    const auto mesh = std::make_shared<const TriMesh>(coarse_mesh());
    const Image img = shepp_logan(n);
    std::vector<double> u(mesh->dof_count(), 0.01);
    const PixelShapeTable table(*mesh, n);
    for (auto _ : state) benchmark::DoNotOptimize(warp(img, table.rasterize(u)));
}
BENCHMARK(BM_Warp)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_Objective(benchmark::State &state) {
    const auto kind = static_cast<MeasureKind>(state.range(0));
    const int n = static_cast<int>(state.range(1));
    const auto mesh = std::make_shared<const TriMesh>(coarse_mesh());
    const Image ref = shepp_logan(n);
    const SimilarityContext ctx(ref, disk(n, 0.6), ProjectorGeometry::standard(n), mesh);
    const StiffnessMatrix k = assemble_stiffness(*mesh, {});
    const std::vector<double> u(mesh->dof_count(), 0.01);
    state.SetLabel(std::string(to_string(kind)));
    for (auto _ : state) benchmark::DoNotOptimize(eval_objective(kind, ctx, k, u, 0.01));
}
BENCHMARK(BM_Objective)
    ->ArgsProduct({{static_cast<int>(MeasureKind::SSD), static_cast<int>(MeasureKind::RSSD),
                    static_cast<int>(MeasureKind::RSharpRSSD)},
                   {64, 128}})
    ->Unit(benchmark::kMillisecond);

void BM_Assemble(benchmark::State &state) {
    const TriMesh mesh = state.range(0) ? fine_mesh() : coarse_mesh();
    for (auto _ : state) benchmark::DoNotOptimize(assemble_stiffness(mesh, {}));
}
BENCHMARK(BM_Assemble)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
