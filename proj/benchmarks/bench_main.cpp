#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "gcfest/dgp.hpp"
#include "gcfest/features.hpp"
#include "gcfest/frame.hpp"
#include "gcfest/gcf.hpp"

namespace {

gcfest::DGPConfig bench_config(int n_firms) {
  gcfest::DGPConfig config;
  config.n_firms = n_firms;
  config.n_periods = 20;
  config.seed = 7;
  return config;
}

void BM_SimulatePanel(benchmark::State& state) {
  const auto config = bench_config(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto panel = gcfest::simulate_panel(config);
    benchmark::DoNotOptimize(panel.q.data());
  }
}
BENCHMARK(BM_SimulatePanel)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_HermiteBasis(benchmark::State& state) {
  const auto config = bench_config(1000);
  const auto panel = gcfest::simulate_panel(config);
  const auto frame = gcfest::build_lagged_frame(panel);
  const gcfest::InstrumentPlan plan;
  const auto data = gcfest::frame_columns(frame, plan.z_vars);
  const auto spec = gcfest::make_feature_spec(plan.z_vars, plan.phi_degree, data);
  for (auto _ : state) {
    auto basis = gcfest::hermite_basis(spec, data);
    benchmark::DoNotOptimize(basis.values.data());
  }
}
BENCHMARK(BM_HermiteBasis)->Unit(benchmark::kMillisecond);

void BM_GcfObjective(benchmark::State& state) {
  const auto config = bench_config(1000);
  const auto panel = gcfest::simulate_panel(config);
  const auto frame = gcfest::build_lagged_frame(panel);
  gcfest::InstrumentPlan plan;
  plan.control_degree = static_cast<int>(state.range(0));
  gcfest::GcfProblem problem(frame, plan);
  const Eigen::MatrixXd W = Eigen::MatrixXd::Identity(problem.selected().size(), problem.selected().size());
  const gcfest::StructuralParams theta{0.3, -1.0, 0.95};
  for (auto _ : state) {
    benchmark::DoNotOptimize(problem.objective(theta, W));
  }
}
BENCHMARK(BM_GcfObjective)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Projection(benchmark::State& state) {
  const auto config = bench_config(1000);
  const auto panel = gcfest::simulate_panel(config);
  const auto frame = gcfest::build_lagged_frame(panel);
  const gcfest::InstrumentPlan plan;
  const auto data = gcfest::frame_columns(frame, plan.control_vars());
  const auto spec = gcfest::make_feature_spec(plan.control_vars(), plan.control_degree, data);
  const auto basis = gcfest::hermite_basis(spec, data);
  Eigen::VectorXd target = frame.q;
  for (auto _ : state) {
    auto fitted = gcfest::project(basis, target);
    benchmark::DoNotOptimize(fitted.data());
  }
}
BENCHMARK(BM_Projection)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
