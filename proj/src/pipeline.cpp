#include "kernelsolve/pipeline.hpp"

#include <chrono>
#include <cmath>

#include "kernelsolve/error.hpp"
#include "kernelsolve/parallel.hpp"

namespace kernelsolve {

namespace {

template <typename F>
double timed(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::size_t effective_neighbors(std::size_t requested, std::size_t n) {
  return std::min(requested, n > 0 ? n - 1 : 0);
}

KernelSystem::KernelSystem(PointSet points, const KernelSpec& spec, const SolverSettings& settings)
    : points_(std::move(points)), spec_(spec), settings_(settings) {}

std::unique_ptr<KernelSystem> KernelSystem::build(PointSet points, const KernelSpec& spec,
                                                  const SolverSettings& settings, bool factor) {
  spec.validate();
  settings.compression.validate();
  if (settings.threads < 1) throw InvalidArgument("threads must be >= 1");
  std::unique_ptr<KernelSystem> sys(new KernelSystem(std::move(points), spec, settings));
  sys->settings_.compression.threads = settings.threads;

  sys->timings_.tree = timed([&] { sys->tree_ = PartitionTree::build(sys->points_, settings.leaf_size); });
  sys->timings_.knn = timed([&] {
    sys->neighbors_ =
        knn(sys->points_, effective_neighbors(settings.compression.neighbors, sys->points_.size()), settings.threads);
  });
  sys->timings_.compress = timed([&] {
    sys->kernel_.emplace(compress(sys->points_, sys->tree_, sys->spec_, sys->neighbors_, sys->settings_.compression));
  });
  if (factor) sys->factorize();
  return sys;
}

void KernelSystem::factorize() {
  timings_.factorize =
      timed([&] { factor_.emplace(HierFactor::factorize(*kernel_, settings_.lambda, settings_.threads)); });
}

const HierFactor& KernelSystem::factor() const {
  if (!factor_) throw InvalidArgument("KernelSystem: not factorized");
  return *factor_;
}

std::vector<double> KernelSystem::matvec_original(std::span<const double> w) const {
  return tree_.to_original_order(hss_matvec(*kernel_, tree_.to_tree_order(w)));
}

std::vector<double> KernelSystem::solve_original(std::span<const double> b) {
  std::vector<double> x;
  timings_.solve = timed([&] { x = tree_.to_original_order(factor().solve(tree_.to_tree_order(b), settings_.threads)); });
  return x;
}

DenseMatrix KernelSystem::solve_original(const DenseMatrix& b) {
  DenseMatrix x;
  timings_.solve =
      timed([&] { x = tree_.to_original_order(factor().solve_many(tree_.to_tree_order(b), settings_.threads)); });
  return x;
}

std::vector<double> krr_fit(const PointSet& points, const KernelSpec& spec, double lambda,
                            std::span<const double> labels, const SolverSettings& settings) {
  if (labels.size() != points.size()) throw InvalidArgument("krr_fit: one label per point required");
  for (double v : labels)
    if (!std::isfinite(v)) throw InvalidArgument("krr_fit: non-finite label");
  SolverSettings s = settings;
  s.lambda = lambda;
  auto sys = KernelSystem::build(points, spec, s);
  return sys->solve_original(labels);
}

std::vector<double> krr_predict(const PointSet& train, std::span<const double> weights, const KernelSpec& spec,
                                const PointSet& test) {
  if (weights.size() != train.size()) throw InvalidArgument("krr_predict: one weight per training point required");
  if (test.size() > 0 && test.dim() != train.dim()) throw InvalidArgument("krr_predict: dimension mismatch");
  spec.validate();
  std::vector<double> pred(test.size(), 0.0);
  for (std::size_t j = 0; j < test.size(); ++j) {
    const auto xt = test.point(j);
    double s = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) s += kernel_eval_unchecked(spec, xt, train.point(i)) * weights[i];
    pred[j] = s;
  }
  return pred;
}

}  // namespace kernelsolve
