#include "kernelsolve/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "kernelsolve/error.hpp"
#include "kernelsolve/parallel.hpp"

namespace kernelsolve {

namespace {

std::size_t widest_axis(const PointSet& points, std::span<const std::size_t> ids) {
  const std::size_t d = points.dim();
  std::size_t best = 0;
  double best_spread = -1.0;
  for (std::size_t k = 0; k < d; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t id : ids) {
      const double v = points.point(id)[k];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best = k;
    }
  }
  return best;
}

}  // namespace

PartitionTree PartitionTree::build(const PointSet& points, std::size_t leaf_size) {
  if (leaf_size < 2) throw InvalidArgument("build_tree: leaf capacity must be >= 2");
  const std::size_t n = points.size();
  if (n == 0) throw InvalidArgument("build_tree: empty point set");

  PartitionTree tree;
  tree.leaf_size_ = leaf_size;
  tree.perm_.resize(n);
  std::iota(tree.perm_.begin(), tree.perm_.end(), 0);

  TreeNode root;
  root.begin = 0;
  root.end = n;
  tree.nodes_.push_back(root);

  // Nodes are appended in the order they are split, which is breadth-first.
  for (std::size_t cur = 0; cur < tree.nodes_.size(); ++cur) {
    const TreeNode nd = tree.nodes_[cur];
    if (nd.size() <= leaf_size) continue;

    auto first = tree.perm_.begin() + static_cast<std::ptrdiff_t>(nd.begin);
    auto last = tree.perm_.begin() + static_cast<std::ptrdiff_t>(nd.end);
    const std::size_t axis = widest_axis(points, {&*first, nd.size()});
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return points.point(a)[axis] < points.point(b)[axis];
    });
    const std::size_t mid = nd.begin + (nd.size() + 1) / 2;

    SplitPlane split;
    split.axis = axis;
    split.direction.assign(points.dim(), 0.0);
    split.direction[axis] = 1.0;
    split.threshold = 0.5 * (points.point(tree.perm_[mid - 1])[axis] + points.point(tree.perm_[mid])[axis]);

    TreeNode left, right;
    left.level = right.level = nd.level + 1;
    left.begin = nd.begin;
    left.end = right.begin = mid;
    right.end = nd.end;
    left.parent = right.parent = cur;
    left.id = tree.nodes_.size();
    right.id = left.id + 1;

    tree.nodes_[cur].split = std::move(split);
    tree.nodes_[cur].children = std::make_pair(left.id, right.id);
    tree.nodes_.push_back(left);
    tree.nodes_.push_back(right);
  }

  tree.position_.resize(n);
  for (std::size_t k = 0; k < n; ++k) tree.position_[tree.perm_[k]] = k;

  for (const TreeNode& nd : tree.nodes_) {
    if (nd.level >= tree.levels_.size()) tree.levels_.resize(nd.level + 1);
    tree.levels_[nd.level].push_back(nd.id);
  }
  return tree;
}

std::vector<std::size_t> PartitionTree::leaves() const {
  std::vector<std::size_t> out;
  for (const auto& nd : nodes_)
    if (nd.is_leaf()) out.push_back(nd.id);
  return out;
}

std::vector<double> PartitionTree::to_tree_order(std::span<const double> original) const {
  if (original.size() != perm_.size()) throw InvalidArgument("to_tree_order: length mismatch");
  std::vector<double> out(perm_.size());
  for (std::size_t k = 0; k < perm_.size(); ++k) out[k] = original[perm_[k]];
  return out;
}

std::vector<double> PartitionTree::to_original_order(std::span<const double> tree_order) const {
  if (tree_order.size() != perm_.size()) throw InvalidArgument("to_original_order: length mismatch");
  std::vector<double> out(perm_.size());
  for (std::size_t k = 0; k < perm_.size(); ++k) out[perm_[k]] = tree_order[k];
  return out;
}

DenseMatrix PartitionTree::to_tree_order(const DenseMatrix& original) const {
  if (original.rows() != perm_.size()) throw InvalidArgument("to_tree_order: row count mismatch");
  DenseMatrix out(original.rows(), original.cols());
  for (std::size_t k = 0; k < perm_.size(); ++k) std::ranges::copy(original.row(perm_[k]), out.row(k).begin());
  return out;
}

DenseMatrix PartitionTree::to_original_order(const DenseMatrix& tree_order) const {
  if (tree_order.rows() != perm_.size()) throw InvalidArgument("to_original_order: row count mismatch");
  DenseMatrix out(tree_order.rows(), tree_order.cols());
  for (std::size_t k = 0; k < perm_.size(); ++k) std::ranges::copy(tree_order.row(k), out.row(perm_[k]).begin());
  return out;
}

std::vector<std::size_t> node_exterior(const PartitionTree& tree, std::size_t node) {
  const TreeNode& nd = tree.node(node);
  const auto& perm = tree.perm();
  std::vector<std::size_t> out;
  out.reserve(perm.size() - nd.size());
  out.insert(out.end(), perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(nd.begin));
  out.insert(out.end(), perm.begin() + static_cast<std::ptrdiff_t>(nd.end), perm.end());
  return out;
}

NeighborLists knn(const PointSet& points, std::size_t k, int threads) {
  const std::size_t n = points.size();
  if (k >= n) throw InvalidArgument("knn: k must be smaller than the number of points");
  NeighborLists nl;
  nl.k = k;
  nl.ids.resize(n * k);
  nl.dist.resize(n * k);
  if (k == 0) return nl;

  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    std::vector<std::pair<double, std::size_t>> cand(n - 1);
    for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
      const auto xi = points.point(i);
      std::size_t m = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) cand[m++] = {squared_distance(xi, points.point(j)), j};
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
      for (std::size_t r = 0; r < k; ++r) {
        nl.ids[i * k + r] = cand[r].second;
        nl.dist[i * k + r] = std::sqrt(cand[r].first);
      }
    }
  });
  return nl;
}

}  // namespace kernelsolve
