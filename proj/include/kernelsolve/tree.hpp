#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "kernelsolve/dense.hpp"
#include "kernelsolve/kernels.hpp"

namespace kernelsolve {

struct SplitPlane {
  /// Unit direction; coordinate-aligned for the max-spread rule.
  std::vector<double> direction;
  /// Index of the coordinate axis the direction points along.
  std::size_t axis = 0;
  double threshold = 0.0;
};

struct TreeNode {
  std::size_t id = 0;
  std::size_t level = 0;
  /// Range [begin, end) into PartitionTree::perm().
  std::size_t begin = 0;
  std::size_t end = 0;
  std::optional<std::pair<std::size_t, std::size_t>> children;
  std::optional<std::size_t> parent;
  std::optional<SplitPlane> split;

  std::size_t size() const noexcept { return end - begin; }
  bool is_leaf() const noexcept { return !children.has_value(); }
  std::size_t left() const { return children->first; }
  std::size_t right() const { return children->second; }
};

/**
 *  Balanced binary partition of a point set. Each node splits at the exact
 *  median along its axis of largest coordinate spread, the left child taking
 *  the extra point when the size is odd. Splitting stops once a node holds at
 *  most `leaf_size` points. Node ids are breadth-first; node 0 is the root.
 */
class PartitionTree {
 public:
  PartitionTree() = default;

  /// Throws InvalidArgument when leaf_size < 2 or the point set is empty.
  static PartitionTree build(const PointSet& points, std::size_t leaf_size);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& node(std::size_t id) const { return nodes_.at(id); }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  /// perm()[k] = global id of the point at tree position k.
  const std::vector<std::size_t>& perm() const noexcept { return perm_; }
  /// position()[id] = tree position of global id.
  const std::vector<std::size_t>& position() const noexcept { return position_; }

  std::size_t leaf_size() const noexcept { return leaf_size_; }
  std::size_t point_count() const noexcept { return perm_.size(); }
  /// Number of levels (a single-leaf tree has depth 1).
  std::size_t depth() const noexcept { return levels_.size(); }
  /// Node ids per level, root level first.
  const std::vector<std::vector<std::size_t>>& levels() const noexcept { return levels_; }
  std::vector<std::size_t> leaves() const;

  bool owns(std::size_t node, std::size_t global_id) const {
    const auto& nd = nodes_[node];
    const std::size_t pos = position_[global_id];
    return pos >= nd.begin && pos < nd.end;
  }

  /// Global ids owned by a node, in perm order.
  std::span<const std::size_t> node_ids(std::size_t node) const {
    const auto& nd = nodes_.at(node);
    return {perm_.data() + nd.begin, nd.size()};
  }

  /// Values in original id order, reordered to tree order.
  std::vector<double> to_tree_order(std::span<const double> original) const;
  std::vector<double> to_original_order(std::span<const double> tree_order) const;
  DenseMatrix to_tree_order(const DenseMatrix& original) const;
  DenseMatrix to_original_order(const DenseMatrix& tree_order) const;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> position_;
  std::vector<std::vector<std::size_t>> levels_;
  std::size_t leaf_size_ = 0;
};

/// All global ids not owned by `node`, in perm order.
std::vector<std::size_t> node_exterior(const PartitionTree& tree, std::size_t node);

/// Exact k nearest neighbours of every point (self excluded).
struct NeighborLists {
  std::size_t k = 0;
  /// n x k, row-major; ids[i*k + j] is the j-th neighbour of point i.
  std::vector<std::size_t> ids;
  std::vector<double> dist;

  std::span<const std::size_t> neighbors(std::size_t i) const { return {ids.data() + i * k, k}; }
  std::span<const double> distances(std::size_t i) const { return {dist.data() + i * k, k}; }
};

/// Brute-force O(n^2 d); ties broken by the smaller id. Throws InvalidArgument when k >= n.
NeighborLists knn(const PointSet& points, std::size_t k, int threads = 1);

}  // namespace kernelsolve
