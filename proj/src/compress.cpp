#include "kernelsolve/compress.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "kernelsolve/error.hpp"
#include "kernelsolve/linalg.hpp"
#include "kernelsolve/parallel.hpp"
#include "kernelsolve/random.hpp"

namespace kernelsolve {

std::size_t default_sample_count(std::size_t max_rank, std::size_t neighbors) {
  return std::max(2 * max_rank, 4 * neighbors);
}

std::size_t CompressionParams::sample_count() const {
  return samples > 0 ? samples : default_sample_count(max_rank, neighbors);
}

void CompressionParams::validate() const {
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("compression tol must lie in (0, 1)");
  if (max_rank < 1) throw InvalidArgument("compression max_rank must be >= 1");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

CompressedKernel::CompressedKernel(const PointSet& points, const PartitionTree& tree, KernelSpec spec,
                                   CompressionParams params)
    : points_(&points), tree_(&tree), spec_(spec), params_(params) {
  spec_.validate();
  params_.validate();
  if (tree.point_count() != points.size()) throw InvalidArgument("compress: tree was built over a different point set");
  skeletons_.resize(tree.node_count());
  leaf_blocks_.resize(tree.node_count());
  couplings_.resize(tree.node_count());
}

const Skeleton& CompressedKernel::skeleton(std::size_t node) const {
  const auto& s = skeletons_.at(node);
  if (!s) throw InvalidArgument("node " + std::to_string(node) + " has no skeleton");
  return *s;
}

const DenseMatrix& CompressedKernel::leaf_block(std::size_t leaf) const {
  if (!tree_->node(leaf).is_leaf()) throw InvalidArgument("leaf_block: node is not a leaf");
  return leaf_blocks_[leaf];
}

const DenseMatrix& CompressedKernel::coupling(std::size_t node) const {
  if (tree_->node(node).is_leaf()) throw InvalidArgument("coupling: node is a leaf");
  return couplings_[node];
}

CompressionStats CompressedKernel::stats() const {
  CompressionStats st;
  std::size_t bytes = 0;
  for (std::size_t level = 1; level < tree_->depth(); ++level) {
    LevelRankStats ls;
    ls.level = level;
    ls.min_rank = static_cast<std::size_t>(-1);
    double sum = 0.0;
    for (std::size_t id : tree_->levels()[level]) {
      const Skeleton& s = skeleton(id);
      ++ls.nodes;
      ls.min_rank = std::min(ls.min_rank, s.rank());
      ls.max_rank = std::max(ls.max_rank, s.rank());
      sum += static_cast<double>(s.rank());
      st.max_rank = std::max(st.max_rank, s.rank());
      st.max_abs_coeff = std::max(st.max_abs_coeff, s.max_abs_coeff);
      if (s.degenerate) ++st.degenerate_nodes;
      if (s.max_abs_coeff > kCoeffGrowthLimit) ++st.coeff_growth_nodes;
      bytes += s.coeff.size() * sizeof(double) + (s.cand.size() + 2 * s.skel.size()) * sizeof(std::size_t);
    }
    ls.mean_rank = ls.nodes ? sum / static_cast<double>(ls.nodes) : 0.0;
    st.ranks_per_level.push_back(ls);
  }
  for (const auto& m : leaf_blocks_) bytes += m.size() * sizeof(double);
  for (const auto& m : couplings_) bytes += m.size() * sizeof(double);
  st.memory_bytes = bytes;
  return st;
}

bool CompressedKernel::operator==(const CompressedKernel& other) const {
  return skeletons_ == other.skeletons_ && leaf_blocks_ == other.leaf_blocks_ && couplings_ == other.couplings_;
}

std::vector<std::size_t> sample_rows(const PartitionTree& tree, std::size_t node, const NeighborLists& neighbors,
                                     std::size_t count, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("sample_rows: sample count must be >= 1");
  const TreeNode& nd = tree.node(node);
  const std::size_t n = tree.point_count();
  if (nd.size() == n) return {};
  const std::size_t exterior = n - nd.size();
  const std::size_t target = std::min(count, exterior);
  const auto& perm = tree.perm();

  std::vector<std::size_t> rows;
  rows.reserve(target);
  std::unordered_set<std::size_t> chosen;

  if (neighbors.k > 0) {
    std::vector<std::pair<double, std::size_t>> near;
    for (std::size_t pos = nd.begin; pos < nd.end; ++pos) {
      const std::size_t id = perm[pos];
      const auto ids = neighbors.neighbors(id);
      const auto dist = neighbors.distances(id);
      for (std::size_t r = 0; r < neighbors.k; ++r)
        if (!tree.owns(node, ids[r])) near.emplace_back(dist[r], ids[r]);
    }
    std::sort(near.begin(), near.end());
    for (const auto& [dist, id] : near) {
      if (rows.size() == target) break;
      if (chosen.insert(id).second) rows.push_back(id);
    }
  }

  std::size_t remaining = target - rows.size();
  if (remaining == 0) return rows;

  SplitMix64 rng = SplitMix64(seed).split(node);
  auto exterior_at = [&](std::size_t r) { return perm[r < nd.begin ? r : r + nd.size()]; };

  if (exterior <= 4 * target) {
    std::vector<std::size_t> pool;
    pool.reserve(exterior - rows.size());
    for (std::size_t r = 0; r < exterior; ++r) {
      const std::size_t id = exterior_at(r);
      if (!chosen.contains(id)) pool.push_back(id);
    }
    for (std::size_t i = 0; i < remaining; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
      std::swap(pool[i], pool[j]);
      rows.push_back(pool[i]);
    }
  } else {
    while (remaining > 0) {
      const std::size_t id = exterior_at(static_cast<std::size_t>(rng() % exterior));
      if (chosen.insert(id).second) {
        rows.push_back(id);
        --remaining;
      }
    }
  }
  return rows;
}

Skeleton skeletonize_node(const CompressedKernel& partial, const NeighborLists& neighbors, std::size_t node) {
  const PartitionTree& tree = partial.tree();
  const TreeNode& nd = tree.node(node);
  if (!nd.parent) throw InternalError("skeletonize_node: the root has no exterior to skeletonize against");
  const CompressionParams& params = partial.params();

  Skeleton sk;
  sk.node = node;
  if (nd.is_leaf()) {
    const auto ids = tree.node_ids(node);
    sk.cand.assign(ids.begin(), ids.end());
  } else {
    const Skeleton& l = partial.skeleton(nd.left());
    const Skeleton& r = partial.skeleton(nd.right());
    sk.cand = l.skel;
    sk.cand.insert(sk.cand.end(), r.skel.begin(), r.skel.end());
  }

  const auto rows = sample_rows(tree, node, neighbors, params.sample_count(), params.seed);
  if (rows.empty()) throw InternalError("skeletonize_node: empty sample on a non-root node");

  const DenseMatrix a = kernel_block(partial.spec(), partial.points(), rows, sk.cand);
  IdResult id = pivoted_qr_id(a, params.tol, params.max_rank);
  sk.skel_pos = std::move(id.skel);
  sk.skel.reserve(sk.skel_pos.size());
  for (std::size_t p : sk.skel_pos) sk.skel.push_back(sk.cand[p]);
  sk.coeff = std::move(id.coeff);
  sk.degenerate = id.degenerate;
  sk.max_abs_coeff = id.max_abs_coeff;
  return sk;
}

void set_skeleton(CompressedKernel& ck, Skeleton skeleton) {
  const std::size_t node = skeleton.node;
  ck.skeletons_.at(node) = std::move(skeleton);
}

CompressedKernel compress(const PointSet& points, const PartitionTree& tree, const KernelSpec& spec,
                          const NeighborLists& neighbors, const CompressionParams& params) {
  CompressedKernel ck(points, tree, spec, params);
  if (neighbors.k > 0 && neighbors.ids.size() != neighbors.k * points.size())
    throw InvalidArgument("compress: neighbour lists do not match the point set");

  // children before parents; nodes within a level touch disjoint slots
  for (std::size_t level = tree.depth(); level-- > 0;) {
    const auto& ids = tree.levels()[level];
    parallel_for(ids.size(), params.threads, [&](std::size_t i) {
      const std::size_t node = ids[i];
      const TreeNode& nd = tree.node(node);
      if (nd.is_leaf()) {
        const auto pts = tree.node_ids(node);
        ck.leaf_blocks_[node] = kernel_block(spec, points, pts, pts);
      } else {
        ck.couplings_[node] =
            kernel_block(spec, points, ck.skeleton(nd.left()).skel, ck.skeleton(nd.right()).skel);
      }
      if (nd.parent) ck.skeletons_[node] = skeletonize_node(ck, neighbors, node);
    });
  }
  return ck;
}

DenseMatrix apply_prolongation(const CompressedKernel& ck, std::size_t node, const DenseMatrix& c) {
  const Skeleton& sk = ck.skeleton(node);
  if (c.rows() != sk.rank()) throw InvalidArgument("apply_prolongation: coefficient length must equal the rank");
  DenseMatrix v = matmul_tn(sk.coeff, c);
  const TreeNode& nd = ck.tree().node(node);
  if (nd.is_leaf()) return v;
  const std::size_t sl = ck.rank(nd.left());
  DenseMatrix left = apply_prolongation(ck, nd.left(), v.row_block(0, sl));
  DenseMatrix right = apply_prolongation(ck, nd.right(), v.row_block(sl, v.rows()));
  return vstack(left, right);
}

std::vector<double> apply_prolongation(const CompressedKernel& ck, std::size_t node, std::span<const double> c) {
  const DenseMatrix out = apply_prolongation(ck, node, DenseMatrix::column(c));
  return {out.values().begin(), out.values().end()};
}

DenseMatrix skel_project(const CompressedKernel& ck, std::size_t node, const DenseMatrix& y) {
  const Skeleton& sk = ck.skeleton(node);
  const TreeNode& nd = ck.tree().node(node);
  if (y.rows() != nd.size()) throw InvalidArgument("skel_project: vector length must equal the node size");
  if (nd.is_leaf()) return matmul(sk.coeff, y);
  const std::size_t split = ck.tree().node(nd.left()).size();
  DenseMatrix stacked = vstack(skel_project(ck, nd.left(), y.row_block(0, split)),
                               skel_project(ck, nd.right(), y.row_block(split, y.rows())));
  return matmul(sk.coeff, stacked);
}

std::vector<double> skel_project(const CompressedKernel& ck, std::size_t node, std::span<const double> y) {
  const DenseMatrix out = skel_project(ck, node, DenseMatrix::column(y));
  return {out.values().begin(), out.values().end()};
}

DenseMatrix hss_matvec(const CompressedKernel& ck, const DenseMatrix& w) {
  const PartitionTree& tree = ck.tree();
  if (w.rows() != ck.size()) throw InvalidArgument("hss_matvec: vector length must equal n");
  const int threads = ck.params().threads;
  const std::size_t q = w.cols();

  // upward: skeleton weights t_a = U_a^T w_a
  std::vector<DenseMatrix> up(tree.node_count());
  for (std::size_t level = tree.depth(); level-- > 1;) {
    const auto& ids = tree.levels()[level];
    parallel_for(ids.size(), threads, [&](std::size_t i) {
      const std::size_t node = ids[i];
      const TreeNode& nd = tree.node(node);
      const DenseMatrix local = nd.is_leaf() ? w.row_block(nd.begin, nd.end) : vstack(up[nd.left()], up[nd.right()]);
      up[node] = matmul(ck.skeleton(node).coeff, local);
    });
  }

  // downward: sibling couplings plus inherited skeleton potentials
  std::vector<DenseMatrix> down(tree.node_count());
  DenseMatrix out(ck.size(), q);
  for (std::size_t level = 0; level < tree.depth(); ++level) {
    const auto& ids = tree.levels()[level];
    parallel_for(ids.size(), threads, [&](std::size_t i) {
      const std::size_t node = ids[i];
      const TreeNode& nd = tree.node(node);
      if (nd.is_leaf()) {
        DenseMatrix y = matmul(ck.leaf_block(node), w.row_block(nd.begin, nd.end));
        if (nd.parent) y += matmul_tn(ck.skeleton(node).coeff, down[node]);
        out.set_row_block(nd.begin, y);
        return;
      }
      const DenseMatrix& b = ck.coupling(node);
      DenseMatrix dl = matmul(b, up[nd.right()]);
      DenseMatrix dr = matmul_tn(b, up[nd.left()]);
      if (nd.parent) {
        const DenseMatrix v = matmul_tn(ck.skeleton(node).coeff, down[node]);
        dl += v.row_block(0, dl.rows());
        dr += v.row_block(dl.rows(), v.rows());
      }
      down[nd.left()] = std::move(dl);
      down[nd.right()] = std::move(dr);
    });
  }
  return out;
}

std::vector<double> hss_matvec(const CompressedKernel& ck, std::span<const double> w) {
  const DenseMatrix out = hss_matvec(ck, DenseMatrix::column(w));
  return {out.values().begin(), out.values().end()};
}

}  // namespace kernelsolve
