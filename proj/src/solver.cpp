#include "kernelsolve/solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "kernelsolve/error.hpp"
#include "kernelsolve/parallel.hpp"

namespace kernelsolve {

namespace {

void symmetrize(DenseMatrix& h) {
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = i + 1; j < h.cols(); ++j) {
      const double v = 0.5 * (h(i, j) + h(j, i));
      h(i, j) = h(j, i) = v;
    }
}

std::string condition_message(std::size_t node, std::size_t level, double cond) {
  std::ostringstream ss;
  ss << "reduced system at node " << node << " (level " << level << ") has condition estimate " << cond;
  return ss.str();
}

}  // namespace

HierFactor HierFactor::factorize(const CompressedKernel& ck, double lambda, int threads) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("factorize: lambda must be finite and >= 0");
  const PartitionTree& tree = ck.tree();
  const std::size_t nodes = tree.node_count();

  HierFactor hf;
  hf.ck_ = &ck;
  hf.lambda_ = lambda;
  hf.leaf_factors_.resize(nodes);
  hf.node_factors_.resize(nodes);
  hf.reduced_.resize(nodes);

  for (std::size_t level = tree.depth(); level-- > 0;) {
    const auto& ids = tree.levels()[level];
    parallel_for(ids.size(), threads, [&](std::size_t i) {
      const std::size_t node = ids[i];
      const TreeNode& nd = tree.node(node);

      if (nd.is_leaf()) {
        DenseMatrix a = ck.leaf_block(node);
        for (std::size_t k = 0; k < a.rows(); ++k) a(k, k) += lambda;
        LeafFactor& lf = hf.leaf_factors_[node];
        lf.node = node;
        try {
          lf.factor = DenseFactor::factor_spd_or_lu(a, &lf.lu_fallback);
        } catch (const SingularMatrixError&) {
          throw IllConditionedError("leaf block at node " + std::to_string(node) +
                                        " is singular; increase lambda",
                                    node, std::numeric_limits<double>::infinity());
        }
        if (nd.parent) {
          const DenseMatrix& p = ck.skeleton(node).coeff;
          DenseMatrix h = matmul(p, lf.factor.solve(p.transposed()));
          symmetrize(h);
          hf.reduced_[node] = std::move(h);
        }
        return;
      }

      NodeFactor& nf = hf.node_factors_[node];
      nf.node = node;
      nf.s_left = ck.rank(nd.left());
      nf.s_right = ck.rank(nd.right());
      const std::size_t s = nf.s_left + nf.s_right;

      DenseMatrix g(s, s);
      const DenseMatrix& hl = hf.reduced_[nd.left()];
      const DenseMatrix& hr = hf.reduced_[nd.right()];
      for (std::size_t r = 0; r < nf.s_left; ++r)
        for (std::size_t c = 0; c < nf.s_left; ++c) g(r, c) = hl(r, c);
      for (std::size_t r = 0; r < nf.s_right; ++r)
        for (std::size_t c = 0; c < nf.s_right; ++c) g(nf.s_left + r, nf.s_left + c) = hr(r, c);

      const DenseMatrix wg = hf.apply_coupling(node, g);
      DenseMatrix z = wg;
      for (std::size_t k = 0; k < s; ++k) z(k, k) += 1.0;

      const std::string hint = "; increase lambda or decrease the compression tolerance";
      try {
        nf.z = DenseFactor::factor(std::move(z), FactorKind::lu);
      } catch (const SingularMatrixError&) {
        throw IllConditionedError(condition_message(node, nd.level, std::numeric_limits<double>::infinity()) + hint,
                                  node, std::numeric_limits<double>::infinity());
      }
      nf.z_condition = nf.z.condition_estimate();
      if (!(nf.z_condition <= kConditionLimit))
        throw IllConditionedError(condition_message(node, nd.level, nf.z_condition) + hint, node, nf.z_condition);

      if (nd.parent) {
        // G - G Z^-1 W G = G Z^-1 = (Z^-T G)^T; this form has no cancellation.
        const DenseMatrix m = nf.z.solve_transposed(g).transposed();
        const DenseMatrix& p = ck.skeleton(node).coeff;
        DenseMatrix h = matmul_nt(matmul(p, m), p);
        symmetrize(h);
        hf.reduced_[node] = std::move(h);
      }
    });
  }

  FactorDiagnostics& diag = hf.diagnostics_;
  diag.z_condition_max_per_level.assign(tree.depth(), 0.0);
  for (const TreeNode& nd : tree.nodes()) {
    if (nd.is_leaf()) {
      if (hf.leaf_factors_[nd.id].lu_fallback) {
        ++diag.cholesky_fallbacks;
        diag.warnings.push_back("leaf " + std::to_string(nd.id) + " is not numerically SPD; used LU");
      }
      continue;
    }
    const double cond = hf.node_factors_[nd.id].z_condition;
    diag.z_condition_max_per_level[nd.level] = std::max(diag.z_condition_max_per_level[nd.level], cond);
    if (cond > kConditionWarning) diag.warnings.push_back(condition_message(nd.id, nd.level, cond));
  }
  return hf;
}

const LeafFactor& HierFactor::leaf_factor(std::size_t node) const {
  if (!ck_->tree().node(node).is_leaf()) throw InvalidArgument("leaf_factor: node is not a leaf");
  return leaf_factors_[node];
}

const NodeFactor& HierFactor::node_factor(std::size_t node) const {
  if (ck_->tree().node(node).is_leaf()) throw InvalidArgument("node_factor: node is a leaf");
  return node_factors_[node];
}

const DenseMatrix& HierFactor::reduced(std::size_t node) const {
  if (!ck_->tree().node(node).parent) throw InvalidArgument("reduced: the root has no reduced matrix");
  return reduced_.at(node);
}

DenseMatrix HierFactor::apply_coupling(std::size_t node, const DenseMatrix& x) const {
  const TreeNode& nd = ck_->tree().node(node);
  const std::size_t sl = ck_->rank(nd.left());
  if (x.rows() != sl + ck_->rank(nd.right())) throw InvalidArgument("apply_coupling: row count mismatch");
  const DenseMatrix& b = ck_->coupling(node);
  return vstack(matmul(b, x.row_block(sl, x.rows())), matmul_tn(b, x.row_block(0, sl)));
}

DenseMatrix HierFactor::solve_many(const DenseMatrix& b, int threads) const {
  const PartitionTree& tree = ck_->tree();
  if (b.rows() != ck_->size()) throw InvalidArgument("solve: right-hand side length must equal n");
  const std::size_t nodes = tree.node_count();
  DenseMatrix x(b.rows(), b.cols());
  if (b.cols() == 0) return x;

  // Upward: leaf solves y, skeleton projections t = U^T x_a, and W c per node.
  // With Z^T = I + G W, c - G Z^-1 W c = Z^-T c.
  std::vector<DenseMatrix> y(nodes), t(nodes), wc(nodes);
  for (std::size_t level = tree.depth(); level-- > 0;) {
    const auto& ids = tree.levels()[level];
    parallel_for(ids.size(), threads, [&](std::size_t i) {
      const std::size_t node = ids[i];
      const TreeNode& nd = tree.node(node);
      if (nd.is_leaf()) {
        y[node] = leaf_factors_[node].factor.solve(b.row_block(nd.begin, nd.end));
        if (nd.parent) t[node] = matmul(ck_->skeleton(node).coeff, y[node]);
        return;
      }
      const DenseMatrix c = vstack(t[nd.left()], t[nd.right()]);
      wc[node] = apply_coupling(node, c);
      if (nd.parent) t[node] = matmul(ck_->skeleton(node).coeff, node_factors_[node].z.solve_transposed(c));
    });
  }

  // Downward: each node hands its children the coefficients of the correction
  // terms, -Z^-1 W c from itself plus Z^-1 p for the inherited part
  // (p - Z^-1 W G p = Z^-1 p).
  std::vector<DenseMatrix> g(nodes);
  for (std::size_t level = 0; level < tree.depth(); ++level) {
    const auto& ids = tree.levels()[level];
    parallel_for(ids.size(), threads, [&](std::size_t i) {
      const std::size_t node = ids[i];
      const TreeNode& nd = tree.node(node);
      if (nd.is_leaf()) {
        DenseMatrix local = std::move(y[node]);
        if (nd.parent) local += leaf_factors_[node].factor.solve(matmul_tn(ck_->skeleton(node).coeff, g[node]));
        x.set_row_block(nd.begin, local);
        return;
      }
      DenseMatrix rhs = std::move(wc[node]);
      rhs *= -1.0;
      if (nd.parent) rhs += matmul_tn(ck_->skeleton(node).coeff, g[node]);
      const DenseMatrix v = node_factors_[node].z.solve(rhs);
      const std::size_t sl = node_factors_[node].s_left;
      g[nd.left()] = v.row_block(0, sl);
      g[nd.right()] = v.row_block(sl, v.rows());
    });
  }
  return x;
}

std::vector<double> HierFactor::solve(std::span<const double> b, int threads) const {
  const DenseMatrix x = solve_many(DenseMatrix::column(b), threads);
  return {x.values().begin(), x.values().end()};
}

DenseMatrix HierFactor::solve_node_recursive(std::size_t node, const DenseMatrix& b) const {
  const TreeNode& nd = ck_->tree().node(node);
  if (nd.is_leaf()) return leaf_factors_[node].factor.solve(b);
  const std::size_t split = ck_->tree().node(nd.left()).size();
  const std::size_t sl = node_factors_[node].s_left;
  const DenseMatrix yl = solve_node_recursive(nd.left(), b.row_block(0, split));
  const DenseMatrix yr = solve_node_recursive(nd.right(), b.row_block(split, b.rows()));
  const DenseMatrix c = vstack(skel_project(*ck_, nd.left(), yl), skel_project(*ck_, nd.right(), yr));
  const DenseMatrix d = node_factors_[node].z.solve(apply_coupling(node, c));
  const DenseMatrix el = solve_node_recursive(nd.left(), apply_prolongation(*ck_, nd.left(), d.row_block(0, sl)));
  const DenseMatrix er =
      solve_node_recursive(nd.right(), apply_prolongation(*ck_, nd.right(), d.row_block(sl, d.rows())));
  return vstack(yl - el, yr - er);
}

std::vector<double> HierFactor::solve_recursive(std::span<const double> b) const {
  if (b.size() != ck_->size()) throw InvalidArgument("solve: right-hand side length must equal n");
  const DenseMatrix x = solve_node_recursive(0, DenseMatrix::column(b));
  return {x.values().begin(), x.values().end()};
}

std::size_t HierFactor::memory_bytes() const {
  std::size_t bytes = 0;
  for (const auto& lf : leaf_factors_) bytes += lf.factor.memory_bytes();
  for (const auto& nf : node_factors_) bytes += nf.z.memory_bytes();
  for (const auto& h : reduced_) bytes += h.size() * sizeof(double);
  return bytes;
}

bool HierFactor::operator==(const HierFactor& other) const {
  return lambda_ == other.lambda_ && leaf_factors_ == other.leaf_factors_ && node_factors_ == other.node_factors_ &&
         reduced_ == other.reduced_;
}

}  // namespace kernelsolve
