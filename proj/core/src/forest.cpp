#include "tsci/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tsci/error.hpp"
#include "tsci/parallel.hpp"

namespace tsci {

int ForestParams::resolved_mtry(Index num_features) const {
  if (mtry > 0) return static_cast<int>(std::min<Index>(mtry, num_features));
  return static_cast<int>(std::max<Index>(1, num_features / 3));
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Better split under the documented tie rule.
bool better(const SplitChoice& cand, const SplitChoice& best) {
  if (best.feature < 0) return true;
  if (cand.gain != best.gain) return cand.gain > best.gain;
  if (cand.feature != best.feature) return cand.feature < best.feature;
  return cand.threshold < best.threshold;
}

struct GrowTask {
  int node;
  std::size_t begin;
  std::size_t end;
  int depth;
};

}  // namespace

RegressionTree RegressionTree::grow(const Matrix& x, const Vector& y, std::span<const Index> sample,
                                    const GrowParams& params, Rng& rng) {
  const Index p = x.cols();
  const int mtry = std::clamp<int>(params.mtry, 1, static_cast<int>(std::max<Index>(p, 1)));
  const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, params.min_leaf));

  RegressionTree tree;
  std::vector<Index> idx(sample.begin(), sample.end());
  std::vector<int> features(static_cast<std::size_t>(p));
  std::iota(features.begin(), features.end(), 0);
  std::vector<std::pair<double, double>> scratch;
  scratch.reserve(idx.size());

  tree.nodes_.emplace_back();
  std::vector<GrowTask> stack{{0, 0, idx.size(), 0}};

  auto make_leaf = [&](int node, std::size_t begin, std::size_t end) {
    double sum = 0.0;
    for (std::size_t k = begin; k < end; ++k) sum += y(idx[k]);
    const auto count = static_cast<Index>(end - begin);
    tree.nodes_[static_cast<std::size_t>(node)].leaf = tree.leaf_count_++;
    tree.leaf_values_.push_back(count > 0 ? sum / static_cast<double>(count) : 0.0);
    tree.leaf_sizes_.push_back(count);
  };

  while (!stack.empty()) {
    const GrowTask task = stack.back();
    stack.pop_back();
    const std::size_t count = task.end - task.begin;

    const bool depth_capped = params.max_depth > 0 && task.depth >= params.max_depth;
    if (count < 2 * min_leaf || depth_capped || p == 0) {
      make_leaf(task.node, task.begin, task.end);
      continue;
    }

    double mean = 0.0;
    for (std::size_t k = task.begin; k < task.end; ++k) mean += y(idx[k]);
    mean /= static_cast<double>(count);
    double sse = 0.0, sumsq = 0.0;
    for (std::size_t k = task.begin; k < task.end; ++k) {
      const double r = y(idx[k]) - mean;
      sse += r * r;
      sumsq += y(idx[k]) * y(idx[k]);
    }
    if (sse <= 1e-14 * (1.0 + sumsq)) {
      make_leaf(task.node, task.begin, task.end);
      continue;
    }

    // Partial Fisher-Yates draw of mtry candidate features.
    for (int k = 0; k < mtry; ++k) {
      const auto j = uniform_index(rng, k, p - 1);
      std::swap(features[static_cast<std::size_t>(k)], features[static_cast<std::size_t>(j)]);
    }

    SplitChoice best;
    for (int c = 0; c < mtry; ++c) {
      const int f = features[static_cast<std::size_t>(c)];
      scratch.clear();
      for (std::size_t k = task.begin; k < task.end; ++k) scratch.emplace_back(x(idx[k], f), y(idx[k]) - mean);
      std::sort(scratch.begin(), scratch.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (scratch.front().first == scratch.back().first) continue;

      // Centered responses: parent sum is zero, so gain = sL^2/nL + sR^2/nR.
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < count; ++k) {
        left_sum += scratch[k].second;
        const std::size_t n_left = k + 1;
        if (scratch[k].first == scratch[k + 1].first) continue;
        if (n_left < min_leaf) continue;
        if (count - n_left < min_leaf) break;
        const double right_sum = -left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                            right_sum * right_sum / static_cast<double>(count - n_left);
        SplitChoice cand{f, 0.5 * (scratch[k].first + scratch[k + 1].first), gain};
        if (better(cand, best)) best = cand;
      }
    }

    if (best.feature < 0 || best.gain <= 1e-12 * sse) {
      make_leaf(task.node, task.begin, task.end);
      continue;
    }

    auto mid_it = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(task.begin),
                                 idx.begin() + static_cast<std::ptrdiff_t>(task.end),
                                 [&](Index i) { return x(i, best.feature) <= best.threshold; });
    const auto mid = static_cast<std::size_t>(mid_it - idx.begin());

    const int left = static_cast<int>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    const int right = static_cast<int>(tree.nodes_.size());
    tree.nodes_.emplace_back();
    TreeNode& node = tree.nodes_[static_cast<std::size_t>(task.node)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;

    // Right pushed first so the left subtree gets the lower leaf ids.
    stack.push_back({right, mid, task.end, task.depth + 1});
    stack.push_back({left, task.begin, mid, task.depth + 1});
  }
  return tree;
}

int RegressionTree::leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  std::size_t node = 0;
  while (nodes_[node].feature >= 0) {
    const TreeNode& n = nodes_[node];
    node = static_cast<std::size_t>(row(n.feature) <= n.threshold ? n.left : n.right);
  }
  return nodes_[node].leaf;
}

std::vector<int> RegressionTree::leaves_of(const Matrix& rows) const {
  std::vector<int> out(static_cast<std::size_t>(rows.rows()));
  for (Index i = 0; i < rows.rows(); ++i) {
    std::size_t node = 0;
    while (nodes_[node].feature >= 0) {
      const TreeNode& n = nodes_[node];
      node = static_cast<std::size_t>(rows(i, n.feature) <= n.threshold ? n.left : n.right);
    }
    out[static_cast<std::size_t>(i)] = nodes_[node].leaf;
  }
  return out;
}

Vector Forest::predict(const Matrix& rows) const {
  Vector out = Vector::Zero(rows.rows());
  for (const auto& tree : trees_)
    for (Index i = 0; i < rows.rows(); ++i) out(i) += tree.predict(rows.row(i));
  return out / static_cast<double>(trees_.size());
}

Forest fit_forest(const Matrix& covariates, const Vector& response, const ForestParams& params) {
  const Index m = covariates.rows();
  if (response.size() != m) throw DataError("fit_forest: covariate and response row counts differ");
  if (params.num_trees < 1) throw UsageError("fit_forest: num_trees must be >= 1");
  if (params.min_leaf < 1) throw UsageError("fit_forest: min_leaf must be >= 1");
  if (m < static_cast<Index>(params.min_leaf))
    throw SizeError("fit_forest: " + std::to_string(m) + " training rows is below min_leaf");

  RegressionTree::GrowParams grow{params.resolved_mtry(covariates.cols()), params.min_leaf, params.max_depth};
  const auto draws = std::max<Index>(1, static_cast<Index>(std::llround(params.sample_fraction * static_cast<double>(m))));

  std::vector<RegressionTree> trees(static_cast<std::size_t>(params.num_trees));
  parallel_for(trees.size(), [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, {0x74ee, t}));
    IndexList sample(static_cast<std::size_t>(draws));
    if (params.bootstrap) {
      for (auto& s : sample) s = uniform_index(rng, 0, m - 1);
    } else {
      IndexList perm(static_cast<std::size_t>(m));
      std::iota(perm.begin(), perm.end(), Index{0});
      for (Index i = 0; i < std::min(draws, m); ++i)
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(uniform_index(rng, i, m - 1))]);
      sample.assign(perm.begin(), perm.begin() + std::min(draws, m));
    }
    trees[t] = RegressionTree::grow(covariates, response, sample, grow, rng);
  });
  return Forest(std::move(trees), params);
}

WeightMatrix forest_weights(const Forest& forest, const Matrix& reference, const Matrix& query) {
  const Index n_ref = reference.rows();
  const Index n_q = query.rows();
  const std::size_t num_trees = forest.size();
  if (n_ref == 0) throw SizeError("forest_weights: no reference rows");

  // Per tree: CSR list of reference rows by leaf, and the leaf of each query row.
  struct TreeLayout {
    std::vector<Index> offsets;
    std::vector<Index> members;
    std::vector<int> query_leaf;
  };
  std::vector<TreeLayout> layout(num_trees);
  parallel_for(num_trees, [&](std::size_t t) {
    const RegressionTree& tree = forest.trees()[t];
    const auto ref_leaf = tree.leaves_of(reference);
    TreeLayout& lay = layout[t];
    lay.offsets.assign(static_cast<std::size_t>(tree.leaf_count()) + 1, 0);
    for (int l : ref_leaf) ++lay.offsets[static_cast<std::size_t>(l) + 1];
    std::partial_sum(lay.offsets.begin(), lay.offsets.end(), lay.offsets.begin());
    lay.members.resize(static_cast<std::size_t>(n_ref));
    std::vector<Index> fill(lay.offsets.begin(), lay.offsets.end() - 1);
    for (Index j = 0; j < n_ref; ++j)
      lay.members[static_cast<std::size_t>(fill[static_cast<std::size_t>(ref_leaf[static_cast<std::size_t>(j)])]++)] = j;
    lay.query_leaf = (&query == &reference) ? ref_leaf : tree.leaves_of(query);
  });

  WeightMatrix out;
  out.kind = WeightKind::forest;
  // Row-major accumulation keeps each query row's updates contiguous.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> acc =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(n_q, n_ref);
  std::vector<Index> empty_events(static_cast<std::size_t>(n_q), 0);
  const double inv_trees = 1.0 / static_cast<double>(num_trees);

  parallel_for(static_cast<std::size_t>(n_q), [&](std::size_t i) {
    double uniform_share = 0.0;
    for (const TreeLayout& lay : layout) {
      const auto leaf = static_cast<std::size_t>(lay.query_leaf[i]);
      const Index begin = lay.offsets[leaf];
      const Index end = lay.offsets[leaf + 1];
      if (begin == end) {
        uniform_share += inv_trees / static_cast<double>(n_ref);
        ++empty_events[i];
        continue;
      }
      const double w = inv_trees / static_cast<double>(end - begin);
      for (Index k = begin; k < end; ++k) acc(static_cast<Index>(i), lay.members[static_cast<std::size_t>(k)]) += w;
    }
    if (uniform_share > 0.0) acc.row(static_cast<Index>(i)).array() += uniform_share;
  });

  out.omega = acc;
  out.empty_leaf_events = std::accumulate(empty_events.begin(), empty_events.end(), Index{0});
  return out;
}

WeightMatrix full_sample_weights(const Dataset& data, const ForestParams& params) {
  const Matrix c = data.covariates();
  const Forest forest = fit_forest(c, data.d(), params);
  WeightMatrix out = forest_weights(forest, c);
  out.kind = WeightKind::full_sample_forest;
  return out;
}

void write_weight_csv(const WeightMatrix& w, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  for (Index i = 0; i < w.omega.rows(); ++i) {
    for (Index j = 0; j < w.omega.cols(); ++j) {
      if (j) out << ',';
      out << w.omega(i, j);
    }
    out << '\n';
  }
}

std::string to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::forest: return "forest";
    case WeightKind::basis: return "basis";
    case WeightKind::boosting: return "boosting";
    case WeightKind::full_sample_forest: return "full-sample-forest";
  }
  return "unknown";
}

}  // namespace tsci
