#pragma once

// Random-forest regressor: one bagged ensemble of CART trees per output
// channel. Splits are chosen greedily by variance reduction over all six
// (standardized) input features; bootstrap multiplicities act as weights so
// each feature is sorted once per fit rather than once per node.

#include <algorithm>
#include <array>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "drillforce/handforce/common.hpp"

namespace drillforce::handforce {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const Wrench& x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }

  int depth() const { return depth_from(0); }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
  }

 private:
  int depth_from(int i) const {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.feature < 0) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }
};

struct RFHandModel {
  Standardizer input;
  Standardizer output;
  std::array<std::vector<RegressionTree>, 6> forests;

  Wrench predict(const Wrench& delta) const {
    const Wrench x = input.apply(delta);
    Wrench z;
    for (int c = 0; c < 6; ++c) {
      double sum = 0.0;
      for (const auto& t : forests[c]) sum += t.predict(x);
      z(c) = sum / static_cast<double>(forests[c].size());
    }
    return output.invert(z);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& f : forests)
      for (const auto& t : f) n += t.nodes.size();
    return n;
  }

  void validate() const {
    for (const auto& f : forests) {
      if (f.empty()) throw DataError("rf model: every channel needs at least one tree");
      for (const auto& t : f) {
        if (t.nodes.empty()) throw DataError("rf model: empty tree");
        const int count = static_cast<int>(t.nodes.size());
        std::vector<int> refs(t.nodes.size(), 0);
        for (const auto& n : t.nodes) {
          if (n.feature < 0) continue;
          if (n.feature >= 6) throw DataError("rf model: split feature index out of range");
          if (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count) {
            throw DataError("rf model: child index out of range");
          }
          ++refs[static_cast<std::size_t>(n.left)];
          ++refs[static_cast<std::size_t>(n.right)];
        }
        for (std::size_t i = 1; i < refs.size(); ++i)
          if (refs[i] != 1) throw DataError("rf model: unreachable or shared node");
      }
    }
  }
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const std::array<std::vector<double>, 6>& x, const std::vector<double>& y,
              const std::array<std::vector<int>, 6>& presorted, int max_depth, int min_leaf)
      : x_(x), y_(y), presorted_(presorted), max_depth_(max_depth), min_leaf_(min_leaf),
        goes_left_(y.size(), 0) {}

  RegressionTree build(const std::vector<int>& counts) {
    counts_ = &counts;
    for (int f = 0; f < 6; ++f) {
      order_[f].clear();
      for (int idx : presorted_[f])
        if (counts[static_cast<std::size_t>(idx)] > 0) order_[f].push_back(idx);
    }
    buffer_.resize(order_[0].size());
    tree_ = RegressionTree{};
    grow(0, order_[0].size(), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::size_t b, std::size_t e, int depth) {
    const auto& counts = *counts_;
    double w = 0.0, s = 0.0, ss = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const int idx = order_[0][i];
      const double c = counts[static_cast<std::size_t>(idx)];
      const double y = y_[static_cast<std::size_t>(idx)];
      w += c;
      s += c * y;
      ss += c * y * y;
    }
    const int node = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, s / w});

    const double sse = ss - s * s / w;
    if (depth >= max_depth_ || w < 2.0 * min_leaf_ || sse <= 1e-14 * std::max(ss, 1e-300)) return node;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 0.0;
    const double parent_score = s * s / w;
    for (int f = 0; f < 6; ++f) {
      const auto& ord = order_[f];
      const auto& xf = x_[f];
      double wl = 0.0, sl = 0.0;
      for (std::size_t i = b; i + 1 < e; ++i) {
        const int idx = ord[i];
        const double c = counts[static_cast<std::size_t>(idx)];
        wl += c;
        sl += c * y_[static_cast<std::size_t>(idx)];
        const double xa = xf[static_cast<std::size_t>(idx)];
        const double xb = xf[static_cast<std::size_t>(ord[i + 1])];
        if (!(xb > xa)) continue;
        const double wr = w - wl;
        if (wl < min_leaf_ || wr < min_leaf_) continue;
        const double sr = s - sl;
        const double gain = sl * sl / wl + sr * sr / wr - parent_score;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          double thr = xa + 0.5 * (xb - xa);
          if (!(thr < xb)) thr = xa;
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0 || best_gain <= 1e-12 * sse) return node;

    std::size_t n_left = 0;
    for (std::size_t i = b; i < e; ++i) {
      const int idx = order_[0][i];
      const bool left = x_[best_feature][static_cast<std::size_t>(idx)] <= best_threshold;
      goes_left_[static_cast<std::size_t>(idx)] = left ? 1 : 0;
      n_left += left ? 1 : 0;
    }
    for (int f = 0; f < 6; ++f) stable_split(order_[f], b, e);
    const std::size_t mid = b + n_left;

    const int left = grow(b, mid, depth + 1);
    const int right = grow(mid, e, depth + 1);
    auto& n = tree_.nodes[static_cast<std::size_t>(node)];
    n.feature = best_feature;
    n.threshold = best_threshold;
    n.left = left;
    n.right = right;
    return node;
  }

  // Stable partition of ord[b, e) by goes_left_, preserving sort order.
  void stable_split(std::vector<int>& ord, std::size_t b, std::size_t e) {
    std::size_t l = b, r = 0;
    for (std::size_t i = b; i < e; ++i) {
      const int idx = ord[i];
      if (goes_left_[static_cast<std::size_t>(idx)]) {
        ord[l++] = idx;
      } else {
        buffer_[r++] = idx;
      }
    }
    std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(r), ord.begin() + static_cast<std::ptrdiff_t>(l));
  }

  const std::array<std::vector<double>, 6>& x_;
  const std::vector<double>& y_;
  const std::array<std::vector<int>, 6>& presorted_;
  int max_depth_;
  int min_leaf_;
  const std::vector<int>* counts_ = nullptr;
  std::array<std::vector<int>, 6> order_;
  std::vector<int> buffer_;
  std::vector<char> goes_left_;
  RegressionTree tree_;
};

}  // namespace detail

inline RFHandModel train_rf(std::span<const HandPair> pairs, const TrainConfig& config) {
  config.validate();
  if (pairs.empty()) throw DataError("train_rf: no training pairs");
  RFHandModel model;
  model.input = fit_input_standardizer(pairs);
  model.output = fit_output_standardizer(pairs);

  const std::size_t n = pairs.size();
  std::array<std::vector<double>, 6> x;
  std::array<std::vector<double>, 6> y;
  for (int f = 0; f < 6; ++f) {
    x[f].resize(n);
    y[f].resize(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Wrench zx = model.input.apply(pairs[i].delta);
    const Wrench zy = model.output.apply(pairs[i].target);
    for (int f = 0; f < 6; ++f) {
      x[f][i] = zx(f);
      y[f][i] = zy(f);
    }
  }
  std::array<std::vector<int>, 6> presorted;
  for (int f = 0; f < 6; ++f) {
    presorted[f].resize(n);
    std::iota(presorted[f].begin(), presorted[f].end(), 0);
    std::stable_sort(presorted[f].begin(), presorted[f].end(), [&](int a, int b) {
      return x[f][static_cast<std::size_t>(a)] < x[f][static_cast<std::size_t>(b)];
    });
  }

  std::vector<int> counts(n);
  for (int c = 0; c < 6; ++c) {
    detail::TreeBuilder builder(x, y[c], presorted, config.rf.max_depth, config.rf.min_leaf);
    model.forests[c].reserve(static_cast<std::size_t>(config.rf.trees));
    for (int t = 0; t < config.rf.trees; ++t) {
      std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                        static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(t)};
      std::mt19937_64 rng(seq);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t i = 0; i < n; ++i) ++counts[pick(rng)];
      model.forests[c].push_back(builder.build(counts));
    }
  }
  return model;
}

}  // namespace drillforce::handforce
