#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace ibart {

struct BartConfig {
  std::size_t trees = 20;
  std::size_t burn_in = 10000;
  std::size_t draws = 5000;
  // Depth prior: a node at depth d splits with probability alpha*(1+d)^-beta.
  double alpha = 0.95;
  double beta = 2.0;
  // Leaf prior N(0, sigma_mu^2), sigma_mu = 0.5 / (k * sqrt(trees)).
  double k = 2.0;
  // sigma^2 ~ nu*lambda / chi2_nu with P(sigma < sd(y)) = q.
  double nu = 3.0;
  double q = 0.9;
  // Move probabilities; change gets the remainder.
  double p_grow = 0.28;
  double p_prune = 0.28;
  std::uint64_t seed = 0;

  // Diagnostics. prior_only drops the likelihood from every acceptance
  // ratio; freeze_trees keeps every tree a zero stump; fixed_sigma2 (in
  // scaled-response units) skips the variance update.
  bool prior_only = false;
  bool freeze_trees = false;
  std::optional<double> fixed_sigma2;
  bool record_split_counts = false;

  // 10,000 burn-in / 5,000 kept draws.
  static BartConfig paper();
  // 1,000 burn-in / 1,000 kept draws.
  static BartConfig desk();

  void validate() const;
};

struct TreeNode {
  int var = -1;  // split variable, -1 for a leaf
  double cut = 0.0;  // rows with x[var] <= cut go left
  int left = -1;
  int right = -1;
  int parent = -1;
  int depth = 0;
  double mu = 0.0;
  bool alive = true;

  bool is_leaf() const { return var < 0; }
};

// Array-backed binary tree. Node 0 is the root; pruned slots are recycled.
class Tree {
 public:
  Tree();

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  TreeNode& node(int i) { return nodes_[static_cast<std::size_t>(i)]; }

  bool is_stump() const { return nodes_[0].is_leaf(); }
  std::vector<int> leaves() const;
  std::vector<int> internal_nodes() const;
  // Internal nodes whose children are both leaves.
  std::vector<int> prunable_nodes() const;

  // Splits leaf `at`; returns the new children {left, right}.
  std::pair<int, int> split(int at, int var, double cut);
  // Turns internal node `at` (with two leaf children) back into a leaf.
  void collapse(int at);

  template <typename Row>
  int find_leaf(const Row& row) const {
    int i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& nd = nodes_[static_cast<std::size_t>(i)];
      i = row(nd.var) <= nd.cut ? nd.left : nd.right;
    }
    return i;
  }

 private:
  int allocate();

  std::vector<TreeNode> nodes_;
  std::vector<int> free_;
};

struct BartEnsemble {
  std::vector<Tree> trees;
  double sigma2 = 1.0;  // scaled-response units
  // y_scaled = (y - shift) / scale - 0.5
  double shift = 0.0;
  double scale = 1.0;
};

struct InclusionSummary {
  std::vector<double> q;
  // True when no kept draw contained a split; q is then all zeros.
  bool no_split = false;
  std::size_t contributing_draws = 0;
};

// Per draw, the share of all split rules in the ensemble that use each
// variable, averaged over the draws with at least one split.
InclusionSummary inclusion_proportions(
    const std::vector<std::vector<std::uint32_t>>& split_counts,
    std::size_t variables);

struct BartFit {
  InclusionSummary inclusion;
  // Per kept draw, number of split rules per variable (only when
  // record_split_counts is set).
  std::vector<std::vector<std::uint32_t>> split_counts;
  // sigma^2 per kept draw, in the original response units.
  std::vector<double> sigma2;
  bool constant_response = false;
  double acceptance_rate = 0.0;
  BartEnsemble final_state;
};

// Called after every kept draw with the draw index and current state.
using DrawObserver = std::function<void(std::size_t, const BartEnsemble&)>;

// Backfitting Metropolis-within-Gibbs sampler for the sum-of-trees model.
// Throws ValidationError on non-finite input, n < 2, or a size mismatch.
BartFit bart_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 const BartConfig& config,
                 const DrawObserver& observer = nullptr);

}  // namespace ibart
