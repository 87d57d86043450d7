#include "ibart/bart.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ibart/error.hpp"
#include "ibart/random.hpp"

namespace ibart {

BartConfig BartConfig::paper() { return BartConfig{}; }

BartConfig BartConfig::desk() {
  BartConfig c;
  c.burn_in = 1000;
  c.draws = 1000;
  return c;
}

void BartConfig::validate() const {
  if (trees == 0 || draws == 0)
    throw ValidationError("BART needs at least one tree and one kept draw");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("BART alpha must lie in (0, 1)");
  if (!(beta > 0.0)) throw ValidationError("BART beta must be positive");
  if (!(k > 0.0)) throw ValidationError("BART k must be positive");
  if (!(nu > 0.0)) throw ValidationError("BART nu must be positive");
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("BART q must lie in (0, 1)");
  if (!(p_grow > 0.0 && p_prune > 0.0 && p_grow + p_prune <= 1.0))
    throw ValidationError("BART move probabilities are invalid");
  if (fixed_sigma2 && !(*fixed_sigma2 > 0.0))
    throw ValidationError("fixed sigma^2 must be positive");
}

// ---------------------------------------------------------------------------
// Tree

Tree::Tree() { nodes_.emplace_back(); }

std::vector<int> Tree::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].alive && nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> Tree::internal_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].alive && !nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> Tree::prunable_nodes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& nd = nodes_[i];
    if (nd.alive && !nd.is_leaf() && node(nd.left).is_leaf() &&
        node(nd.right).is_leaf())
      out.push_back(static_cast<int>(i));
  }
  return out;
}

int Tree::allocate() {
  if (!free_.empty()) {
    const int i = free_.back();
    free_.pop_back();
    node(i) = TreeNode{};
    return i;
  }
  nodes_.emplace_back();
  return static_cast<int>(nodes_.size() - 1);
}

std::pair<int, int> Tree::split(int at, int var, double cut) {
  const int l = allocate();
  const int r = allocate();
  TreeNode& nd = node(at);
  nd.var = var;
  nd.cut = cut;
  nd.left = l;
  nd.right = r;
  for (int c : {l, r}) {
    node(c).parent = at;
    node(c).depth = nd.depth + 1;
  }
  return {l, r};
}

void Tree::collapse(int at) {
  TreeNode& nd = node(at);
  for (int c : {nd.left, nd.right}) {
    node(c).alive = false;
    free_.push_back(c);
  }
  nd.var = -1;
  nd.left = nd.right = -1;
}

// ---------------------------------------------------------------------------
// Inclusion proportions

InclusionSummary inclusion_proportions(
    const std::vector<std::vector<std::uint32_t>>& split_counts,
    std::size_t variables) {
  InclusionSummary s;
  s.q.assign(variables, 0.0);
  for (const auto& draw : split_counts) {
    const double total =
        std::accumulate(draw.begin(), draw.end(), 0.0);
    if (total == 0.0) continue;
    for (std::size_t i = 0; i < variables && i < draw.size(); ++i)
      s.q[i] += draw[i] / total;
    ++s.contributing_draws;
  }
  if (s.contributing_draws == 0) {
    s.no_split = true;
    return s;
  }
  for (double& v : s.q) v /= static_cast<double>(s.contributing_draws);
  return s;
}

// ---------------------------------------------------------------------------
// Sampler

namespace {

class Sampler {
 public:
  Sampler(const Eigen::MatrixXd& x, const Eigen::VectorXd& y_scaled,
          const BartConfig& cfg)
      : x_(x),
        y_(y_scaled),
        n_(static_cast<std::size_t>(x.rows())),
        p_(static_cast<std::size_t>(x.cols())),
        cfg_(cfg),
        rng_(derive_seed(cfg.seed, Stream::kFit, 0)),
        trees_(cfg.trees),
        leaf_of_(cfg.trees, std::vector<int>(n_, 0)),
        tree_fit_(cfg.trees, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_))),
        total_fit_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_))),
        resid_(static_cast<Eigen::Index>(n_)),
        var_order_(p_) {
    std::iota(var_order_.begin(), var_order_.end(), 0);
    rank_.resize(p_);
    distinct_.resize(p_);
    std::vector<std::size_t> order(n_);
    for (std::size_t v = 0; v < p_; ++v) {
      std::iota(order.begin(), order.end(), 0);
      const auto col = x_.col(static_cast<Eigen::Index>(v));
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
      rank_[v].resize(n_);
      for (std::size_t k = 0; k < n_; ++k) {
        const double value = col[order[k]];
        if (distinct_[v].empty() || distinct_[v].back() != value)
          distinct_[v].push_back(value);
        rank_[v][order[k]] = static_cast<std::uint32_t>(distinct_[v].size() - 1);
      }
    }
    const double m = static_cast<double>(cfg.trees);
    const double sigma_mu = 0.5 / (cfg.k * std::sqrt(m));
    sigma_mu2_ = sigma_mu * sigma_mu;

    const double mean = y_.mean();
    const double var =
        (y_.array() - mean).square().sum() / static_cast<double>(n_ - 1);
    const boost::math::chi_squared chi(cfg.nu);
    lambda_ = var * boost::math::quantile(chi, 1.0 - cfg.q) / cfg.nu;
    sigma2_ = cfg.fixed_sigma2 ? *cfg.fixed_sigma2 : var;
  }

  void sweep() {
    if (!cfg_.freeze_trees)
      for (std::size_t t = 0; t < trees_.size(); ++t) step_tree(t);
    if (!cfg_.fixed_sigma2) draw_sigma2();
  }

  void count_splits(std::vector<std::uint32_t>& counts) const {
    counts.assign(p_, 0);
    for (const auto& tree : trees_)
      for (const auto& nd : tree.nodes())
        if (nd.alive && !nd.is_leaf()) ++counts[static_cast<std::size_t>(nd.var)];
  }

  double sigma2() const { return sigma2_; }
  const std::vector<Tree>& trees() const { return trees_; }
  double acceptance_rate() const {
    return proposals_ == 0 ? 0.0
                           : static_cast<double>(accepted_) /
                                 static_cast<double>(proposals_);
  }

 private:
  double x(std::size_t row, int var) const {
    return x_(static_cast<Eigen::Index>(row), var);
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  std::size_t pick(std::size_t count) {
    return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng_);
  }

  // Integrated leaf log-likelihood, up to terms that cancel in every ratio.
  double leaf_loglik(double count, double sum) const {
    const double denom = sigma2_ + count * sigma_mu2_;
    return 0.5 * std::log(sigma2_ / denom) +
           sigma_mu2_ * sum * sum / (2.0 * sigma2_ * denom);
  }

  double split_prob(int depth) const {
    return cfg_.alpha * std::pow(1.0 + depth, -cfg_.beta);
  }

  // Uniform draw over the variables that take at least two distinct values
  // on rows, via a lazily shuffled variable order. -1 if none qualifies.
  int draw_split_var(const std::vector<std::size_t>& rows) {
    for (std::size_t k = 0; k < p_; ++k) {
      const std::size_t j = k + pick(p_ - k);
      std::swap(var_order_[k], var_order_[j]);
      const int v = static_cast<int>(var_order_[k]);
      const double first = x(rows.front(), v);
      for (std::size_t r : rows)
        if (x(r, v) != first) return v;
    }
    return -1;
  }

  // Uniform draw over the distinct values of var on rows, excluding the
  // largest, so both children are non-empty.
  double draw_cut(const std::vector<std::size_t>& rows, int var) {
    const auto v = static_cast<std::size_t>(var);
    const auto& rank = rank_[v];
    const auto& values = distinct_[v];
    rank_buffer_.clear();
    if (rows.size() * 8 < values.size()) {
      for (std::size_t r : rows) rank_buffer_.push_back(rank[r]);
      std::sort(rank_buffer_.begin(), rank_buffer_.end());
      rank_buffer_.erase(std::unique(rank_buffer_.begin(), rank_buffer_.end()),
                         rank_buffer_.end());
    } else {
      seen_.assign(values.size(), 0);
      for (std::size_t r : rows) seen_[rank[r]] = 1;
      for (std::uint32_t k = 0; k < values.size(); ++k)
        if (seen_[k]) rank_buffer_.push_back(k);
    }
    return values[rank_buffer_[pick(rank_buffer_.size() - 1)]];
  }

  void rows_in(std::size_t t, int a, int b, std::vector<std::size_t>& rows) const {
    rows.clear();
    const auto& lo = leaf_of_[t];
    for (std::size_t i = 0; i < n_; ++i)
      if (lo[i] == a || lo[i] == b) rows.push_back(i);
  }

  void step_tree(std::size_t t) {
    const Eigen::VectorXd& fit = tree_fit_[t];
    resid_ = y_ - total_fit_ + fit;

    const Tree& tree = trees_[t];
    if (tree.is_stump()) {
      grow(t);
    } else {
      const double u = uniform();
      if (u < cfg_.p_grow) {
        grow(t);
      } else if (u < cfg_.p_grow + cfg_.p_prune) {
        prune(t);
      } else {
        change(t);
      }
    }
    draw_leaves(t);
  }

  bool accept(double log_ratio) {
    ++proposals_;
    if (log_ratio >= 0.0 || std::log(uniform()) < log_ratio) {
      ++accepted_;
      return true;
    }
    return false;
  }

  void grow(std::size_t t) {
    Tree& tree = trees_[t];
    const auto leaves = tree.leaves();
    const int leaf = leaves[pick(leaves.size())];
    rows_in(t, leaf, leaf, rows_);
    if (rows_.size() < 2) return;
    const int var = draw_split_var(rows_);
    if (var < 0) return;
    const double cut = draw_cut(rows_, var);

    double nl = 0, sl = 0, nr = 0, sr = 0;
    for (std::size_t r : rows_) {
      if (x(r, var) <= cut) {
        nl += 1;
        sl += resid_[static_cast<Eigen::Index>(r)];
      } else {
        nr += 1;
        sr += resid_[static_cast<Eigen::Index>(r)];
      }
    }

    const int depth = tree.node(leaf).depth;
    const double pd = split_prob(depth);
    const double pc = split_prob(depth + 1);
    const double log_prior = std::log(pd) + 2.0 * std::log(1.0 - pc) - std::log(1.0 - pd);

    // Prunable-node count after the grow: leaf becomes prunable; its parent
    // stops being prunable if it was.
    std::size_t w_after = tree.prunable_nodes().size() + 1;
    const int parent = tree.node(leaf).parent;
    if (parent >= 0) {
      const auto& pn = tree.node(parent);
      if (tree.node(pn.left).is_leaf() && tree.node(pn.right).is_leaf()) --w_after;
    }
    const double p_grow_here = tree.is_stump() ? 1.0 : cfg_.p_grow;
    const double log_proposal =
        std::log(cfg_.p_prune / p_grow_here) +
        std::log(static_cast<double>(leaves.size()) / static_cast<double>(w_after));

    double log_lik = 0.0;
    if (!cfg_.prior_only)
      log_lik = leaf_loglik(nl, sl) + leaf_loglik(nr, sr) -
                leaf_loglik(nl + nr, sl + sr);

    if (!accept(log_prior + log_proposal + log_lik)) return;
    const auto [l, r] = tree.split(leaf, var, cut);
    auto& lo = leaf_of_[t];
    for (std::size_t row : rows_) lo[row] = x(row, var) <= cut ? l : r;
  }

  void prune(std::size_t t) {
    Tree& tree = trees_[t];
    const auto prunable = tree.prunable_nodes();
    const int at = prunable[pick(prunable.size())];
    const auto& nd = tree.node(at);
    const int l = nd.left, r = nd.right;

    double nl = 0, sl = 0, nr = 0, sr = 0;
    const auto& lo = leaf_of_[t];
    for (std::size_t i = 0; i < n_; ++i) {
      if (lo[i] == l) {
        nl += 1;
        sl += resid_[static_cast<Eigen::Index>(i)];
      } else if (lo[i] == r) {
        nr += 1;
        sr += resid_[static_cast<Eigen::Index>(i)];
      }
    }

    const double pd = split_prob(nd.depth);
    const double pc = split_prob(nd.depth + 1);
    const double log_prior = -(std::log(pd) + 2.0 * std::log(1.0 - pc) - std::log(1.0 - pd));
    const std::size_t leaves_after = tree.leaves().size() - 1;
    const bool stump_after = at == 0;
    const double p_grow_after = stump_after ? 1.0 : cfg_.p_grow;
    const double log_proposal =
        std::log(p_grow_after / cfg_.p_prune) +
        std::log(static_cast<double>(prunable.size()) / static_cast<double>(leaves_after));

    double log_lik = 0.0;
    if (!cfg_.prior_only)
      log_lik = leaf_loglik(nl + nr, sl + sr) - leaf_loglik(nl, sl) -
                leaf_loglik(nr, sr);

    if (!accept(log_prior + log_proposal + log_lik)) return;
    tree.collapse(at);
    auto& lom = leaf_of_[t];
    for (std::size_t i = 0; i < n_; ++i)
      if (lom[i] == l || lom[i] == r) lom[i] = at;
  }

  void change(std::size_t t) {
    Tree& tree = trees_[t];
    const auto internal = tree.internal_nodes();
    const int at = internal[pick(internal.size())];

    // Rows reaching `at` are exactly those whose leaf lies in its subtree.
    in_subtree_.assign(tree.nodes().size(), 0);
    std::vector<int> stack{at};
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      in_subtree_[static_cast<std::size_t>(i)] = 1;
      const auto& nd = tree.node(i);
      if (!nd.is_leaf()) {
        stack.push_back(nd.left);
        stack.push_back(nd.right);
      }
    }
    rows_.clear();
    const auto& lo = leaf_of_[t];
    for (std::size_t i = 0; i < n_; ++i)
      if (in_subtree_[static_cast<std::size_t>(lo[i])]) rows_.push_back(i);

    const int var = draw_split_var(rows_);
    if (var < 0) return;
    const double cut = draw_cut(rows_, var);

    // Route the subtree's rows under the new rule, counting visits per node.
    const std::size_t slots = tree.nodes().size();
    visits_.assign(slots, 0);
    old_n_.assign(slots, 0.0);
    old_s_.assign(slots, 0.0);
    new_n_.assign(slots, 0.0);
    new_s_.assign(slots, 0.0);
    new_leaf_.resize(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const std::size_t row = rows_[k];
      const double r = resid_[static_cast<Eigen::Index>(row)];
      const auto old_leaf = static_cast<std::size_t>(lo[row]);
      old_n_[old_leaf] += 1;
      old_s_[old_leaf] += r;
      int i = at;
      bool first = true;
      while (!tree.node(i).is_leaf()) {
        ++visits_[static_cast<std::size_t>(i)];
        const auto& nd = tree.node(i);
        const int v = first ? var : nd.var;
        const double c = first ? cut : nd.cut;
        i = x(row, v) <= c ? nd.left : nd.right;
        first = false;
      }
      ++visits_[static_cast<std::size_t>(i)];
      new_n_[static_cast<std::size_t>(i)] += 1;
      new_s_[static_cast<std::size_t>(i)] += r;
      new_leaf_[k] = i;
    }
    for (std::size_t i = 0; i < slots; ++i)
      if (in_subtree_[i] && visits_[i] == 0) return;  // empty child

    double log_lik = 0.0;
    if (!cfg_.prior_only) {
      for (std::size_t i = 0; i < slots; ++i) {
        if (!in_subtree_[i] || !tree.nodes()[i].is_leaf()) continue;
        log_lik += leaf_loglik(new_n_[i], new_s_[i]) - leaf_loglik(old_n_[i], old_s_[i]);
      }
    }
    if (!accept(log_lik)) return;
    tree.node(at).var = var;
    tree.node(at).cut = cut;
    auto& lom = leaf_of_[t];
    for (std::size_t k = 0; k < rows_.size(); ++k) lom[rows_[k]] = new_leaf_[k];
  }

  void draw_leaves(std::size_t t) {
    Tree& tree = trees_[t];
    const std::size_t slots = tree.nodes().size();
    new_n_.assign(slots, 0.0);
    new_s_.assign(slots, 0.0);
    const auto& lo = leaf_of_[t];
    for (std::size_t i = 0; i < n_; ++i) {
      new_n_[static_cast<std::size_t>(lo[i])] += 1;
      new_s_[static_cast<std::size_t>(lo[i])] += resid_[static_cast<Eigen::Index>(i)];
    }
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < slots; ++i) {
      TreeNode& nd = tree.node(static_cast<int>(i));
      if (!nd.alive || !nd.is_leaf()) continue;
      const double post_var = 1.0 / (new_n_[i] / sigma2_ + 1.0 / sigma_mu2_);
      const double post_mean = post_var * new_s_[i] / sigma2_;
      nd.mu = post_mean + std::sqrt(post_var) * normal(rng_);
    }
    Eigen::VectorXd& fit = tree_fit_[t];
    total_fit_ -= fit;
    for (std::size_t i = 0; i < n_; ++i)
      fit[static_cast<Eigen::Index>(i)] = tree.node(lo[i]).mu;
    total_fit_ += fit;
  }

  void draw_sigma2() {
    const double ssr = (y_ - total_fit_).squaredNorm();
    std::chi_squared_distribution<double> chi(cfg_.nu + static_cast<double>(n_));
    sigma2_ = (cfg_.nu * lambda_ + ssr) / chi(rng_);
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  std::size_t n_;
  std::size_t p_;
  BartConfig cfg_;
  Rng rng_;

  std::vector<Tree> trees_;
  std::vector<std::vector<int>> leaf_of_;
  std::vector<Eigen::VectorXd> tree_fit_;
  Eigen::VectorXd total_fit_;
  Eigen::VectorXd resid_;
  double sigma_mu2_ = 0.0;
  double lambda_ = 0.0;
  double sigma2_ = 1.0;

  std::size_t proposals_ = 0;
  std::size_t accepted_ = 0;

  // Scratch buffers reused across steps.
  std::vector<std::size_t> var_order_;
  std::vector<std::size_t> rows_;
  // Per variable: dense rank of each row and the sorted distinct values.
  std::vector<std::vector<std::uint32_t>> rank_;
  std::vector<std::vector<double>> distinct_;
  std::vector<std::uint32_t> rank_buffer_;
  std::vector<char> seen_;
  std::vector<char> in_subtree_;
  std::vector<int> visits_;
  std::vector<double> old_n_, old_s_, new_n_, new_s_;
  std::vector<int> new_leaf_;
};

}  // namespace

BartFit bart_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                 const BartConfig& config, const DrawObserver& observer) {
  config.validate();
  if (x.rows() != y.size())
    throw ValidationError("predictor rows and response length differ");
  if (x.rows() < 2) throw ValidationError("BART needs at least two rows");
  if (x.cols() < 1) throw ValidationError("BART needs at least one predictor");
  if (!x.allFinite() || !y.allFinite())
    throw ValidationError("BART input contains non-finite values");
  if (x.rows() < 10)
    spdlog::warn("BART fit on only {} rows", static_cast<long>(x.rows()));

  const std::size_t p = static_cast<std::size_t>(x.cols());
  BartFit out;
  const double lo = y.minCoeff(), hi = y.maxCoeff();
  if (hi == lo) {
    spdlog::warn("constant response; BART has nothing to fit");
    out.constant_response = true;
    out.inclusion.q.assign(p, 0.0);
    out.inclusion.no_split = true;
    out.final_state.trees.assign(config.trees, Tree{});
    out.final_state.shift = lo;
    return out;
  }
  const double scale = hi - lo;
  const Eigen::VectorXd ys = ((y.array() - lo) / scale - 0.5).matrix();

  Sampler sampler(x, ys, config);
  for (std::size_t it = 0; it < config.burn_in; ++it) sampler.sweep();

  std::vector<std::vector<std::uint32_t>> counts(config.draws);
  out.sigma2.reserve(config.draws);
  BartEnsemble state;
  state.shift = lo;
  state.scale = scale;
  for (std::size_t d = 0; d < config.draws; ++d) {
    sampler.sweep();
    sampler.count_splits(counts[d]);
    out.sigma2.push_back(sampler.sigma2() * scale * scale);
    if (observer) {
      state.trees = sampler.trees();
      state.sigma2 = sampler.sigma2();
      observer(d, state);
    }
  }
  out.inclusion = inclusion_proportions(counts, p);
  if (config.record_split_counts) out.split_counts = std::move(counts);
  out.acceptance_rate = sampler.acceptance_rate();
  out.final_state.trees = sampler.trees();
  out.final_state.sigma2 = sampler.sigma2();
  out.final_state.shift = lo;
  out.final_state.scale = scale;
  return out;
}

}  // namespace ibart
