#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ibart/bart.hpp"

namespace ibart {

// ---------------------------------------------------------------------------
// BART-G.SE

struct GseThreshold {
  std::vector<double> mean;  // m_i over permutations
  std::vector<double> sd;    // s_i, sample SD over permutations
  double multiplier = 0.0;   // C*
  bool unattainable = false;
};

// Smallest C such that, for every variable, strictly more than (1-alpha)*B
// of its permutation proportions satisfy q* <= m + C*s. perm_q[b][i].
GseThreshold gse_threshold(const std::vector<std::vector<double>>& perm_q,
                           double alpha);

// Indices with q_i > m_i + C*s_i (q_i > m_i when s_i = 0).
std::vector<std::size_t> gse_apply(const std::vector<double>& q,
                                   const GseThreshold& t, double multiplier);

struct GseOptions {
  std::size_t permutations = 50;
  double alpha = 0.05;
};

struct GseResult {
  std::vector<std::size_t> selected;
  std::vector<double> q;
  std::vector<std::vector<double>> perm_q;
  std::vector<double> perm_mean;
  std::vector<double> perm_sd;
  double multiplier = 0.0;
  bool unattainable = false;
  bool no_split = false;
  std::size_t permutations = 0;
  double alpha = 0.0;
};

// Fits BART on (x, y) and on B uniformly permuted copies of y. Permutation
// fits run through parallel_for; each uses its own seed derived from
// config.seed and the permutation index.
GseResult gse_select(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const BartConfig& config, const GseOptions& options = {});

// ---------------------------------------------------------------------------
// LASSO

struct LassoOptions {
  std::size_t folds = 10;
  std::size_t path_length = 100;
  double min_ratio = 1e-3;
  // Coordinate descent stops when no squared standardized coefficient
  // update in a sweep exceeds tolerance * Var(y).
  double tolerance = 1e-7;
  std::uint64_t seed = 0;
};

struct LassoFit {
  double lambda = 0.0;
  double intercept = 0.0;
  Eigen::VectorXd coefficients;  // original column scale
  std::vector<std::size_t> support;
};

struct LassoResult {
  std::vector<double> lambdas;
  std::vector<double> cv_error;
  std::size_t chosen = 0;
  LassoFit fit;
};

// Minimizes (1/2n)||y - b0 - Zb||^2 + lambda*||b||_1 on standardized columns
// Z (population SD); coefficients are returned on the original scale.
// Zero-variance columns get a zero coefficient.
LassoFit lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   double lambda, double tolerance = 1e-20);

// Smallest lambda that zeroes every standardized coefficient.
double lasso_lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Log-spaced path from lambda_max down to min_ratio*lambda_max; lambda is
// chosen at the minimum mean K-fold squared prediction error.
LassoResult lasso_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const LassoOptions& options = {});

// ---------------------------------------------------------------------------
// Best subset

struct SubsetResult {
  std::vector<std::size_t> indices;
  double aic = 0.0;
  double rss = 0.0;
  double intercept = 0.0;
  Eigen::VectorXd coefficients;  // aligned with indices
  std::size_t evaluated = 0;
  std::size_t rank_deficient = 0;
};

inline constexpr double kRssFloor = 1e-12;
inline constexpr double kDefaultSubsetBudget = 1e7;

// Exhaustive search over all size-k subsets (intercept always included) for
// the minimum AIC = n ln(RSS/n) + 2(k+1). Ties keep the lexicographically
// smallest subset. Throws ValidationError when choose(p, k) > budget.
SubsetResult l0_best_subset(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            std::size_t k, double budget = kDefaultSubsetBudget);

struct SubsetSweep {
  std::vector<SubsetResult> per_k;  // per_k[j] has size j + 1
  std::size_t best = 0;             // index into per_k
};

SubsetSweep select_k_sweep(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           std::size_t k_max, double budget = kDefaultSubsetBudget);

}  // namespace ibart
