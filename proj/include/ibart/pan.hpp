#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibart/bart.hpp"
#include "ibart/descriptor_space.hpp"
#include "ibart/selectors.hpp"

namespace ibart {

enum class Scheme { kAuto, kUnaryFirst, kBinaryFirst };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

struct PanConfig {
  Scheme scheme = Scheme::kAuto;
  std::size_t max_iterations = 4;
  double rho_max = 0.95;
  bool run_l0 = false;
  std::size_t k = 4;
  BartConfig bart;
  GseOptions gse;
  std::size_t lasso_folds = 10;
  double dedup_threshold = kDefaultDedupThreshold;
  bool unit_filter = true;
  double magnitude_cap = 1e8;
  double subset_budget = kDefaultSubsetBudget;
  std::vector<OpKind> unary_ops = all_unary_ops();
  std::vector<OpKind> binary_ops = all_binary_ops();
  std::uint64_t seed = 0;

  void validate() const;
};

struct CorrelationScan {
  double rho = 0.0;
  std::size_t index = 0;
};

// Largest absolute Pearson correlation between a column and y. Constant
// columns count as 0. Throws ValidationError on an empty space.
CorrelationScan correlation_scan(const DescriptorSpace& space, const Eigen::VectorXd& y);

struct IterationAudit {
  std::size_t iteration = 0;
  std::size_t screened = 0;   // columns given to G.SE
  std::size_t selected = 0;   // G.SE selection size
  std::size_t union_size = 0;
  bool carried_forward = false;  // empty selection; previous union reused
  std::string operators;         // "unary" or "binary"
  GenerationReport generation;
  std::size_t generated = 0;  // size of the next space
  double rho = 0.0;           // after generation
  double multiplier = 0.0;
  std::vector<std::string> selected_descriptors;
  double seconds = 0.0;
};

enum class StopReason { kCorrelation, kMaxIterations };

struct PanResult {
  Scheme scheme = Scheme::kUnaryFirst;
  std::size_t iterations = 0;
  StopReason stop = StopReason::kMaxIterations;
  double initial_rho = 0.0;
  double final_rho = 0.0;
  std::vector<IterationAudit> audit;

  DescriptorSpace final_space;  // X_M
  LassoResult lasso;
  std::vector<Descriptor> lasso_selected;
  std::optional<SubsetSweep> l0;

  // Reported model: the l0 winner when it ran, otherwise the LASSO support.
  std::vector<Descriptor> selected;
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  double seconds = 0.0;
};

// Largest absolute correlation between two distinct primary columns.
double max_pairwise_correlation(const Eigen::MatrixXd& x);

// Alternates operator generation with BART-G.SE screening, then runs
// cross-validated LASSO on the last space and optionally an AIC sweep over
// subsets of size 1..k. Throws NumericalError when the first screening
// selects nothing.
PanResult pan_run(const Eigen::MatrixXd& x0, const Eigen::VectorXd& y,
                  const PanConfig& config, std::span<const Unit> units = {});

}  // namespace ibart
