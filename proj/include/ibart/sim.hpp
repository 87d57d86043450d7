#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ibart/descriptor.hpp"
#include "ibart/pan.hpp"

namespace ibart {

enum class SimKind { kUnaryScreen, kBinaryScreen, kComplex };

std::string sim_kind_name(SimKind k);
SimKind sim_kind_from_name(const std::string& name);

struct SimDesign {
  SimKind kind = SimKind::kComplex;
  std::size_t n = 250;
  std::size_t p = 10;
  double sigma = 0.5;
  OpKind op = OpKind::kIdentity;  // operator under test for screen designs
  std::size_t replicates = 10;
  std::uint64_t seed = 0;

  // y = 10 u(x1) + N(0, 1), n = 200, p = 5.
  static SimDesign unary_screen(OpKind op);
  // y = 10 b(x1, x2) + N(0, 1), n = 200, p = 5, standard normal features.
  static SimDesign binary_screen(OpKind op);
  // y = 15 (exp(x1) - exp(x2))^2 + 20 sin(pi x3 x4) + N(0, sigma^2),
  // U(-1, 1) features.
  static SimDesign complex(std::size_t p = 10);

  std::string label() const;
  void validate() const;
};

// Feature law for a unary screen: operators defined only on positive inputs
// (log, sqrt, reciprocal) draw Lognormal(2, 0.5) features, the rest standard
// normal.
bool uses_lognormal(OpKind op);

struct SimData {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd signal;
  std::vector<std::string> truth;  // canonical strings
};

SimData generate_sim(const SimDesign& design, std::size_t replicate);

struct Score {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Score score_counts(std::size_t tp, std::size_t fp, std::size_t fn);

// Matches by canonical-string equality.
Score score_selection(const std::vector<std::string>& selected,
                      const std::vector<std::string>& truth);

struct ReplicateRow {
  std::string design;
  std::string method;
  std::size_t replicate = 0;
  Score score;
  std::vector<std::string> selected;
  std::size_t max_space = 0;  // largest generated space over iterations
  std::vector<std::size_t> space_sizes;
  std::vector<std::size_t> selected_sizes;
  bool co_selected = false;   // both (x1-x2) and |x1-x2| selected
  double truth_abs_corr = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct MethodSummary {
  std::string design;
  std::string method;
  std::size_t replicates = 0;
  std::size_t full_recovery = 0;  // TP equals the truth size
  double mean_tp = 0.0;
  double mean_fp = 0.0;
  double median_f1 = 0.0;
  std::size_t max_space = 0;
  std::size_t co_selected = 0;
};

std::vector<MethodSummary> summarize(const std::vector<ReplicateRow>& rows);

struct ScreenOptions {
  BartConfig bart = BartConfig::desk();
  GseOptions gse;
};

// One BART-G.SE pass per replicate on the single-layer space (all unary or
// all binary transforms of the primaries).
std::vector<ReplicateRow> run_screen_suite(const SimDesign& design,
                                           const ScreenOptions& options);

// pan_run per replicate; rows for "iBART" (LASSO support) and, when the
// config runs l0, "iBART+l0".
std::vector<ReplicateRow> run_pan_suite(const SimDesign& design, const PanConfig& config);

struct RmseRow {
  std::size_t split = 0;
  std::size_t k = 0;
  double rmse = 0.0;
  std::vector<std::string> descriptors;
};

struct RmseSummary {
  std::size_t k = 0;
  std::size_t splits = 0;
  double mean = 0.0;
  double sd = 0.0;
};

struct RmseTable {
  std::vector<RmseRow> rows;
  std::vector<RmseSummary> summary;  // one per k
};

// Random train/test partitions. On each training part, pan_run selects
// descriptors; for every k in 1..k_max the best size-k least-squares model
// among them (all of them when fewer than k) is scored on the test part.
RmseTable cross_validate_rmse(const Eigen::MatrixXd& x0, const Eigen::VectorXd& y,
                              const PanConfig& config, std::size_t splits = 50,
                              double train_fraction = 0.9, std::size_t k_max = 4,
                              std::span<const Unit> units = {});

}  // namespace ibart
