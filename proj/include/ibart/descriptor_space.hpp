#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ibart/descriptor.hpp"

namespace ibart {

// Ordered descriptors with their evaluated columns. Every column is finite
// and has the same number of rows. origin(i) records the pipeline iteration
// that produced descriptor i.
class DescriptorSpace {
 public:
  DescriptorSpace() = default;
  explicit DescriptorSpace(std::size_t rows) : rows_(rows) {}

  // One leaf per column of data. units may be empty (all dimensionless).
  static DescriptorSpace from_primaries(const Eigen::MatrixXd& data,
                                        std::span<const Unit> units = {});

  // Throws ValidationError on a row-count mismatch or a non-finite entry.
  void append(Descriptor d, Eigen::VectorXd column, int origin = 0);

  std::size_t size() const { return descriptors_.size(); }
  bool empty() const { return descriptors_.empty(); }
  std::size_t rows() const { return rows_; }

  const Descriptor& descriptor(std::size_t i) const { return descriptors_[i]; }
  const Eigen::VectorXd& column(std::size_t i) const { return columns_[i]; }
  int origin(std::size_t i) const { return origins_[i]; }
  const std::vector<Descriptor>& descriptors() const { return descriptors_; }

  // Index of the descriptor with canonical string s, or size() if absent.
  std::size_t find(const std::string& s) const;

  // Columns packed into an n x size() matrix.
  Eigen::MatrixXd matrix() const;

  DescriptorSpace subset(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::vector<Descriptor> descriptors_;
  std::vector<Eigen::VectorXd> columns_;
  std::vector<int> origins_;
};

inline constexpr double kDefaultDedupThreshold = 1.0 - 1e-10;

struct DedupStats {
  std::size_t constant_dropped = 0;
  std::size_t correlated_dropped = 0;
};

// Keeps one representative of every group of columns whose absolute Pearson
// correlation reaches threshold. Lower complexity wins, then earlier position.
// Zero-variance columns are dropped. Survivors keep their relative order.
DescriptorSpace dedup(const DescriptorSpace& space,
                      double threshold = kDefaultDedupThreshold,
                      DedupStats* stats = nullptr);

// Removes descriptors whose construction breaks a unit rule.
DescriptorSpace unit_filter(const DescriptorSpace& space,
                            std::size_t* removed = nullptr);

struct GenerationOptions {
  bool dedup = true;
  double dedup_threshold = kDefaultDedupThreshold;
  bool unit_filter = true;
  double magnitude_cap = 1e8;
  int origin = 0;
};

// Counts for one generation step. pre_dedup = candidates minus domain and
// unit drops; retained = pre_dedup minus constant and correlated drops.
struct GenerationReport {
  std::size_t candidates = 0;
  std::size_t domain_dropped = 0;
  std::size_t unit_dropped = 0;
  std::size_t pre_dedup = 0;
  std::size_t constant_dropped = 0;
  std::size_t dedup_dropped = 0;
  std::size_t retained = 0;
};

// Identity copy of each input plus every unary transform of it.
DescriptorSpace generate_unary(const DescriptorSpace& space,
                               std::span<const OpKind> ops,
                               const GenerationOptions& options = {},
                               GenerationReport* report = nullptr);

// Identity copies of all inputs plus op(d_i, d_j) for each unordered pair
// and each binary op. For non-commutative operators the orientation puts the
// naturally smaller canonical string on the left.
DescriptorSpace generate_binary(const DescriptorSpace& space,
                                std::span<const OpKind> ops,
                                const GenerationOptions& options = {},
                                GenerationReport* report = nullptr);

// Absolute Pearson correlation; 0 when either column is constant.
double abs_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace ibart
