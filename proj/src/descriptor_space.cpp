#include "ibart/descriptor_space.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "ibart/error.hpp"

namespace ibart {

DescriptorSpace DescriptorSpace::from_primaries(const Eigen::MatrixXd& data,
                                                std::span<const Unit> units) {
  if (!units.empty() && units.size() != static_cast<std::size_t>(data.cols()))
    throw ValidationError("unit count does not match feature count");
  DescriptorSpace space(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const auto idx = static_cast<std::size_t>(j);
    space.append(Descriptor::leaf(idx, units.empty() ? Unit{} : units[idx]),
                 data.col(j), 0);
  }
  return space;
}

void DescriptorSpace::append(Descriptor d, Eigen::VectorXd column, int origin) {
  if (descriptors_.empty() && rows_ == 0) rows_ = static_cast<std::size_t>(column.size());
  if (static_cast<std::size_t>(column.size()) != rows_)
    throw ValidationError("column for " + d.str() + " has " +
                          std::to_string(column.size()) + " rows, expected " +
                          std::to_string(rows_));
  if (!column.allFinite())
    throw ValidationError("column for " + d.str() + " is not finite");
  descriptors_.push_back(std::move(d));
  columns_.push_back(std::move(column));
  origins_.push_back(origin);
}

std::size_t DescriptorSpace::find(const std::string& s) const {
  for (std::size_t i = 0; i < descriptors_.size(); ++i)
    if (descriptors_[i].str() == s) return i;
  return descriptors_.size();
}

Eigen::MatrixXd DescriptorSpace::matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows_),
                    static_cast<Eigen::Index>(columns_.size()));
  for (std::size_t j = 0; j < columns_.size(); ++j)
    m.col(static_cast<Eigen::Index>(j)) = columns_[j];
  return m;
}

DescriptorSpace DescriptorSpace::subset(
    std::span<const std::size_t> indices) const {
  DescriptorSpace out(rows_);
  for (std::size_t i : indices)
    out.append(descriptors_.at(i), columns_.at(i), origins_.at(i));
  return out;
}

double abs_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double na = ca.norm(), nb = cb.norm();
  if (na <= 1e-12 * a.norm() || nb <= 1e-12 * b.norm() || na == 0.0 ||
      nb == 0.0)
    return 0.0;
  return std::min(1.0, std::abs(ca.dot(cb)) / (na * nb));
}

namespace {

// Online greedy deduplication. Candidates must be offered in priority order.
class Deduper {
 public:
  enum class Verdict { kKept, kConstant, kCorrelated };

  explicit Deduper(double threshold) : threshold_(threshold) {}

  Verdict offer(const Descriptor& d, const Eigen::VectorXd& col) {
    if (names_.contains(d.str())) return Verdict::kCorrelated;
    Eigen::VectorXd c = col.array() - col.mean();
    const double norm = c.norm();
    if (norm == 0.0 || norm <= 1e-12 * col.norm()) {
      spdlog::info("dropping constant descriptor {}", d.str());
      return Verdict::kConstant;
    }
    c /= norm;
    for (const auto& k : kept_)
      if (std::abs(k.dot(c)) >= threshold_) return Verdict::kCorrelated;
    kept_.push_back(std::move(c));
    names_.insert(d.str());
    return Verdict::kKept;
  }

 private:
  double threshold_;
  std::vector<Eigen::VectorXd> kept_;
  std::unordered_set<std::string> names_;
};

// A candidate descriptor whose column is produced from already evaluated
// parent columns.
struct Candidate {
  Descriptor d;
  OpKind op;
  std::size_t a;
  std::size_t b;  // == a for unary candidates
};

DescriptorSpace realize(const DescriptorSpace& parents,
                        std::vector<Candidate> candidates,
                        const GenerationOptions& options,
                        GenerationReport* report) {
  GenerationReport rep;
  rep.candidates = candidates.size();

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return candidates[x].d.complexity() < candidates[y].d.complexity();
  });

  const EvalOptions eval{options.magnitude_cap};
  Deduper deduper(options.dedup_threshold);
  std::vector<std::pair<std::size_t, Eigen::VectorXd>> kept;
  for (std::size_t idx : order) {
    const Candidate& c = candidates[idx];
    if (options.unit_filter && !c.d.unit()) {
      ++rep.unit_dropped;
      continue;
    }
    std::optional<Eigen::VectorXd> col;
    if (c.op == OpKind::kIdentity) {
      col = parents.column(c.a);
    } else if (arity(c.op) == 1) {
      col = apply_columns(c.op, parents.column(c.a), nullptr, eval);
    } else {
      col = apply_columns(c.op, parents.column(c.a), &parents.column(c.b), eval);
    }
    if (!col) {
      ++rep.domain_dropped;
      continue;
    }
    ++rep.pre_dedup;
    if (options.dedup) {
      const auto verdict = deduper.offer(c.d, *col);
      if (verdict == Deduper::Verdict::kConstant) {
        ++rep.constant_dropped;
        continue;
      }
      if (verdict == Deduper::Verdict::kCorrelated) {
        ++rep.dedup_dropped;
        continue;
      }
    }
    kept.emplace_back(idx, *std::move(col));
  }
  std::sort(kept.begin(), kept.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  DescriptorSpace out(parents.rows());
  for (auto& [idx, col] : kept) {
    const Candidate& c = candidates[idx];
    const int origin =
        c.op == OpKind::kIdentity ? parents.origin(c.a) : options.origin;
    out.append(c.d, std::move(col), origin);
  }
  rep.retained = out.size();
  if (report) *report = rep;
  return out;
}

std::vector<OpKind> non_identity(std::span<const OpKind> ops, int want_arity) {
  std::vector<OpKind> out;
  for (OpKind op : ops) {
    if (op == OpKind::kIdentity) continue;
    if (arity(op) != want_arity)
      throw ValidationError("operator '" + std::string(op_name(op)) +
                            "' has the wrong arity for this generation step");
    if (std::find(out.begin(), out.end(), op) == out.end()) out.push_back(op);
  }
  return out;
}

}  // namespace

DescriptorSpace dedup(const DescriptorSpace& space, double threshold,
                      DedupStats* stats) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw ValidationError("dedup threshold must lie in (0, 1]");
  std::vector<std::size_t> order(space.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return space.descriptor(x).complexity() < space.descriptor(y).complexity();
  });
  Deduper deduper(threshold);
  DedupStats st;
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    switch (deduper.offer(space.descriptor(i), space.column(i))) {
      case Deduper::Verdict::kKept: kept.push_back(i); break;
      case Deduper::Verdict::kConstant: ++st.constant_dropped; break;
      case Deduper::Verdict::kCorrelated: ++st.correlated_dropped; break;
    }
  }
  std::sort(kept.begin(), kept.end());
  if (stats) *stats = st;
  return space.subset(kept);
}

DescriptorSpace unit_filter(const DescriptorSpace& space, std::size_t* removed) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space.descriptor(i).unit()) kept.push_back(i);
  if (removed) *removed = space.size() - kept.size();
  return space.subset(kept);
}

DescriptorSpace generate_unary(const DescriptorSpace& space,
                               std::span<const OpKind> ops,
                               const GenerationOptions& options,
                               GenerationReport* report) {
  if (space.empty()) throw ValidationError("generate_unary: empty input space");
  const auto unary_ops = non_identity(ops, 1);
  std::vector<Candidate> candidates;
  candidates.reserve(space.size() * (unary_ops.size() + 1));
  for (std::size_t i = 0; i < space.size(); ++i) {
    candidates.push_back({space.descriptor(i), OpKind::kIdentity, i, i});
    for (OpKind op : unary_ops)
      candidates.push_back({Descriptor::unary(op, space.descriptor(i)), op, i, i});
  }
  return realize(space, std::move(candidates), options, report);
}

DescriptorSpace generate_binary(const DescriptorSpace& space,
                                std::span<const OpKind> ops,
                                const GenerationOptions& options,
                                GenerationReport* report) {
  const auto binary_ops = non_identity(ops, 2);
  if (space.empty()) throw ValidationError("generate_binary: empty input space");
  if (!binary_ops.empty() && space.size() < 2)
    throw ValidationError("generate_binary: needs at least two descriptors");
  const std::size_t p = space.size();
  std::vector<Candidate> candidates;
  candidates.reserve(p + binary_ops.size() * p * (p - 1) / 2);
  for (std::size_t i = 0; i < p; ++i)
    candidates.push_back({space.descriptor(i), OpKind::kIdentity, i, i});
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      std::size_t a = i, b = j;
      if (natural_less(space.descriptor(j).str(), space.descriptor(i).str()))
        std::swap(a, b);
      for (OpKind op : binary_ops)
        candidates.push_back({Descriptor::binary(op, space.descriptor(a),
                                                 space.descriptor(b)),
                              op, a, b});
    }
  }
  return realize(space, std::move(candidates), options, report);
}

}  // namespace ibart
