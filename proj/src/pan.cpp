#include "ibart/pan.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <unordered_set>

#include "ibart/error.hpp"
#include "ibart/random.hpp"

namespace ibart {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kAuto: return "auto";
    case Scheme::kUnaryFirst: return "unary-first";
    case Scheme::kBinaryFirst: return "binary-first";
  }
  return "auto";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "auto") return Scheme::kAuto;
  if (name == "unary-first" || name == "unary") return Scheme::kUnaryFirst;
  if (name == "binary-first" || name == "binary") return Scheme::kBinaryFirst;
  throw ValidationError("unknown scheme '" + name + "'");
}

void PanConfig::validate() const {
  if (!(rho_max > 0.0 && rho_max < 1.0))
    throw ValidationError("rho_max must lie in (0, 1)");
  if (run_l0 && k == 0) throw ValidationError("k must be positive when l0 runs");
  if (lasso_folds < 2) throw ValidationError("LASSO needs at least two folds");
  if (!(dedup_threshold > 0.0 && dedup_threshold <= 1.0))
    throw ValidationError("dedup threshold must lie in (0, 1]");
  for (OpKind op : unary_ops)
    if (arity(op) != 1 && op != OpKind::kIdentity)
      throw ValidationError("binary operator in the unary set");
  for (OpKind op : binary_ops)
    if (arity(op) != 2 && op != OpKind::kIdentity)
      throw ValidationError("unary operator in the binary set");
  bart.validate();
}

CorrelationScan correlation_scan(const DescriptorSpace& space, const Eigen::VectorXd& y) {
  if (space.empty()) throw ValidationError("correlation scan of an empty space");
  CorrelationScan best;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double r = abs_correlation(space.column(i), y);
    if (r > best.rho) {
      best.rho = r;
      best.index = i;
    }
  }
  return best;
}

double max_pairwise_correlation(const Eigen::MatrixXd& x) {
  double best = 0.0;
  for (Eigen::Index a = 0; a < x.cols(); ++a)
    for (Eigen::Index b = a + 1; b < x.cols(); ++b)
      best = std::max(best, abs_correlation(x.col(a), x.col(b)));
  return best;
}

PanResult pan_run(const Eigen::MatrixXd& x0, const Eigen::VectorXd& y,
                  const PanConfig& config, std::span<const Unit> units) {
  config.validate();
  if (x0.rows() != y.size())
    throw ValidationError("feature rows and response length differ");
  if (x0.rows() < 10) throw ValidationError("need at least 10 rows");
  if (x0.cols() < 1) throw ValidationError("need at least one primary feature");
  if (!x0.allFinite() || !y.allFinite())
    throw ValidationError("input contains non-finite values");

  const auto t_start = Clock::now();
  PanResult out;
  out.scheme = config.scheme;
  if (out.scheme == Scheme::kAuto)
    out.scheme = max_pairwise_correlation(x0) > 0.9 ? Scheme::kBinaryFirst
                                                    : Scheme::kUnaryFirst;

  GenerationOptions gen;
  gen.dedup_threshold = config.dedup_threshold;
  gen.unit_filter = config.unit_filter;
  gen.magnitude_cap = config.magnitude_cap;

  DescriptorSpace space = DescriptorSpace::from_primaries(x0, units);
  DescriptorSpace selected_union(space.rows());
  std::unordered_set<std::string> in_union;

  out.initial_rho = correlation_scan(space, y).rho;
  double rho = out.initial_rho;
  out.stop = StopReason::kMaxIterations;
  std::size_t m = 0;
  while (m < config.max_iterations && rho < config.rho_max) {
    const auto t_iter = Clock::now();
    IterationAudit a;
    a.iteration = m;
    a.screened = space.size();

    BartConfig bart = config.bart;
    bart.seed = derive_seed(config.seed, Stream::kIteration, m);
    const auto gse = gse_select(space.matrix(), y, bart, config.gse);
    a.selected = gse.selected.size();
    a.multiplier = gse.multiplier;
    if (gse.selected.empty()) {
      if (m == 0)
        throw NumericalError("no signal: BART-G.SE selected nothing from the primary features");
      spdlog::warn("iteration {}: empty selection, carrying the previous union forward", m);
      a.carried_forward = true;
    }
    for (std::size_t i : gse.selected) {
      const Descriptor& d = space.descriptor(i);
      a.selected_descriptors.push_back(d.str());
      if (in_union.insert(d.str()).second)
        selected_union.append(d, space.column(i), space.origin(i));
    }
    a.union_size = selected_union.size();

    const bool unary = (m % 2 == 0) == (out.scheme == Scheme::kUnaryFirst);
    a.operators = unary ? "unary" : "binary";
    gen.origin = static_cast<int>(m + 1);
    if (unary) {
      space = generate_unary(selected_union, config.unary_ops, gen, &a.generation);
    } else if (selected_union.size() < 2) {
      // No pairs to combine: the identity carries the union over unchanged.
      space = generate_unary(selected_union, std::vector<OpKind>{}, gen, &a.generation);
    } else {
      space = generate_binary(selected_union, config.binary_ops, gen, &a.generation);
    }
    a.generated = space.size();
    ++m;
    rho = correlation_scan(space, y).rho;
    a.rho = rho;
    a.seconds = since(t_iter);
    spdlog::info("iteration {}: screened {}, selected {}, union {}, generated {} ({}), rho {:.4f}",
                 a.iteration, a.screened, a.selected, a.union_size, a.generated,
                 a.operators, rho);
    out.audit.push_back(std::move(a));
  }
  if (rho >= config.rho_max) out.stop = StopReason::kCorrelation;
  out.iterations = m;
  out.final_rho = rho;

  LassoOptions lo;
  lo.folds = config.lasso_folds;
  lo.seed = derive_seed(config.seed, Stream::kFold, 0);
  const Eigen::MatrixXd xm = space.matrix();
  out.lasso = lasso_cv(xm, y, lo);
  for (std::size_t j : out.lasso.fit.support)
    out.lasso_selected.push_back(space.descriptor(j));

  const auto& support = out.lasso.fit.support;
  if (config.run_l0 && support.size() > config.k) {
    const Eigen::MatrixXd xs = xm(Eigen::all, std::vector<Eigen::Index>(support.begin(), support.end()));
    out.l0 = select_k_sweep(xs, y, config.k, config.subset_budget);
    const SubsetResult& best = out.l0->per_k[out.l0->best];
    for (std::size_t j : best.indices) out.selected.push_back(out.lasso_selected[j]);
    out.intercept = best.intercept;
    out.coefficients = best.coefficients;
  } else {
    out.selected = out.lasso_selected;
    out.intercept = out.lasso.fit.intercept;
    out.coefficients.resize(static_cast<Eigen::Index>(support.size()));
    for (std::size_t j = 0; j < support.size(); ++j)
      out.coefficients[static_cast<Eigen::Index>(j)] = out.lasso.fit.coefficients[support[j]];
  }
  out.final_space = std::move(space);
  out.seconds = since(t_start);
  return out;
}

}  // namespace ibart
