#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>

#include "ibart/error.hpp"
#include "ibart/selectors.hpp"

namespace ibart {

namespace {

double choose(std::size_t p, std::size_t k) {
  double c = 1.0;
  for (std::size_t i = 0; i < k; ++i)
    c = c * static_cast<double>(p - i) / static_cast<double>(i + 1);
  return c;
}

bool next_combination(std::vector<std::size_t>& idx, std::size_t p) {
  const std::size_t k = idx.size();
  for (std::size_t i = k; i-- > 0;) {
    if (idx[i] < p - k + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

double aic(double n, double rss, std::size_t k) {
  return n * std::log(std::max(rss, kRssFloor) / n) + 2.0 * static_cast<double>(k + 1);
}

}  // namespace

SubsetResult l0_best_subset(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                            std::size_t k, double budget) {
  if (x.rows() != y.size())
    throw ValidationError("predictor rows and response length differ");
  if (!x.allFinite() || !y.allFinite())
    throw ValidationError("best-subset input contains non-finite values");
  const std::size_t p = static_cast<std::size_t>(x.cols());
  const double n = static_cast<double>(x.rows());
  if (k > p) throw ValidationError("subset size exceeds the number of predictors");
  if (static_cast<double>(k + 1) >= n)
    throw ValidationError("subset size leaves no residual degrees of freedom");
  if (choose(p, k) > budget)
    throw ValidationError("best-subset search over " + std::to_string(p) +
                          " predictors exceeds the budget; pre-screen first");

  const Eigen::RowVectorXd xmean = x.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - xmean;
  const double ymean = y.mean();
  const Eigen::VectorXd yc = y.array() - ymean;
  const Eigen::MatrixXd gram = xc.transpose() * xc;
  const Eigen::VectorXd cross = xc.transpose() * yc;

  SubsetResult best;
  best.aic = std::numeric_limits<double>::infinity();
  if (k == 0) {
    best.rss = yc.squaredNorm();
    best.aic = aic(n, best.rss, 0);
    best.intercept = ymean;
    best.evaluated = 1;
    return best;
  }

  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  Eigen::MatrixXd g(k, k);
  Eigen::VectorXd c(k);
  Eigen::MatrixXd cols(x.rows(), static_cast<Eigen::Index>(k));
  std::size_t evaluated = 0, deficient = 0;
  do {
    double scale = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      c[a] = cross[idx[a]];
      for (std::size_t b = 0; b < k; ++b) g(a, b) = gram(idx[a], idx[b]);
      scale = std::max(scale, g(a, a));
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    const auto d = ldlt.vectorD();
    if (scale == 0.0 || ldlt.info() != Eigen::Success ||
        d.minCoeff() <= 1e-10 * scale) {
      ++deficient;
      continue;
    }
    const Eigen::VectorXd b = ldlt.solve(c);
    for (std::size_t a = 0; a < k; ++a) cols.col(a) = xc.col(idx[a]);
    const double rss = (yc - cols * b).squaredNorm();
    ++evaluated;
    const double score = aic(n, rss, k);
    if (score < best.aic) {
      best.aic = score;
      best.rss = rss;
      best.indices = idx;
      best.coefficients = b;
    }
  } while (next_combination(idx, p));

  if (deficient > 0)
    spdlog::info("best subset: skipped {} rank-deficient subsets of size {}", deficient, k);
  if (best.indices.empty())
    throw NumericalError("every subset of size " + std::to_string(k) + " is rank deficient");
  best.evaluated = evaluated;
  best.rank_deficient = deficient;
  best.intercept = ymean;
  for (std::size_t a = 0; a < k; ++a)
    best.intercept -= best.coefficients[a] * xmean[best.indices[a]];
  return best;
}

SubsetSweep select_k_sweep(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           std::size_t k_max, double budget) {
  if (k_max == 0) throw ValidationError("subset sweep needs k_max >= 1");
  SubsetSweep s;
  for (std::size_t k = 1; k <= k_max; ++k) {
    s.per_k.push_back(l0_best_subset(x, y, k, budget));
    if (s.per_k.back().aic < s.per_k[s.best].aic) s.best = k - 1;
  }
  return s;
}

}  // namespace ibart
