#include <algorithm>
#include <cmath>
#include <numeric>

#include "ibart/error.hpp"
#include "ibart/parallel.hpp"
#include "ibart/random.hpp"
#include "ibart/selectors.hpp"

namespace ibart {

namespace {

constexpr double kKktSlack = 1e-9;
constexpr long kMaxSweeps = 100000;

struct Standardized {
  Eigen::MatrixXd z;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;  // zero marks a constant column
  Eigen::VectorXd yc;
  double ymean = 0.0;
};

Standardized standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(x.rows());
  Standardized s;
  s.mean = x.colwise().mean().transpose();
  s.z = x.rowwise() - s.mean.transpose();
  s.sd = (s.z.colwise().squaredNorm() / n).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    // Columns that are constant up to rounding carry no signal.
    if (s.sd[j] <= 1e-12 * std::max(1.0, std::abs(s.mean[j]))) s.sd[j] = 0.0;
    if (s.sd[j] > 0.0)
      s.z.col(j) /= s.sd[j];
    else
      s.z.col(j).setZero();
  }
  s.ymean = y.mean();
  s.yc = y.array() - s.ymean;
  return s;
}

double soft(double v, double lambda) {
  if (v > lambda) return v - lambda;
  if (v < -lambda) return v + lambda;
  return 0.0;
}

// Coordinate descent on standardized data from a warm start. Alternates
// sweeps over the active set with full sweeps until a full sweep changes
// nothing beyond tolerance and the optimality conditions hold. Converged
// when every squared coefficient update is below tolerance * Var(y).
void coordinate_descent(const Standardized& s, double lambda, double tolerance,
                        Eigen::VectorXd& beta, Eigen::VectorXd& resid) {
  const Eigen::Index p = s.z.cols();
  const double n = static_cast<double>(s.z.rows());
  const double ysd = std::sqrt(s.yc.squaredNorm() / n);
  const double tol = std::sqrt(tolerance) * (ysd > 0.0 ? ysd : 1.0);
  const double slack = kKktSlack + tol;

  auto update = [&](Eigen::Index j) {
    if (s.sd[j] == 0.0) return 0.0;
    const double old = beta[j];
    const double rho = s.z.col(j).dot(resid) / n + old;
    const double next = soft(rho, lambda);
    if (next == old) return 0.0;
    resid -= (next - old) * s.z.col(j);
    beta[j] = next;
    return std::abs(next - old);
  };

  long sweeps = 0;
  while (sweeps < kMaxSweeps) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) change = std::max(change, update(j));
    ++sweeps;
    if (change < tol) {
      bool ok = true;
      for (Eigen::Index j = 0; j < p && ok; ++j) {
        if (s.sd[j] == 0.0) continue;
        const double g = s.z.col(j).dot(resid) / n;
        ok = beta[j] == 0.0 ? std::abs(g) <= lambda + slack
                            : std::abs(g - std::copysign(lambda, beta[j])) <= slack;
      }
      if (ok) return;
    }
    while (sweeps < kMaxSweeps) {
      double c = 0.0;
      for (Eigen::Index j = 0; j < p; ++j)
        if (beta[j] != 0.0) c = std::max(c, update(j));
      ++sweeps;
      if (c < tol) break;
    }
  }
  throw NumericalError("LASSO coordinate descent did not converge");
}

LassoFit restore(const Standardized& s, const Eigen::VectorXd& beta, double lambda) {
  LassoFit f;
  f.lambda = lambda;
  f.coefficients = Eigen::VectorXd::Zero(beta.size());
  f.intercept = s.ymean;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta[j] == 0.0) continue;
    f.coefficients[j] = beta[j] / s.sd[j];
    f.intercept -= f.coefficients[j] * s.mean[j];
    f.support.push_back(static_cast<std::size_t>(j));
  }
  return f;
}

std::vector<LassoFit> lasso_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const std::vector<double>& lambdas, double tolerance) {
  const auto s = standardize(x, y);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd resid = s.yc;
  std::vector<LassoFit> out;
  out.reserve(lambdas.size());
  for (double l : lambdas) {
    coordinate_descent(s, l, tolerance, beta, resid);
    out.push_back(restore(s, beta, l));
  }
  return out;
}

void check_inputs(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size())
    throw ValidationError("predictor rows and response length differ");
  if (x.rows() < 2) throw ValidationError("LASSO needs at least two rows");
  if (!x.allFinite() || !y.allFinite())
    throw ValidationError("LASSO input contains non-finite values");
}

}  // namespace

double lasso_lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  check_inputs(x, y);
  const auto s = standardize(x, y);
  if (x.cols() == 0) return 0.0;
  return (s.z.transpose() * s.yc).cwiseAbs().maxCoeff() / static_cast<double>(x.rows());
}

LassoFit lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   double lambda, double tolerance) {
  check_inputs(x, y);
  if (!(lambda >= 0.0)) throw ValidationError("LASSO lambda must be non-negative");
  return lasso_path(x, y, {lambda}, tolerance).front();
}

LassoResult lasso_cv(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const LassoOptions& options) {
  check_inputs(x, y);
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t folds = options.folds;
  if (folds < 2) throw ValidationError("LASSO cross validation needs at least two folds");
  if (n < folds) throw ValidationError("fewer rows than cross-validation folds");
  if (options.path_length == 0) throw ValidationError("LASSO path must be non-empty");

  LassoResult r;
  const double lmax = lasso_lambda_max(x, y);
  if (lmax == 0.0) {
    r.lambdas = {0.0};
  } else {
    const std::size_t len = options.path_length;
    const double step =
        len > 1 ? std::log(options.min_ratio) / static_cast<double>(len - 1) : 0.0;
    for (std::size_t i = 0; i < len; ++i)
      r.lambdas.push_back(lmax * std::exp(step * static_cast<double>(i)));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), make_rng(options.seed, Stream::kFold, 0));
  std::vector<std::size_t> fold_of(n);
  for (std::size_t k = 0; k < n; ++k) fold_of[order[k]] = k % folds;

  std::vector<std::vector<double>> sse(folds);
  parallel_for(folds, [&](std::size_t f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < n; ++i)
      (fold_of[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    const Eigen::MatrixXd xt = x(train, Eigen::all);
    const Eigen::VectorXd yt = y(train);
    const Eigen::MatrixXd xv = x(test, Eigen::all);
    const Eigen::VectorXd yv = y(test);
    const auto path = lasso_path(xt, yt, r.lambdas, options.tolerance);
    sse[f].resize(path.size());
    for (std::size_t l = 0; l < path.size(); ++l) {
      const Eigen::VectorXd pred =
          (xv * path[l].coefficients).array() + path[l].intercept;
      sse[f][l] = (yv - pred).squaredNorm();
    }
  });

  r.cv_error.assign(r.lambdas.size(), 0.0);
  for (std::size_t l = 0; l < r.lambdas.size(); ++l) {
    for (std::size_t f = 0; f < folds; ++f) r.cv_error[l] += sse[f][l];
    r.cv_error[l] /= static_cast<double>(n);
  }
  r.chosen = static_cast<std::size_t>(
      std::min_element(r.cv_error.begin(), r.cv_error.end()) - r.cv_error.begin());
  const std::vector<double> prefix(r.lambdas.begin(),
                                   r.lambdas.begin() + static_cast<std::ptrdiff_t>(r.chosen) + 1);
  r.fit = lasso_path(x, y, prefix, options.tolerance).back();
  return r;
}

}  // namespace ibart
