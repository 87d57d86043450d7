#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of them call into the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

inline Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = z(rng);
  return m;
}

// Asymptotic Kolmogorov tail probability with Stephens' small-sample
// correction.
inline double ks_pvalue(double d, std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  const double lam = (rn + 0.12 + 0.11 / rn) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Leaf-count distribution of a tree grown from depth d under the split
// prior alpha*(1+d)^-beta, truncated at max_leaves.
inline std::vector<double> leaf_pmf(int depth, double alpha, double beta, int max_leaves) {
  std::vector<double> pmf(static_cast<std::size_t>(max_leaves) + 1, 0.0);
  const double ps = alpha * std::pow(1.0 + depth, -beta);
  pmf[1] = 1.0 - ps;
  if (depth > 30) return pmf;
  const auto child = leaf_pmf(depth + 1, alpha, beta, max_leaves);
  for (int a = 1; a <= max_leaves; ++a)
    for (int b = 1; b <= max_leaves; ++b)
      if (a + b <= max_leaves) pmf[static_cast<std::size_t>(a + b)] += ps * child[a] * child[b];
  return pmf;
}

// Does every variable have strictly more than (1-alpha)B permutation values
// at or below m + C s?
inline bool covers(const std::vector<std::vector<double>>& perm, double alpha, double c) {
  const std::size_t b = perm.size(), p = perm[0].size();
  for (std::size_t i = 0; i < p; ++i) {
    double m = 0.0;
    for (const auto& r : perm) m += r[i];
    m /= b;
    double ss = 0.0;
    for (const auto& r : perm) ss += (r[i] - m) * (r[i] - m);
    const double s = std::sqrt(ss / (b - 1));
    std::size_t below = 0;
    for (const auto& r : perm) below += r[i] <= m + c * s + 1e-12;
    if (!(below > (1.0 - alpha) * b)) return false;
  }
  return true;
}

// Smallest covering multiplier by a coarse grid scan followed by bisection.
inline double grid_multiplier(const std::vector<std::vector<double>>& perm, double alpha,
                              double step = 1e-3) {
  double hi = 0.0;
  while (!covers(perm, alpha, hi)) hi += step;
  if (hi == 0.0) return 0.0;
  double lo = hi - step;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (covers(perm, alpha, mid) ? hi : lo) = mid;
  }
  return hi;
}

// Soft-threshold LASSO solution for centered columns with x'x / n = I.
inline double soft_threshold(double z, double lambda) {
  const double a = std::abs(z) - lambda;
  return a > 0 ? std::copysign(a, z) : 0.0;
}

// Exhaustive best subset of size k by AIC: recursive enumeration with an
// explicit intercept column and a QR least-squares solve.
struct Subset {
  std::vector<std::size_t> best;
  double aic = std::numeric_limits<double>::infinity();
};

inline Subset best_subset(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t k) {
  Subset o;
  const double n = static_cast<double>(x.rows());
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (cur.size() == k) {
      Eigen::MatrixXd a(x.rows(), static_cast<Eigen::Index>(k) + 1);
      a.col(0).setOnes();
      for (std::size_t j = 0; j < k; ++j) a.col(j + 1) = x.col(cur[j]);
      const Eigen::VectorXd b = a.householderQr().solve(y);
      const double rss = std::max((y - a * b).squaredNorm(), 1e-12);
      const double v = n * std::log(rss / n) + 2.0 * (k + 1);
      if (v < o.aic) {
        o.aic = v;
        o.best = cur;
      }
      return;
    }
    for (std::size_t j = start; j < static_cast<std::size_t>(x.cols()); ++j) {
      cur.push_back(j);
      rec(j + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return o;
}

}  // namespace oracle
