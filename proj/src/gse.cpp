#include <algorithm>
#include <cmath>
#include <limits>

#include "ibart/error.hpp"
#include "ibart/parallel.hpp"
#include "ibart/random.hpp"
#include "ibart/selectors.hpp"

namespace ibart {

GseThreshold gse_threshold(const std::vector<std::vector<double>>& perm_q,
                           double alpha) {
  const std::size_t b = perm_q.size();
  if (b < 2) throw ValidationError("G.SE needs at least two permutations");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ValidationError("G.SE alpha must lie in (0, 1)");
  const std::size_t p = perm_q.front().size();
  for (const auto& row : perm_q)
    if (row.size() != p) throw ValidationError("permutation rows differ in length");

  GseThreshold t;
  t.mean.assign(p, 0.0);
  t.sd.assign(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    double sum = 0.0;
    for (const auto& row : perm_q) sum += row[i];
    const double m = sum / static_cast<double>(b);
    double ss = 0.0;
    for (const auto& row : perm_q) ss += (row[i] - m) * (row[i] - m);
    t.mean[i] = m;
    t.sd[i] = std::sqrt(ss / static_cast<double>(b - 1));
  }

  // Number of permutation values that must fall at or below the threshold.
  const auto need = static_cast<std::size_t>(
                        std::floor((1.0 - alpha) * static_cast<double>(b) + 1e-9)) +
                    1;
  if (need > b) {
    t.unattainable = true;
    t.multiplier = std::numeric_limits<double>::infinity();
    return t;
  }

  std::vector<double> z(b);
  double c = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    if (t.sd[i] == 0.0) continue;  // q* = m for every b: always covered
    for (std::size_t k = 0; k < b; ++k) z[k] = (perm_q[k][i] - t.mean[i]) / t.sd[i];
    std::nth_element(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(need - 1), z.end());
    c = std::max(c, z[need - 1]);
  }
  t.multiplier = c;
  return t;
}

std::vector<std::size_t> gse_apply(const std::vector<double>& q,
                                   const GseThreshold& t, double multiplier) {
  std::vector<std::size_t> out;
  if (std::isinf(multiplier)) return out;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double bar = t.sd[i] > 0.0 ? t.mean[i] + multiplier * t.sd[i] : t.mean[i];
    if (q[i] > bar) out.push_back(i);
  }
  return out;
}

GseResult gse_select(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const BartConfig& config, const GseOptions& options) {
  if (options.permutations < 2)
    throw ValidationError("G.SE needs at least two permutations");
  config.validate();
  const std::size_t b = options.permutations;
  const auto n = y.size();

  std::vector<std::vector<double>> q(b + 1);
  std::vector<char> no_split(b + 1, 0);
  parallel_for(b + 1, [&](std::size_t task) {
    BartConfig cfg = config;
    Eigen::VectorXd yy = y;
    if (task > 0) {
      const std::uint64_t seed = derive_seed(config.seed, Stream::kPermutation, task - 1);
      cfg.seed = seed;
      Rng rng(seed);
      for (Eigen::Index i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<Eigen::Index> pick(0, i);
        std::swap(yy[i], yy[pick(rng)]);
      }
    }
    auto fit = bart_fit(x, yy, cfg);
    q[task] = std::move(fit.inclusion.q);
    no_split[task] = fit.inclusion.no_split;
  });

  GseResult r;
  r.q = std::move(q[0]);
  r.no_split = no_split[0];
  r.perm_q.assign(std::make_move_iterator(q.begin() + 1),
                  std::make_move_iterator(q.end()));
  r.permutations = b;
  r.alpha = options.alpha;
  const auto t = gse_threshold(r.perm_q, options.alpha);
  r.perm_mean = t.mean;
  r.perm_sd = t.sd;
  r.multiplier = t.multiplier;
  r.unattainable = t.unattainable;
  r.selected = gse_apply(r.q, t, t.multiplier);
  return r;
}

}  // namespace ibart
