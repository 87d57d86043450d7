// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any gating criterion fails.

#include <CLI11.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <numeric>
#include <set>

#include "ibart/bart.hpp"
#include "ibart/descriptor_space.hpp"
#include "ibart/io.hpp"
#include "ibart/json.hpp"
#include "ibart/parallel.hpp"
#include "ibart/selectors.hpp"
#include "ibart/sim.hpp"
#include "oracles.hpp"

using namespace ibart;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
  Json details = Json::object();
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string ratio(std::size_t a, std::size_t b) { return std::to_string(a) + "/" + std::to_string(b); }

std::uint64_t g_seed = 20240101;

// ---------------------------------------------------------------------------

Outcome screening(SimKind kind) {
  const auto ops = kind == SimKind::kUnaryScreen ? all_unary_ops() : all_binary_ops();
  Outcome o;
  o.pass = true;
  std::string per_op;
  std::size_t co_selected = 0, co_reps = 0;
  double corr_sum = 0.0;
  for (OpKind op : ops) {
    SimDesign d = kind == SimKind::kUnaryScreen ? SimDesign::unary_screen(op) : SimDesign::binary_screen(op);
    d.replicates = 10;
    d.seed = g_seed;
    const auto rows = run_screen_suite(d, ScreenOptions{});
    std::size_t hits = 0;
    Json reps = Json::array();
    for (const auto& r : rows) {
      hits += r.score.tp == 1;
      reps.push_back({{"tp", r.score.tp}, {"fp", r.score.fp}, {"selected", r.selected}});
      if (op == OpKind::kSubtract) {
        co_selected += r.co_selected;
        ++co_reps;
        corr_sum += r.truth_abs_corr;
      }
    }
    o.pass = o.pass && hits >= 9;
    per_op += std::string(per_op.empty() ? "" : " ") + std::string(op_name(op)) + "=" + ratio(hits, rows.size());
    o.details[std::string(op_name(op))] = {{"tp_one", hits}, {"replicates", rows.size()}, {"rows", reps}};
  }
  o.summary = "TP=1 per operator: " + per_op;
  if (kind == SimKind::kBinaryScreen) {
    o.summary += "; (x1-x2)/|x1-x2| co-selected " + ratio(co_selected, co_reps) +
                 " (reported), mean |corr| " + fmt(corr_sum / static_cast<double>(co_reps));
    o.details["co_selected"] = co_selected;
  }
  return o;
}

PanConfig complex_config() {
  PanConfig c;
  c.scheme = Scheme::kUnaryFirst;
  c.max_iterations = 3;
  c.run_l0 = true;
  c.k = 4;
  c.bart = BartConfig::desk();
  return c;
}

struct ComplexRun {
  std::vector<ReplicateRow> rows;
  std::size_t full_l0 = 0, full_lasso = 0, replicates = 0;
  double median_f1 = 0.0;
  std::size_t max_space = 0;
};

ComplexRun run_complex(std::size_t p, std::size_t replicates) {
  SimDesign d = SimDesign::complex(p);
  d.replicates = replicates;
  d.seed = g_seed;
  ComplexRun r;
  r.rows = run_pan_suite(d, complex_config());
  r.replicates = replicates;
  for (const auto& s : summarize(r.rows)) {
    if (s.method == "iBART+l0") {
      r.full_l0 = s.full_recovery;
      r.median_f1 = s.median_f1;
    } else if (s.method == "iBART") {
      r.full_lasso = s.full_recovery;
    }
  }
  for (const auto& row : r.rows) r.max_space = std::max(r.max_space, row.max_space);
  return r;
}

Json rows_json(const std::vector<ReplicateRow>& rows) {
  Json a = Json::array();
  for (const auto& r : rows)
    a.push_back({{"method", r.method},
                 {"replicate", r.replicate},
                 {"tp", r.score.tp},
                 {"fp", r.score.fp},
                 {"f1", r.score.f1},
                 {"space_sizes", r.space_sizes},
                 {"selected", r.selected}});
  return a;
}

Outcome criterion3(const ComplexRun& r) {
  Outcome o;
  o.pass = r.full_l0 >= 8 && r.median_f1 >= 0.8;
  o.summary = "TP=2 (iBART+l0) " + ratio(r.full_l0, r.replicates) + ", TP=2 (LASSO support) " +
              ratio(r.full_lasso, r.replicates) + ", median F1 (iBART+l0) " + fmt(r.median_f1);
  o.details["rows"] = rows_json(r.rows);
  return o;
}

Outcome criterion4(const ComplexRun& r) {
  Outcome o;
  o.pass = r.max_space <= 500;
  std::string sizes;
  for (const auto& row : r.rows) {
    if (row.method != "iBART") continue;
    std::string s;
    for (std::size_t v : row.space_sizes) s += (s.empty() ? "" : ",") + std::to_string(v);
    sizes += (sizes.empty() ? "" : " ") + s;
  }
  o.summary = "largest generated space " + std::to_string(r.max_space) + " (limit 500); per replicate " + sizes;
  return o;
}

Outcome criterion5() {
  const ComplexRun r = run_complex(50, 3);
  Outcome o;
  o.pass = r.full_l0 >= 2 && r.max_space <= 5000;
  o.summary = "p=50: TP=2 (iBART+l0) " + ratio(r.full_l0, 3) + ", TP=2 (LASSO support) " +
              ratio(r.full_lasso, 3) + ", largest generated space " + std::to_string(r.max_space) +
              " (limit 5000)";
  o.details["rows"] = rows_json(r.rows);
  return o;
}

// ---------------------------------------------------------------------------

Outcome criterion6() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(g_seed);
  // Every unary operator is defined and below the magnitude cap on [0.5, 2].
  std::uniform_real_distribution<double> pos_law(0.5, 2.0);
  std::normal_distribution<double> z;
  Eigen::MatrixXd pos(200, 5), nrm(200, 5);
  for (Eigen::Index i = 0; i < pos.size(); ++i) {
    pos.data()[i] = pos_law(rng);
    nrm.data()[i] = z(rng);
  }
  GenerationOptions opt;
  opt.dedup = false;
  GenerationReport ur, br;
  const auto unary = generate_unary(DescriptorSpace::from_primaries(pos), all_unary_ops(), opt, &ur);
  const auto binary = generate_binary(DescriptorSpace::from_primaries(nrm), all_binary_ops(), opt, &br);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Outcome o;
  o.pass = ur.pre_dedup == 45 && unary.size() == 45 && br.pre_dedup == 55 && binary.size() == 55 &&
           secs < 1.0;
  o.summary = "unary " + std::to_string(ur.pre_dedup) + " of " + std::to_string(ur.candidates) +
              " candidates (expect 45), binary " + std::to_string(br.pre_dedup) + " of " +
              std::to_string(br.candidates) + " (expect 55), " + fmt(secs, 4) + " s";
  return o;
}

Outcome criterion7() {
  // LASSO against soft thresholding on orthonormal designs.
  double lasso_err = 0.0;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const Eigen::Index n = 50 + 10 * static_cast<Eigen::Index>(rep), p = 3 + static_cast<Eigen::Index>(rep % 6);
    Eigen::MatrixXd raw = oracle::gaussian(n, p, g_seed + rep);
    raw.rowwise() -= raw.colwise().mean();
    Eigen::MatrixXd x = raw.householderQr().householderQ() * Eigen::MatrixXd::Identity(n, p);
    x *= std::sqrt(static_cast<double>(n));
    x.rowwise() -= x.colwise().mean();
    const Eigen::VectorXd y = x * Eigen::VectorXd::LinSpaced(p, -2.0, 1.5) +
                              0.4 * oracle::gaussian(n, 1, g_seed + 100 + rep).col(0);
    const Eigen::VectorXd z = x.transpose() * (y.array() - y.mean()).matrix() / static_cast<double>(n);
    for (double lambda : {0.0, 0.02, 0.1, 0.5, 1.0, 3.0}) {
      const auto f = lasso_fit(x, y, lambda);
      for (Eigen::Index j = 0; j < p; ++j)
        lasso_err = std::max(lasso_err, std::abs(f.coefficients[j] - oracle::soft_threshold(z[j], lambda)));
    }
  }

  // l0 against exhaustive search.
  std::size_t l0_match = 0;
  std::mt19937_64 rng(g_seed + 7);
  for (int inst = 0; inst < 50; ++inst) {
    std::size_t p, k;
    do {
      p = 4 + rng() % 17;
      k = 1 + rng() % 4;
    } while (k > p || std::lround(std::tgamma(p + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(p - k + 1.0))) > 10000);
    const Eigen::MatrixXd x = oracle::gaussian(60, static_cast<Eigen::Index>(p), g_seed + 1000 + inst);
    Eigen::VectorXd y = oracle::gaussian(60, 1, g_seed + 2000 + inst).col(0);
    y += 1.2 * x.col(0) - 0.8 * x.col(static_cast<Eigen::Index>(p) - 1);
    const auto r = l0_best_subset(x, y, k);
    l0_match += r.indices == oracle::best_subset(x, y, k).best;
  }

  // G.SE multiplier against grid refinement.
  std::size_t gse_match = 0;
  std::gamma_distribution<double> gam(2.0);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t b = 10 + inst, p = 3 + inst % 8;
    std::vector<std::vector<double>> perm(b, std::vector<double>(p));
    for (auto& row : perm)
      for (double& v : row) v = gam(rng);
    std::vector<double> q(p);
    for (double& v : q) v = 3.0 * gam(rng);
    const double alpha = inst % 2 ? 0.05 : 0.1;
    const auto t = gse_threshold(perm, alpha);
    const auto sel = gse_apply(q, t, t.multiplier);
    const double c = oracle::grid_multiplier(perm, alpha);
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < p; ++i) {
      double m = 0.0, ss = 0.0;
      for (const auto& row : perm) m += row[i];
      m /= static_cast<double>(b);
      for (const auto& row : perm) ss += (row[i] - m) * (row[i] - m);
      const double s = std::sqrt(ss / static_cast<double>(b - 1));
      if (q[i] > m + c * s) expect.push_back(i);
    }
    gse_match += sel == expect;
  }

  Outcome o;
  o.pass = lasso_err <= 1e-8 && l0_match == 50 && gse_match == 20;
  o.summary = "LASSO max |coef error| " + format_double(lasso_err) + " (limit 1e-8), l0 exact " +
              ratio(l0_match, 50) + ", G.SE selections identical " + ratio(gse_match, 20);
  return o;
}

Outcome criterion8() {
  // Depth prior: flat likelihood, leaf counts of 10^4 sampled trees.
  std::mt19937_64 rng(g_seed + 21);
  std::uniform_real_distribution<double> u;
  Eigen::MatrixXd x(1000, 2);
  Eigen::VectorXd y(1000);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = u(rng);
  BartConfig cfg;
  cfg.trees = 50;
  cfg.burn_in = 100;
  cfg.draws = 2000;
  cfg.seed = g_seed + 5;
  cfg.fixed_sigma2 = 1e12;
  const int max_leaves = 6;
  std::vector<double> observed(max_leaves + 1, 0.0);
  std::size_t samples = 0;
  bart_fit(x, y, cfg, [&](std::size_t draw, const BartEnsemble& state) {
    if (draw % 10) return;
    for (const auto& tree : state.trees) {
      observed[static_cast<std::size_t>(std::min(static_cast<int>(tree.leaves().size()), max_leaves))] += 1;
      ++samples;
    }
  });
  auto expected = oracle::leaf_pmf(0, cfg.alpha, cfg.beta, max_leaves - 1);
  expected.push_back(1.0 - std::accumulate(expected.begin(), expected.end(), 0.0));
  double stat = 0.0, tail_o = 0.0, tail_e = 0.0;
  int bins = 0;
  for (int k = 1; k <= max_leaves; ++k) {
    const double e = expected[static_cast<std::size_t>(k)] * static_cast<double>(samples);
    const double ob = observed[static_cast<std::size_t>(k)];
    if (e < 20.0) {
      tail_o += ob;
      tail_e += e;
      continue;
    }
    stat += (ob - e) * (ob - e) / e;
    ++bins;
  }
  if (tail_e > 0.0) {
    stat += (tail_o - tail_e) * (tail_o - tail_e) / tail_e;
    ++bins;
  }
  const double p_depth = 1.0 - boost::math::cdf(boost::math::chi_squared(bins - 1), stat);

  // sigma^2 full conditional with frozen trees.
  const std::size_t n = 60;
  std::normal_distribution<double> z;
  Eigen::MatrixXd x1(n, 1);
  Eigen::VectorXd y1(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1(i, 0) = z(rng);
    y1[i] = z(rng);
  }
  BartConfig sc;
  sc.freeze_trees = true;
  sc.burn_in = 0;
  sc.draws = 10000;
  sc.seed = g_seed + 8;
  const auto fit = bart_fit(x1, y1, sc);
  const double lo = y1.minCoeff(), scale = y1.maxCoeff() - lo;
  const Eigen::ArrayXd ys = (y1.array() - lo) / scale - 0.5;
  const double var = (ys - ys.mean()).square().sum() / static_cast<double>(n - 1);
  const double lambda = var * boost::math::quantile(boost::math::chi_squared(sc.nu), 1.0 - sc.q) / sc.nu;
  const double c = sc.nu * lambda + ys.square().sum();
  const boost::math::chi_squared post(sc.nu + static_cast<double>(n));
  std::vector<double> s = fit.sigma2;
  for (double& v : s) v /= scale * scale;
  std::sort(s.begin(), s.end());
  double d = 0.0;
  const double m = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = boost::math::cdf(boost::math::complement(post, c / s[i]));
    d = std::max({d, std::abs(f - static_cast<double>(i) / m), std::abs(static_cast<double>(i + 1) / m - f)});
  }
  const double p_sigma = oracle::ks_pvalue(d, s.size());

  // Seed determinism, including across thread counts.
  const Eigen::MatrixXd xd = oracle::gaussian(150, 6, g_seed + 40);
  const Eigen::VectorXd yd = 4.0 * xd.col(2) + oracle::gaussian(150, 1, g_seed + 41).col(0);
  BartConfig dc = BartConfig::desk();
  dc.burn_in = 300;
  dc.draws = 300;
  dc.seed = g_seed + 3;
  dc.record_split_counts = true;
  const auto a = bart_fit(xd, yd, dc), b = bart_fit(xd, yd, dc);
  bool same = a.split_counts == b.split_counts && a.sigma2.size() == b.sigma2.size() &&
              std::memcmp(a.sigma2.data(), b.sigma2.data(), a.sigma2.size() * sizeof(double)) == 0 &&
              std::memcmp(a.inclusion.q.data(), b.inclusion.q.data(), a.inclusion.q.size() * sizeof(double)) == 0;
  const std::size_t threads = thread_count();
  GseOptions go{10, 0.05};
  set_thread_count(1);
  const auto g1 = gse_select(xd, yd, dc, go);
  set_thread_count(4);
  const auto g4 = gse_select(xd, yd, dc, go);
  set_thread_count(threads);
  same = same && g1.perm_q == g4.perm_q && g1.q == g4.q && g1.selected == g4.selected;

  Outcome o;
  o.pass = p_depth > 0.01 && p_sigma > 0.01 && same;
  o.summary = "depth prior chi-square p=" + fmt(p_depth) + " on " + std::to_string(samples) +
              " trees, sigma2 KS p=" + fmt(p_sigma) + " on " + std::to_string(s.size()) +
              " draws, byte-exact reruns " + (same ? "yes" : "no");
  return o;
}

Outcome criterion9() {
  // 91 x 59 positive features; y = 2 x1 x2 + 3 log(x3) + 1.5 / x4 + N(0, 0.3^2).
  const double sigma = 0.3;
  std::mt19937_64 rng(g_seed + 91);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::normal_distribution<double> e(0.0, sigma);
  Eigen::MatrixXd x(91, 59);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  Eigen::VectorXd y(91);
  for (Eigen::Index i = 0; i < 91; ++i)
    y[i] = 2.0 * x(i, 0) * x(i, 1) + 3.0 * std::log(x(i, 2)) + 1.5 / x(i, 3) + e(rng);

  PanConfig c;
  c.bart = BartConfig::desk();
  c.max_iterations = 2;
  c.seed = g_seed;
  const auto t = cross_validate_rmse(x, y, c, 50, 0.9, 4);
  const auto& k3 = t.summary[2];
  Outcome o;
  o.pass = k3.splits == 50 && k3.mean <= 2.0 * sigma;
  std::string all;
  for (const auto& s : t.summary) all += " k=" + std::to_string(s.k) + ":" + fmt(s.mean);
  o.summary = "synthetic 91x59, 50 splits: mean test RMSE at k=3 " + fmt(k3.mean) + " (limit " +
              fmt(2.0 * sigma) + ", " + std::to_string(k3.splits) + " finite splits);" + all;
  std::map<std::string, std::size_t> picks;
  for (const auto& r : t.rows)
    if (r.k == 3)
      for (const auto& d : r.descriptors) ++picks[d];
  o.details["k3_descriptor_counts"] = picks;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iBART acceptance checks"};
  std::vector<int> only;
  std::string report;
  std::size_t threads = 0;
  std::string log_level = "warn";
  app.add_option("--only", only, "Run only these criteria (1-9)")->delimiter(',');
  app.add_option("--report", report, "Write per-criterion details as JSON");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  app.add_option("--seed", g_seed, "Master seed");
  app.add_option("--log-level", log_level, "spdlog level");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));
  if (threads) set_thread_count(threads);

  const std::set<int> want = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9}
                                          : std::set<int>(only.begin(), only.end());
  const std::map<int, std::string> title = {
      {1, "unary screening"},      {2, "binary screening"},       {3, "complex-model screening"},
      {4, "space-size accounting"}, {5, "robustness in p"},        {6, "deterministic counts"},
      {7, "oracle equivalences"},  {8, "sampler statistics"},    {9, "synthetic RMSE protocol"}};

  Json details = Json::object();
  bool all_pass = true;
  std::optional<ComplexRun> complex;
  for (int c : want) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      switch (c) {
        case 1: o = screening(SimKind::kUnaryScreen); break;
        case 2: o = screening(SimKind::kBinaryScreen); break;
        case 3:
        case 4:
          if (!complex) complex = run_complex(10, 10);
          o = c == 3 ? criterion3(*complex) : criterion4(*complex);
          break;
        case 5: o = criterion5(); break;
        case 6: o = criterion6(); break;
        case 7: o = criterion7(); break;
        case 8: o = criterion8(); break;
        case 9: o = criterion9(); break;
        default: o.summary = "unknown criterion";
      }
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all_pass = all_pass && o.pass;
    std::printf("criterion %d (%s): %s | %s | %.1f s\n", c, title.count(c) ? title.at(c).c_str() : "?",
                o.pass ? "PASS" : "FAIL", o.summary.c_str(), secs);
    std::fflush(stdout);
    o.details["pass"] = o.pass;
    o.details["summary"] = o.summary;
    o.details["seconds"] = secs;
    details[std::to_string(c)] = o.details;
  }
  if (!report.empty()) write_text(report, details.dump(2) + "\n");
  return all_pass ? 0 : 1;
}
