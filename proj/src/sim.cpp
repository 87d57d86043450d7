#include "ibart/sim.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

#include "ibart/error.hpp"
#include "ibart/random.hpp"

namespace ibart {

std::string sim_kind_name(SimKind k) {
  switch (k) {
    case SimKind::kUnaryScreen: return "unary-screen";
    case SimKind::kBinaryScreen: return "binary-screen";
    case SimKind::kComplex: return "complex-3comp";
  }
  return "complex-3comp";
}

SimKind sim_kind_from_name(const std::string& name) {
  if (name == "unary-screen") return SimKind::kUnaryScreen;
  if (name == "binary-screen") return SimKind::kBinaryScreen;
  if (name == "complex-3comp" || name == "complex") return SimKind::kComplex;
  throw ValidationError("unknown simulation design '" + name + "'");
}

SimDesign SimDesign::unary_screen(OpKind op) {
  SimDesign d;
  d.kind = SimKind::kUnaryScreen;
  d.n = 200;
  d.p = 5;
  d.sigma = 1.0;
  d.op = op;
  return d;
}

SimDesign SimDesign::binary_screen(OpKind op) {
  SimDesign d = unary_screen(op);
  d.kind = SimKind::kBinaryScreen;
  return d;
}

SimDesign SimDesign::complex(std::size_t p) {
  SimDesign d;
  d.p = p;
  return d;
}

std::string SimDesign::label() const {
  if (kind == SimKind::kComplex) return sim_kind_name(kind) + "-p" + std::to_string(p);
  return sim_kind_name(kind) + "-" + std::string(op_name(op));
}

void SimDesign::validate() const {
  if (n < 10) throw ValidationError("simulation needs n >= 10");
  if (!(sigma >= 0.0)) throw ValidationError("noise SD must be non-negative");
  if (replicates == 0) throw ValidationError("simulation needs at least one replicate");
  switch (kind) {
    case SimKind::kUnaryScreen:
      if (p < 1 || arity(op) != 1 || op == OpKind::kIdentity)
        throw ValidationError("unary screen needs a unary operator and p >= 1");
      break;
    case SimKind::kBinaryScreen:
      if (p < 2 || arity(op) != 2)
        throw ValidationError("binary screen needs a binary operator and p >= 2");
      break;
    case SimKind::kComplex:
      if (p < 4) throw ValidationError("complex design needs p >= 4");
      break;
  }
}

bool uses_lognormal(OpKind op) {
  return op == OpKind::kLog || op == OpKind::kSqrt || op == OpKind::kInverse;
}

namespace {

std::uint64_t design_seed(const SimDesign& d, std::size_t replicate) {
  const auto tag = static_cast<std::uint64_t>(d.kind) * 64 + static_cast<std::uint64_t>(d.op);
  return derive_seed(derive_seed(d.seed, Stream::kData, tag), Stream::kReplicate, replicate);
}

std::vector<std::string> strings(const std::vector<Descriptor>& ds) {
  std::vector<std::string> out;
  out.reserve(ds.size());
  for (const auto& d : ds) out.push_back(d.str());
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

SimData generate_sim(const SimDesign& design, std::size_t replicate) {
  design.validate();
  Rng rng(design_seed(design, replicate));
  const auto n = static_cast<Eigen::Index>(design.n);
  const auto p = static_cast<Eigen::Index>(design.p);
  SimData out;
  out.x.resize(n, p);

  Descriptor truth = Descriptor::leaf(0);
  switch (design.kind) {
    case SimKind::kUnaryScreen: {
      if (uses_lognormal(design.op)) {
        std::lognormal_distribution<double> law(2.0, 0.5);
        for (Eigen::Index i = 0; i < out.x.size(); ++i) out.x.data()[i] = law(rng);
      } else {
        std::normal_distribution<double> law;
        for (Eigen::Index i = 0; i < out.x.size(); ++i) out.x.data()[i] = law(rng);
      }
      truth = Descriptor::unary(design.op, Descriptor::leaf(0));
      out.signal = 10.0 * evaluate(truth, out.x, {std::numeric_limits<double>::infinity()});
      out.truth = {truth.str()};
      break;
    }
    case SimKind::kBinaryScreen: {
      std::normal_distribution<double> law;
      for (Eigen::Index i = 0; i < out.x.size(); ++i) out.x.data()[i] = law(rng);
      truth = Descriptor::binary(design.op, Descriptor::leaf(0), Descriptor::leaf(1));
      out.signal = 10.0 * evaluate(truth, out.x, {std::numeric_limits<double>::infinity()});
      out.truth = {truth.str()};
      break;
    }
    case SimKind::kComplex: {
      std::uniform_real_distribution<double> law(-1.0, 1.0);
      for (Eigen::Index i = 0; i < out.x.size(); ++i) out.x.data()[i] = law(rng);
      const auto x = [](std::size_t i) { return Descriptor::leaf(i); };
      const Descriptor f1 = Descriptor::unary(
          OpKind::kSquare,
          Descriptor::binary(OpKind::kSubtract, Descriptor::unary(OpKind::kExp, x(0)),
                             Descriptor::unary(OpKind::kExp, x(1))));
      const Descriptor f2 = Descriptor::unary(
          OpKind::kSinPi, Descriptor::binary(OpKind::kMultiply, x(2), x(3)));
      out.signal = 15.0 * evaluate(f1, out.x) + 20.0 * evaluate(f2, out.x);
      out.truth = {f1.str(), f2.str()};
      break;
    }
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  out.y = out.signal;
  if (design.sigma > 0.0)
    for (Eigen::Index i = 0; i < n; ++i) out.y[i] += design.sigma * noise(rng);
  return out;
}

Score score_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Score s{tp, fp, fn, 0.0, 0.0, 0.0};
  if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (s.precision + s.recall > 0.0)
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

Score score_selection(const std::vector<std::string>& selected,
                      const std::vector<std::string>& truth) {
  std::vector<std::string> sel = selected, tru = truth;
  std::sort(sel.begin(), sel.end());
  sel.erase(std::unique(sel.begin(), sel.end()), sel.end());
  std::sort(tru.begin(), tru.end());
  tru.erase(std::unique(tru.begin(), tru.end()), tru.end());
  std::vector<std::string> common;
  std::set_intersection(sel.begin(), sel.end(), tru.begin(), tru.end(),
                        std::back_inserter(common));
  return score_counts(common.size(), sel.size() - common.size(), tru.size() - common.size());
}

std::vector<MethodSummary> summarize(const std::vector<ReplicateRow>& rows) {
  std::vector<MethodSummary> out;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  std::vector<std::vector<double>> f1s;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.design, r.method);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, out.size()).first;
      out.push_back({r.design, r.method});
      f1s.emplace_back();
    }
    MethodSummary& s = out[it->second];
    ++s.replicates;
    s.full_recovery += r.score.fn == 0;
    s.mean_tp += static_cast<double>(r.score.tp);
    s.mean_fp += static_cast<double>(r.score.fp);
    s.max_space = std::max(s.max_space, r.max_space);
    s.co_selected += r.co_selected;
    f1s[it->second].push_back(r.score.f1);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].mean_tp /= static_cast<double>(out[i].replicates);
    out[i].mean_fp /= static_cast<double>(out[i].replicates);
    out[i].median_f1 = median(f1s[i]);
  }
  return out;
}

std::vector<ReplicateRow> run_screen_suite(const SimDesign& design,
                                           const ScreenOptions& options) {
  design.validate();
  if (design.kind == SimKind::kComplex)
    throw ValidationError("screen suites need a unary or binary screen design");
  std::vector<ReplicateRow> rows;
  for (std::size_t r = 0; r < design.replicates; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const SimData data = generate_sim(design, r);
    const auto base = DescriptorSpace::from_primaries(data.x);
    const DescriptorSpace space = design.kind == SimKind::kUnaryScreen
                                      ? generate_unary(base, all_unary_ops())
                                      : generate_binary(base, all_binary_ops());
    if (space.find(data.truth[0]) == space.size())
      spdlog::warn("{} replicate {}: true descriptor {} not in the space", design.label(), r,
                   data.truth[0]);
    BartConfig bart = options.bart;
    bart.seed = derive_seed(design_seed(design, r), Stream::kFit, 0);
    const auto gse = gse_select(space.matrix(), data.y, bart, options.gse);

    ReplicateRow row;
    row.design = design.label();
    row.method = "BART-G.SE";
    row.replicate = r;
    for (std::size_t i : gse.selected) row.selected.push_back(space.descriptor(i).str());
    row.score = score_selection(row.selected, data.truth);
    row.max_space = space.size();
    row.space_sizes = {space.size()};
    row.selected_sizes = {gse.selected.size()};
    if (design.kind == SimKind::kBinaryScreen &&
        (design.op == OpKind::kSubtract || design.op == OpKind::kAbsDiff)) {
      const std::size_t a = space.find("(x1-x2)"), b = space.find("|x1-x2|");
      const auto has = [&](const char* s) {
        return std::find(row.selected.begin(), row.selected.end(), s) != row.selected.end();
      };
      row.co_selected = has("(x1-x2)") && has("|x1-x2|");
      if (a < space.size() && b < space.size())
        row.truth_abs_corr = abs_correlation(space.column(a), space.column(b));
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ReplicateRow> run_pan_suite(const SimDesign& design, const PanConfig& config) {
  design.validate();
  std::vector<ReplicateRow> rows;
  for (std::size_t r = 0; r < design.replicates; ++r) {
    const SimData data = generate_sim(design, r);
    PanConfig cfg = config;
    cfg.seed = derive_seed(design_seed(design, r), Stream::kFit, 0);
    ReplicateRow base;
    base.design = design.label();
    base.replicate = r;
    PanResult res;
    try {
      res = pan_run(data.x, data.y, cfg);
    } catch (const NumericalError& e) {
      spdlog::warn("{} replicate {}: {}", design.label(), r, e.what());
      for (const char* m : {"iBART", "iBART+l0"}) {
        if (std::string(m) == "iBART+l0" && !cfg.run_l0) continue;
        ReplicateRow row = base;
        row.method = m;
        row.score = score_selection({}, data.truth);
        rows.push_back(row);
      }
      continue;
    }
    for (const auto& a : res.audit) {
      base.space_sizes.push_back(a.generated);
      base.selected_sizes.push_back(a.selected);
      base.max_space = std::max(base.max_space, a.generated);
    }
    base.seconds = res.seconds;

    ReplicateRow lasso = base;
    lasso.method = "iBART";
    lasso.selected = strings(res.lasso_selected);
    lasso.score = score_selection(lasso.selected, data.truth);
    rows.push_back(lasso);
    if (cfg.run_l0) {
      ReplicateRow l0 = base;
      l0.method = "iBART+l0";
      l0.selected = strings(res.selected);
      l0.score = score_selection(l0.selected, data.truth);
      rows.push_back(l0);
    }
    spdlog::info("{} replicate {}: TP {} FP {} in {:.1f} s", design.label(), r,
                 rows.back().score.tp, rows.back().score.fp, res.seconds);
  }
  return rows;
}

RmseTable cross_validate_rmse(const Eigen::MatrixXd& x0, const Eigen::VectorXd& y,
                              const PanConfig& config, std::size_t splits,
                              double train_fraction, std::size_t k_max,
                              std::span<const Unit> units) {
  if (x0.rows() != y.size())
    throw ValidationError("feature rows and response length differ");
  if (splits == 0 || k_max == 0) throw ValidationError("need at least one split and k >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ValidationError("train fraction must lie in (0, 1)");
  const auto n = static_cast<std::size_t>(x0.rows());
  const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
  if (n_train >= n) throw ValidationError("test set would be empty");
  if (n_train < 10) throw ValidationError("training set would have fewer than 10 rows");

  RmseTable table;
  const EvalOptions uncapped{std::numeric_limits<double>::infinity()};
  for (std::size_t s = 0; s < splits; ++s) {
    const std::uint64_t seed = derive_seed(config.seed, Stream::kSplit, s);
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), Rng(seed));
    const std::vector<Eigen::Index> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    const std::vector<Eigen::Index> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    const Eigen::MatrixXd xtr = x0(train, Eigen::all), xte = x0(test, Eigen::all);
    const Eigen::VectorXd ytr = y(train), yte = y(test);

    PanConfig cfg = config;
    cfg.seed = seed;
    cfg.run_l0 = false;
    std::vector<Descriptor> pool;
    Eigen::MatrixXd pool_train;
    try {
      const auto res = pan_run(xtr, ytr, cfg, units);
      pool = res.lasso_selected;
      pool_train.resize(static_cast<Eigen::Index>(n_train), static_cast<Eigen::Index>(pool.size()));
      for (std::size_t j = 0; j < pool.size(); ++j)
        pool_train.col(static_cast<Eigen::Index>(j)) = res.final_space.column(res.lasso.fit.support[j]);
    } catch (const NumericalError& e) {
      spdlog::warn("split {}: {}", s, e.what());
    }

    for (std::size_t k = 1; k <= k_max; ++k) {
      RmseRow row;
      row.split = s;
      row.k = k;
      const std::size_t kk = std::min(k, pool.size());
      Eigen::VectorXd pred = Eigen::VectorXd::Constant(yte.size(), ytr.mean());
      if (kk > 0) {
        const auto best = l0_best_subset(pool_train, ytr, kk, config.subset_budget);
        pred.setConstant(best.intercept);
        bool ok = true;
        for (std::size_t a = 0; a < kk && ok; ++a) {
          const Descriptor& d = pool[best.indices[a]];
          row.descriptors.push_back(d.str());
          const auto col = try_evaluate(d, xte, uncapped);
          if (!col) {
            ok = false;
            break;
          }
          pred += best.coefficients[static_cast<Eigen::Index>(a)] * *col;
        }
        if (!ok) {
          spdlog::warn("split {} k {}: a descriptor is undefined on the test rows", s, k);
          pred.setConstant(std::numeric_limits<double>::quiet_NaN());
        }
      }
      row.rmse = std::sqrt((yte - pred).squaredNorm() / static_cast<double>(yte.size()));
      table.rows.push_back(std::move(row));
    }
  }

  for (std::size_t k = 1; k <= k_max; ++k) {
    RmseSummary sm;
    sm.k = k;
    std::vector<double> v;
    for (const auto& r : table.rows)
      if (r.k == k && std::isfinite(r.rmse)) v.push_back(r.rmse);
    sm.splits = v.size();
    if (!v.empty()) {
      sm.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double e : v) ss += (e - sm.mean) * (e - sm.mean);
      sm.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    }
    table.summary.push_back(sm);
  }
  return table;
}

}  // namespace ibart
