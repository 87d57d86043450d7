#include "ibart/json.hpp"

#include <cctype>
#include <set>

#include "ibart/error.hpp"

namespace ibart {

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw ValidationError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key))
      throw ValidationError(std::string("unknown key '") + key + "' in " + what);
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("key '") + key + "' has the wrong type");
  }
}

std::vector<OpKind> ops_from(const Json& j, const char* key, std::vector<OpKind> base) {
  if (!j.contains(key)) return base;
  std::vector<std::string> names;
  read(j, key, names);
  std::vector<OpKind> out;
  for (const auto& n : names) out.push_back(op_from_name(n));
  return out;
}

Json op_names(const std::vector<OpKind>& ops) {
  Json a = Json::array();
  for (OpKind op : ops) a.push_back(std::string(op_name(op)));
  return a;
}

Json strings(const std::vector<Descriptor>& ds, const std::vector<std::string>& names) {
  Json a = Json::array();
  for (const auto& d : ds) a.push_back(rename_leaves(d.str(), names));
  return a;
}

Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json subset_json(const SubsetResult& s, const std::vector<std::string>& labels) {
  Json j;
  Json d = Json::array();
  for (std::size_t i : s.indices) d.push_back(i < labels.size() ? labels[i] : std::to_string(i));
  j["k"] = s.indices.size();
  j["descriptors"] = d;
  j["aic"] = s.aic;
  j["rss"] = s.rss;
  j["intercept"] = s.intercept;
  j["coefficients"] = vec(s.coefficients);
  j["subsets_evaluated"] = s.evaluated;
  j["rank_deficient"] = s.rank_deficient;
  return j;
}

}  // namespace

std::string rename_leaves(const std::string& canonical, const std::vector<std::string>& names) {
  if (names.empty()) return canonical;
  std::string out;
  for (std::size_t i = 0; i < canonical.size();) {
    const bool boundary = i == 0 || !std::isalnum(static_cast<unsigned char>(canonical[i - 1]));
    if (canonical[i] == 'x' && boundary && i + 1 < canonical.size() &&
        std::isdigit(static_cast<unsigned char>(canonical[i + 1]))) {
      std::size_t j = i + 1;
      while (j < canonical.size() && std::isdigit(static_cast<unsigned char>(canonical[j]))) ++j;
      const std::size_t k = std::stoul(canonical.substr(i + 1, j - i - 1));
      out += k >= 1 && k <= names.size() ? names[k - 1] : canonical.substr(i, j - i);
      i = j;
    } else {
      out += canonical[i++];
    }
  }
  return out;
}

Json json_of(const BartConfig& c) {
  Json j;
  j["trees"] = c.trees;
  j["burn_in"] = c.burn_in;
  j["draws"] = c.draws;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["k"] = c.k;
  j["nu"] = c.nu;
  j["q"] = c.q;
  j["p_grow"] = c.p_grow;
  j["p_prune"] = c.p_prune;
  return j;
}

Json json_of(const GseOptions& o) {
  Json j;
  j["permutations"] = o.permutations;
  j["alpha"] = o.alpha;
  return j;
}

Json json_of(const PanConfig& c) {
  Json j;
  j["scheme"] = scheme_name(c.scheme);
  j["max_iterations"] = c.max_iterations;
  j["rho_max"] = c.rho_max;
  j["run_l0"] = c.run_l0;
  j["k"] = c.k;
  j["bart"] = json_of(c.bart);
  j["gse"] = json_of(c.gse);
  j["lasso_folds"] = c.lasso_folds;
  j["dedup_threshold"] = c.dedup_threshold;
  j["unit_filter"] = c.unit_filter;
  j["magnitude_cap"] = c.magnitude_cap;
  j["subset_budget"] = c.subset_budget;
  j["unary_ops"] = op_names(c.unary_ops);
  j["binary_ops"] = op_names(c.binary_ops);
  j["seed"] = c.seed;
  return j;
}

BartConfig bart_config_from_json(const Json& j, BartConfig c) {
  check_keys(j, {"trees", "burn_in", "draws", "alpha", "beta", "k", "nu", "q", "p_grow", "p_prune"},
             "BART configuration");
  read(j, "trees", c.trees);
  read(j, "burn_in", c.burn_in);
  read(j, "draws", c.draws);
  read(j, "alpha", c.alpha);
  read(j, "beta", c.beta);
  read(j, "k", c.k);
  read(j, "nu", c.nu);
  read(j, "q", c.q);
  read(j, "p_grow", c.p_grow);
  read(j, "p_prune", c.p_prune);
  c.validate();
  return c;
}

GseOptions gse_options_from_json(const Json& j, GseOptions o) {
  check_keys(j, {"permutations", "alpha"}, "G.SE options");
  read(j, "permutations", o.permutations);
  read(j, "alpha", o.alpha);
  return o;
}

PanConfig pan_config_from_json(const Json& j, PanConfig c) {
  check_keys(j,
             {"scheme", "max_iterations", "rho_max", "run_l0", "k", "bart", "gse", "lasso_folds",
              "dedup_threshold", "unit_filter", "magnitude_cap", "subset_budget", "unary_ops",
              "binary_ops", "seed"},
             "PAN configuration");
  if (j.contains("scheme")) {
    std::string s;
    read(j, "scheme", s);
    c.scheme = scheme_from_name(s);
  }
  read(j, "max_iterations", c.max_iterations);
  read(j, "rho_max", c.rho_max);
  read(j, "run_l0", c.run_l0);
  read(j, "k", c.k);
  if (j.contains("bart")) c.bart = bart_config_from_json(j.at("bart"), c.bart);
  if (j.contains("gse")) c.gse = gse_options_from_json(j.at("gse"), c.gse);
  read(j, "lasso_folds", c.lasso_folds);
  read(j, "dedup_threshold", c.dedup_threshold);
  read(j, "unit_filter", c.unit_filter);
  read(j, "magnitude_cap", c.magnitude_cap);
  read(j, "subset_budget", c.subset_budget);
  c.unary_ops = ops_from(j, "unary_ops", c.unary_ops);
  c.binary_ops = ops_from(j, "binary_ops", c.binary_ops);
  read(j, "seed", c.seed);
  c.validate();
  return c;
}

Json json_of(const GseResult& r, const std::vector<std::string>& names) {
  Json j;
  Json sel = Json::array();
  for (std::size_t i : r.selected) sel.push_back(i < names.size() ? names[i] : std::to_string(i));
  j["selected"] = sel;
  j["selected_index"] = r.selected;
  j["multiplier"] = r.multiplier;
  j["unattainable"] = r.unattainable;
  j["no_split"] = r.no_split;
  j["permutations"] = r.permutations;
  j["alpha"] = r.alpha;
  Json vars = Json::array();
  for (std::size_t i = 0; i < r.q.size(); ++i) {
    Json v;
    v["name"] = i < names.size() ? names[i] : std::to_string(i);
    v["q"] = r.q[i];
    v["perm_mean"] = r.perm_mean[i];
    v["perm_sd"] = r.perm_sd[i];
    v["threshold"] = r.perm_mean[i] + r.multiplier * r.perm_sd[i];
    vars.push_back(v);
  }
  j["variables"] = vars;
  return j;
}

Json json_of(const LassoResult& r) {
  Json j;
  j["path_length"] = r.lambdas.size();
  j["lambda_max"] = r.lambdas.empty() ? 0.0 : r.lambdas.front();
  j["lambda_min"] = r.lambdas.empty() ? 0.0 : r.lambdas.back();
  j["chosen_index"] = r.chosen;
  j["lambda"] = r.fit.lambda;
  j["cv_error"] = r.cv_error.empty() ? 0.0 : r.cv_error[r.chosen];
  j["support_size"] = r.fit.support.size();
  return j;
}

Json json_of(const SubsetSweep& s) {
  Json j;
  Json table = Json::array();
  for (const auto& r : s.per_k) table.push_back(subset_json(r, {}));
  j["aic_table"] = table;
  j["best_k"] = s.per_k.empty() ? 0 : s.per_k[s.best].indices.size();
  return j;
}

Json json_of(const PanResult& r, const std::vector<std::string>& names) {
  Json j;
  j["scheme"] = scheme_name(r.scheme);
  j["iterations"] = r.iterations;
  j["stop"] = r.stop == StopReason::kCorrelation ? "correlation" : "max_iterations";
  j["initial_rho"] = r.initial_rho;
  j["final_rho"] = r.final_rho;
  j["selected"] = strings(r.selected, names);
  j["canonical"] = strings(r.selected, {});
  j["intercept"] = r.intercept;
  j["coefficients"] = vec(r.coefficients);

  Json lasso = json_of(r.lasso);
  lasso["selected"] = strings(r.lasso_selected, names);
  Json coef = Json::array();
  for (std::size_t j2 : r.lasso.fit.support) coef.push_back(r.lasso.fit.coefficients[static_cast<Eigen::Index>(j2)]);
  lasso["coefficients"] = coef;
  lasso["intercept"] = r.lasso.fit.intercept;
  j["lasso"] = lasso;

  if (r.l0) {
    std::vector<std::string> labels;
    for (const auto& d : r.lasso_selected) labels.push_back(rename_leaves(d.str(), names));
    Json table = Json::array();
    for (const auto& s : r.l0->per_k) table.push_back(subset_json(s, labels));
    j["l0"] = {{"best_k", r.l0->per_k[r.l0->best].indices.size()}, {"aic_table", table}};
  } else {
    j["l0"] = nullptr;
  }

  Json audit = Json::array();
  for (const auto& a : r.audit) {
    Json x;
    x["iteration"] = a.iteration;
    x["operators"] = a.operators;
    x["screened"] = a.screened;
    x["selected"] = a.selected;
    x["union_size"] = a.union_size;
    x["carried_forward"] = a.carried_forward;
    x["multiplier"] = a.multiplier;
    x["generated"] = a.generated;
    x["rho"] = a.rho;
    x["generation"] = {{"candidates", a.generation.candidates},
                       {"domain_dropped", a.generation.domain_dropped},
                       {"unit_dropped", a.generation.unit_dropped},
                       {"pre_dedup", a.generation.pre_dedup},
                       {"constant_dropped", a.generation.constant_dropped},
                       {"dedup_dropped", a.generation.dedup_dropped},
                       {"retained", a.generation.retained}};
    Json sel = Json::array();
    for (const auto& s : a.selected_descriptors) sel.push_back(rename_leaves(s, names));
    x["selected_descriptors"] = sel;
    audit.push_back(x);
  }
  j["audit"] = audit;
  j["final_space_size"] = r.final_space.size();
  return j;
}

Json json_of(const MethodSummary& s) {
  Json j;
  j["design"] = s.design;
  j["method"] = s.method;
  j["replicates"] = s.replicates;
  j["full_recovery"] = s.full_recovery;
  j["mean_tp"] = s.mean_tp;
  j["mean_fp"] = s.mean_fp;
  j["median_f1"] = s.median_f1;
  j["max_space"] = s.max_space;
  j["co_selected"] = s.co_selected;
  return j;
}

Json json_of(const RmseSummary& s) {
  Json j;
  j["k"] = s.k;
  j["splits"] = s.splits;
  j["mean_rmse"] = s.mean;
  j["sd_rmse"] = s.sd;
  return j;
}

}  // namespace ibart
