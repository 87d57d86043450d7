#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "ibart/error.hpp"
#include "ibart/io.hpp"
#include "ibart/json.hpp"
#include "ibart/parallel.hpp"
#include "ibart/sim.hpp"

using namespace ibart;
namespace fs = std::filesystem;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kValidation = 2;
constexpr int kIo = 3;
constexpr int kNumerical = 4;
constexpr int kReplayMismatch = 5;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  std::string profile = "desk";
  bool emit_plot_data = false;
  std::string out = ".";
  std::string log_level = "info";
};

struct Run {
  std::string command;
  std::vector<std::string> argv;
  Json config;
  std::uint64_t seed = 0;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
};

BartConfig profile_bart(const Globals& g) {
  if (g.profile == "paper") return BartConfig::paper();
  return BartConfig::desk();
}

fs::path out_path(const Globals& g, const std::string& name) { return fs::path(g.out) / name; }

void write_json(Run& run, const fs::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
  run.outputs.push_back(path);
}

Json load_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_manifest(const Globals& g, const Run& run, double seconds) {
  Json m;
  m["command"] = run.command;
  m["argv"] = run.argv;
  m["version"] = IBART_VERSION;
  m["seed"] = run.seed;
  m["profile"] = g.profile;
  m["config"] = run.config;
  m["config_sha256"] = sha256_hex(run.config.dump());
  Json inputs = Json::array();
  for (const auto& p : run.inputs) inputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  m["inputs"] = inputs;
  Json outputs = Json::array();
  for (const auto& p : run.outputs) outputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  m["outputs"] = outputs;
  m["timing"] = {{"seconds", seconds}, {"threads", thread_count()}};
  write_text(out_path(g, run.command + ".manifest.json"), m.dump(2) + "\n");
}

// Column-at-a-time spaces written row by row without packing a matrix.
void write_space_csv(const fs::path& path, const DescriptorSpace& space,
                     const std::vector<std::string>& names) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (std::size_t j = 0; j < space.size(); ++j) {
    std::string h = rename_leaves(space.descriptor(j).str(), names);
    if (h.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char c : h) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      h = q + "\"";
    }
    out << (j ? "," : "") << h;
  }
  out << '\n';
  std::string line;
  for (std::size_t r = 0; r < space.rows(); ++r) {
    line.clear();
    for (std::size_t j = 0; j < space.size(); ++j) {
      if (j) line += ',';
      line += format_double(space.column(j)[static_cast<Eigen::Index>(r)]);
    }
    out << line << '\n';
  }
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

struct DataArgs {
  std::string data;
  std::string response;
  std::string response_file;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--data", a.data, "Primary-feature CSV")->required();
  cmd->add_option("--response", a.response, "Name of the response column in --data");
  cmd->add_option("--response-file", a.response_file, "Single-column response CSV");
}

Dataset load_dataset(const DataArgs& a, Run& run) {
  if (a.response.empty() == a.response_file.empty())
    throw ValidationError("give exactly one of --response and --response-file");
  const Table table = read_csv(a.data);
  run.inputs.push_back(a.data);
  if (!a.response.empty()) return split_response(table, a.response);
  run.inputs.push_back(a.response_file);
  return join_response(table, read_csv(a.response_file));
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  DataArgs data;
  std::string ops_file;
  std::vector<std::string> steps;
  bool no_dedup = false;
  bool no_unit_filter = false;
};

int cmd_generate(const Globals& g, const GenerateArgs& a, Run& run) {
  Table table = read_csv(a.data.data);
  run.inputs.push_back(a.data.data);
  if (!a.data.response.empty()) table = split_response(table, a.data.response).features;

  Json ops = Json::object();
  if (!a.ops_file.empty()) {
    ops = load_json(a.ops_file);
    run.inputs.push_back(a.ops_file);
    if (!ops.is_object()) throw ValidationError("ops file must be a JSON object");
    for (const auto& [key, value] : ops.items())
      if (key != "steps" && key != "unary_ops" && key != "binary_ops" && key != "dedup" &&
          key != "dedup_threshold" && key != "unit_filter" && key != "magnitude_cap")
        throw ValidationError("unknown key '" + key + "' in ops file");
  }
  std::vector<std::string> steps = ops.value("steps", std::vector<std::string>{});
  if (!a.steps.empty()) steps = a.steps;
  std::vector<OpKind> unary = all_unary_ops();
  std::vector<OpKind> binary = all_binary_ops();
  if (ops.contains("unary_ops")) {
    unary.clear();
    for (const auto& n : ops["unary_ops"].get<std::vector<std::string>>()) unary.push_back(op_from_name(n));
  }
  if (ops.contains("binary_ops")) {
    binary.clear();
    for (const auto& n : ops["binary_ops"].get<std::vector<std::string>>()) binary.push_back(op_from_name(n));
  }
  GenerationOptions opt;
  opt.dedup = ops.value("dedup", true) && !a.no_dedup;
  opt.dedup_threshold = ops.value("dedup_threshold", kDefaultDedupThreshold);
  opt.unit_filter = ops.value("unit_filter", true) && !a.no_unit_filter;
  opt.magnitude_cap = ops.value("magnitude_cap", 1e8);

  Json unary_names = Json::array();
  for (OpKind op : unary) unary_names.push_back(std::string(op_name(op)));
  Json binary_names = Json::array();
  for (OpKind op : binary) binary_names.push_back(std::string(op_name(op)));
  run.config = {{"steps", steps},         {"unary_ops", unary_names},
                {"binary_ops", binary_names}, {"dedup", opt.dedup},
                {"dedup_threshold", opt.dedup_threshold}, {"unit_filter", opt.unit_filter},
                {"magnitude_cap", opt.magnitude_cap}};

  DescriptorSpace space = DescriptorSpace::from_primaries(table.data, table.units);
  Json reports = Json::array();
  int origin = 0;
  for (const auto& step : steps) {
    GenerationReport rep;
    opt.origin = ++origin;
    if (step == "unary")
      space = generate_unary(space, unary, opt, &rep);
    else if (step == "binary")
      space = generate_binary(space, binary, opt, &rep);
    else
      throw ValidationError("unknown generation step '" + step + "' (use unary or binary)");
    std::printf("%s: candidates %zu, domain-dropped %zu, unit-dropped %zu, pre-dedup %zu, "
                "constant-dropped %zu, dedup-dropped %zu, retained %zu\n",
                step.c_str(), rep.candidates, rep.domain_dropped, rep.unit_dropped, rep.pre_dedup,
                rep.constant_dropped, rep.dedup_dropped, rep.retained);
    reports.push_back({{"step", step},
                       {"candidates", rep.candidates},
                       {"domain_dropped", rep.domain_dropped},
                       {"unit_dropped", rep.unit_dropped},
                       {"pre_dedup", rep.pre_dedup},
                       {"constant_dropped", rep.constant_dropped},
                       {"dedup_dropped", rep.dedup_dropped},
                       {"retained", rep.retained}});
  }
  std::printf("space: %zu descriptors x %zu rows\n", space.size(), space.rows());

  const fs::path csv = out_path(g, "space.csv");
  write_space_csv(csv, space, table.names);
  run.outputs.push_back(csv);

  Json desc = Json::array();
  for (std::size_t j = 0; j < space.size(); ++j) {
    const auto& unit = space.descriptor(j).unit();
    Json e;
    e["descriptor"] = rename_leaves(space.descriptor(j).str(), table.names);
    e["canonical"] = space.descriptor(j).str();
    e["unit"] = unit ? Json(unit->to_string()) : Json(nullptr);
    e["complexity"] = space.descriptor(j).complexity();
    desc.push_back(e);
  }
  write_json(run, out_path(g, "descriptors.json"),
             {{"features", table.names}, {"steps", reports}, {"descriptors", desc}});
  return kOk;
}

// ---------------------------------------------------------------------------
// select and evaluate

struct PanArgs {
  std::string config;
  std::optional<std::size_t> k;
  std::optional<std::size_t> max_iterations;
  std::optional<double> rho_max;
  std::optional<std::string> scheme;
  bool l0 = false;
};

void add_pan_options(CLI::App* cmd, PanArgs& a) {
  cmd->add_option("--config", a.config, "PanConfig JSON document");
  cmd->add_option("--k", a.k, "Largest subset size for the l0 sweep");
  cmd->add_option("--max-iterations", a.max_iterations, "Iteration cap");
  cmd->add_option("--rho-max", a.rho_max, "Correlation stop");
  cmd->add_option("--scheme", a.scheme, "unary-first, binary-first or auto");
  cmd->add_flag("--l0", a.l0, "Run the AIC best-subset sweep after LASSO");
}

PanConfig build_pan_config(const Globals& g, const PanArgs& a, Run& run) {
  PanConfig base;
  base.bart = profile_bart(g);
  PanConfig c = base;
  if (!a.config.empty()) {
    c = pan_config_from_json(load_json(a.config), base);
    run.inputs.push_back(a.config);
  }
  if (a.k) c.k = *a.k;
  if (a.max_iterations) c.max_iterations = *a.max_iterations;
  if (a.rho_max) c.rho_max = *a.rho_max;
  if (a.scheme) c.scheme = scheme_from_name(*a.scheme);
  if (a.l0) c.run_l0 = true;
  if (g.seed) c.seed = *g.seed;
  c.validate();
  run.seed = c.seed;
  run.config = json_of(c);
  return c;
}

std::string report_text(const PanResult& r, const std::vector<std::string>& names,
                        const std::string& response) {
  std::string s;
  auto line = [&s](const std::string& t) { s += t + "\n"; };
  line("iBART descriptor selection for " + response);
  line("scheme: " + scheme_name(r.scheme) + ", iterations: " + std::to_string(r.iterations) +
       ", stop: " + (r.stop == StopReason::kCorrelation ? "correlation" : "max_iterations"));
  line("primary correlation: " + format_double(r.initial_rho) +
       ", final correlation: " + format_double(r.final_rho));
  for (const auto& a : r.audit) {
    line("iteration " + std::to_string(a.iteration) + " (" + a.operators + "): screened " +
         std::to_string(a.screened) + ", selected " + std::to_string(a.selected) + ", union " +
         std::to_string(a.union_size) + ", generated " + std::to_string(a.generated) +
         (a.carried_forward ? " (carried forward)" : ""));
    for (const auto& d : a.selected_descriptors) line("    " + rename_leaves(d, names));
  }
  line("LASSO support (" + std::to_string(r.lasso_selected.size()) + "):");
  for (const auto& d : r.lasso_selected) line("    " + rename_leaves(d.str(), names));
  if (r.l0) {
    line("AIC by subset size:");
    for (const auto& sub : r.l0->per_k) {
      std::string ds;
      for (std::size_t i : sub.indices)
        ds += (ds.empty() ? "" : ", ") + rename_leaves(r.lasso_selected[i].str(), names);
      line("    k=" + std::to_string(sub.indices.size()) + " AIC " + format_double(sub.aic) +
           " : " + ds);
    }
  }
  line("model:");
  line("    " + response + " = " + format_double(r.intercept));
  for (std::size_t i = 0; i < r.selected.size(); ++i)
    line("        + " + format_double(r.coefficients[static_cast<Eigen::Index>(i)]) + " * " +
         rename_leaves(r.selected[i].str(), names));
  return s;
}

int cmd_select(const Globals& g, const DataArgs& d, const PanArgs& a, Run& run) {
  const Dataset data = load_dataset(d, run);
  const PanConfig c = build_pan_config(g, a, run);
  const PanResult r = pan_run(data.features.data, data.y, c, data.features.units);
  Json j;
  j["response"] = data.response;
  j["features"] = data.features.names;
  j.update(json_of(r, data.features.names));
  write_json(run, out_path(g, "result.json"), j);
  const std::string report = report_text(r, data.features.names, data.response);
  write_text(out_path(g, "report.txt"), report);
  run.outputs.push_back(out_path(g, "report.txt"));
  std::fputs(report.c_str(), stdout);
  return kOk;
}

struct EvaluateArgs {
  std::size_t splits = 50;
  double train_fraction = 0.9;
  std::size_t k_max = 4;
};

int cmd_evaluate(const Globals& g, const DataArgs& d, const PanArgs& a, const EvaluateArgs& e,
                 Run& run) {
  const Dataset data = load_dataset(d, run);
  const PanConfig c = build_pan_config(g, a, run);
  run.config["evaluate"] = {{"splits", e.splits}, {"train_fraction", e.train_fraction},
                            {"k_max", e.k_max}};
  const RmseTable t = cross_validate_rmse(data.features.data, data.y, c, e.splits,
                                          e.train_fraction, e.k_max, data.features.units);
  std::string csv = "split,k,rmse,descriptors\n";
  for (const auto& row : t.rows) {
    std::string ds;
    for (const auto& s : row.descriptors) ds += (ds.empty() ? "" : ";") + rename_leaves(s, data.features.names);
    csv += std::to_string(row.split) + "," + std::to_string(row.k) + "," + format_double(row.rmse) +
           ",\"" + ds + "\"\n";
  }
  write_text(out_path(g, "rmse.csv"), csv);
  run.outputs.push_back(out_path(g, "rmse.csv"));
  Json summary = Json::array();
  for (const auto& s : t.summary) {
    summary.push_back(json_of(s));
    std::printf("k=%zu: mean RMSE %s (sd %s) over %zu splits\n", s.k, format_double(s.mean).c_str(),
                format_double(s.sd).c_str(), s.splits);
  }
  write_json(run, out_path(g, "rmse_summary.json"), {{"response", data.response}, {"summary", summary}});
  return kOk;
}

// ---------------------------------------------------------------------------
// bart-select

struct BartSelectArgs {
  std::string bart_config;
  std::size_t permutations = 50;
  double alpha = 0.05;
  bool dump_split_counts = false;
};

int cmd_bart_select(const Globals& g, const DataArgs& d, const BartSelectArgs& a, Run& run) {
  const Dataset data = load_dataset(d, run);
  BartConfig bart = profile_bart(g);
  if (!a.bart_config.empty()) {
    bart = bart_config_from_json(load_json(a.bart_config), bart);
    run.inputs.push_back(a.bart_config);
  }
  bart.seed = g.seed.value_or(0);
  GseOptions opt{a.permutations, a.alpha};
  run.seed = bart.seed;
  run.config = {{"bart", json_of(bart)}, {"gse", json_of(opt)}};

  const GseResult r = gse_select(data.features.data, data.y, bart, opt);
  Json j;
  j["response"] = data.response;
  j.update(json_of(r, data.features.names));
  write_json(run, out_path(g, "gse.json"), j);
  for (std::size_t i : r.selected) std::printf("%s\n", data.features.names[i].c_str());

  if (a.dump_split_counts) {
    // Same seed as the unpermuted fit inside G.SE, so the chain is identical.
    BartConfig dbg = bart;
    dbg.record_split_counts = true;
    const BartFit fit = bart_fit(data.features.data, data.y, dbg);
    std::string csv = "draw";
    for (const auto& n : data.features.names) csv += "," + n;
    csv += "\n";
    for (std::size_t draw = 0; draw < fit.split_counts.size(); ++draw) {
      csv += std::to_string(draw);
      for (std::uint32_t c : fit.split_counts[draw]) csv += "," + std::to_string(c);
      csv += "\n";
    }
    write_text(out_path(g, "split_counts.csv"), csv);
    run.outputs.push_back(out_path(g, "split_counts.csv"));
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string suite;
  std::string design;
  std::vector<std::string> ops;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> p;
};

struct SuiteEntry {
  SimDesign design;
  ScreenOptions screen;
  PanConfig pan;
};

PanConfig complex_pan_defaults(const Globals& g) {
  PanConfig c;
  c.scheme = Scheme::kUnaryFirst;
  c.max_iterations = 3;
  c.run_l0 = true;
  c.k = 4;
  c.bart = profile_bart(g);
  return c;
}

std::vector<SuiteEntry> parse_suite(const Globals& g, const Json& doc) {
  const Json list = doc.is_object() && doc.contains("suites") ? doc.at("suites")
                    : doc.is_array()                        ? doc
                                                            : Json::array({doc});
  const std::size_t default_reps = g.profile == "paper" ? 50 : 10;
  std::vector<SuiteEntry> out;
  for (const auto& e : list) {
    if (!e.is_object()) throw ValidationError("suite entries must be JSON objects");
    for (const auto& [key, value] : e.items())
      if (key != "design" && key != "op" && key != "ops" && key != "n" && key != "p" &&
          key != "sigma" && key != "replicates" && key != "seed" && key != "bart" &&
          key != "gse" && key != "pan")
        throw ValidationError("unknown key '" + key + "' in suite entry");
    if (!e.contains("design")) throw ValidationError("suite entry needs a design");
    const SimKind kind = sim_kind_from_name(e.at("design").get<std::string>());
    std::vector<OpKind> ops;
    if (e.contains("op")) ops.push_back(op_from_name(e.at("op").get<std::string>()));
    if (e.contains("ops"))
      for (const auto& n : e.at("ops").get<std::vector<std::string>>()) ops.push_back(op_from_name(n));
    if (kind == SimKind::kComplex) {
      if (!ops.empty()) throw ValidationError("the complex design takes no operator");
      ops = {OpKind::kIdentity};
    } else if (ops.empty()) {
      ops = kind == SimKind::kUnaryScreen ? all_unary_ops() : all_binary_ops();
    }
    for (OpKind op : ops) {
      SuiteEntry s;
      s.design = kind == SimKind::kUnaryScreen    ? SimDesign::unary_screen(op)
                 : kind == SimKind::kBinaryScreen ? SimDesign::binary_screen(op)
                                                  : SimDesign::complex();
      s.design.replicates = default_reps;
      s.design.seed = g.seed.value_or(0);
      try {
        if (e.contains("n")) s.design.n = e.at("n").get<std::size_t>();
        if (e.contains("p")) s.design.p = e.at("p").get<std::size_t>();
        if (e.contains("sigma")) s.design.sigma = e.at("sigma").get<double>();
        if (e.contains("replicates")) s.design.replicates = e.at("replicates").get<std::size_t>();
        if (e.contains("seed") && !g.seed) s.design.seed = e.at("seed").get<std::uint64_t>();
      } catch (const nlohmann::json::exception&) {
        throw ValidationError("suite entry has a field of the wrong type");
      }
      s.design.validate();
      s.screen.bart = profile_bart(g);
      if (e.contains("bart")) s.screen.bart = bart_config_from_json(e.at("bart"), s.screen.bart);
      if (e.contains("gse")) s.screen.gse = gse_options_from_json(e.at("gse"), s.screen.gse);
      s.pan = complex_pan_defaults(g);
      if (e.contains("pan")) s.pan = pan_config_from_json(e.at("pan"), s.pan);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t x : v) s += (s.empty() ? "" : ";") + std::to_string(x);
  return s;
}

int cmd_simulate(const Globals& g, const SimulateArgs& a, Run& run) {
  Json doc;
  if (!a.suite.empty()) {
    doc = load_json(a.suite);
    run.inputs.push_back(a.suite);
  } else if (!a.design.empty()) {
    doc = {{"design", a.design}};
    if (!a.ops.empty()) doc["ops"] = a.ops;
    if (a.p) doc["p"] = *a.p;
  } else {
    throw ValidationError("give --suite or --design");
  }
  if (a.replicates) {
    Json& target = doc.is_object() && doc.contains("suites") ? doc["suites"] : doc;
    if (target.is_array())
      for (auto& e : target) e["replicates"] = *a.replicates;
    else
      target["replicates"] = *a.replicates;
  }
  const auto suite = parse_suite(g, doc);
  run.seed = g.seed.value_or(0);
  Json cfg = Json::array();

  std::vector<ReplicateRow> rows;
  for (const auto& s : suite) {
    Json entry = {{"label", s.design.label()},
                  {"n", s.design.n},
                  {"p", s.design.p},
                  {"sigma", s.design.sigma},
                  {"replicates", s.design.replicates},
                  {"seed", s.design.seed}};
    std::vector<ReplicateRow> got;
    if (s.design.kind == SimKind::kComplex) {
      entry["pan"] = json_of(s.pan);
      got = run_pan_suite(s.design, s.pan);
    } else {
      entry["bart"] = json_of(s.screen.bart);
      entry["gse"] = json_of(s.screen.gse);
      got = run_screen_suite(s.design, s.screen);
    }
    cfg.push_back(entry);
    rows.insert(rows.end(), got.begin(), got.end());
  }
  run.config = {{"suites", cfg}};

  std::string csv =
      "design,method,replicate,tp,fp,fn,precision,recall,f1,max_space,space_sizes,"
      "selected_sizes,co_selected,truth_abs_corr,selected\n";
  for (const auto& r : rows) {
    std::string sel;
    for (const auto& s : r.selected) sel += (sel.empty() ? "" : ";") + s;
    csv += r.design + "," + r.method + "," + std::to_string(r.replicate) + "," +
           std::to_string(r.score.tp) + "," + std::to_string(r.score.fp) + "," +
           std::to_string(r.score.fn) + "," + format_double(r.score.precision) + "," +
           format_double(r.score.recall) + "," + format_double(r.score.f1) + "," +
           std::to_string(r.max_space) + "," + join(r.space_sizes) + "," +
           join(r.selected_sizes) + "," + (r.co_selected ? "1" : "0") + "," +
           (std::isnan(r.truth_abs_corr) ? std::string() : format_double(r.truth_abs_corr)) + "," +
           csv_field(sel) + "\n";
  }
  write_text(out_path(g, "replicates.csv"), csv);
  run.outputs.push_back(out_path(g, "replicates.csv"));

  Json summary = Json::array();
  for (const auto& s : summarize(rows)) {
    summary.push_back(json_of(s));
    std::printf("%-22s %-9s TP=all %zu/%zu  mean TP %.2f  mean FP %.2f  median F1 %.3f  max space %zu\n",
                s.design.c_str(), s.method.c_str(), s.full_recovery, s.replicates, s.mean_tp,
                s.mean_fp, s.median_f1, s.max_space);
  }
  write_json(run, out_path(g, "summary.json"), {{"summary", summary}});

  if (g.emit_plot_data) {
    std::string plot = "design,method,replicate,metric,iteration,value\n";
    for (const auto& r : rows) {
      const std::string key = r.design + "," + r.method + "," + std::to_string(r.replicate) + ",";
      plot += key + "tp,," + std::to_string(r.score.tp) + "\n";
      plot += key + "fp,," + std::to_string(r.score.fp) + "\n";
      plot += key + "f1,," + format_double(r.score.f1) + "\n";
      for (std::size_t i = 0; i < r.space_sizes.size(); ++i)
        plot += key + "space_size," + std::to_string(i) + "," + std::to_string(r.space_sizes[i]) + "\n";
      for (std::size_t i = 0; i < r.selected_sizes.size(); ++i)
        plot += key + "selected_size," + std::to_string(i) + "," +
                std::to_string(r.selected_sizes[i]) + "\n";
    }
    write_text(out_path(g, "plot_data.csv"), plot);
    run.outputs.push_back(out_path(g, "plot_data.csv"));
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args);

int cmd_replay(const std::string& manifest_path) {
  const Json m = load_json(manifest_path);
  if (!m.contains("argv") || !m.contains("outputs") || !m.contains("inputs"))
    throw ValidationError("not a run manifest: " + manifest_path);
  for (const auto& in : m.at("inputs")) {
    const std::string path = in.at("path").get<std::string>();
    if (sha256_file(path) != in.at("sha256").get<std::string>())
      throw ValidationError("input '" + path + "' differs from the one recorded in the manifest");
  }
  const int code = run_cli(m.at("argv").get<std::vector<std::string>>());
  if (code != kOk) return code;
  int status = kOk;
  for (const auto& out : m.at("outputs")) {
    const std::string path = out.at("path").get<std::string>();
    const bool same = sha256_file(path) == out.at("sha256").get<std::string>();
    std::printf("%s %s\n", same ? "identical" : "DIFFERS  ", path.c_str());
    if (!same) status = kReplayMismatch;
  }
  return status;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"iBART: iterative descriptor construction and selection", "ibart"};
  app.set_version_flag("--version", IBART_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master random seed");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--profile", g.profile, "BART chain length: desk (1000/1000) or paper (10000/5000)")
      ->check(CLI::IsMember({"desk", "paper"}));
  app.add_flag("--emit-plot-data", g.emit_plot_data, "simulate: also write long-format plot data");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Evaluate a descriptor space from primary features");
  add_data_options(generate, gen.data);
  generate->add_option("--ops", gen.ops_file, "Operator JSON (steps, unary_ops, binary_ops, ...)");
  generate->add_option("--steps", gen.steps, "Generation steps in order: unary and/or binary")
      ->delimiter(',');
  generate->add_flag("--no-dedup", gen.no_dedup, "Keep correlated duplicates");
  generate->add_flag("--no-unit-filter", gen.no_unit_filter, "Ignore the units row");

  DataArgs select_data;
  PanArgs select_pan;
  auto* select = app.add_subcommand("select", "Run iBART on a dataset");
  add_data_options(select, select_data);
  add_pan_options(select, select_pan);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation suite");
  simulate->add_option("--suite", sim.suite, "Suite JSON");
  simulate->add_option("--design", sim.design, "unary-screen, binary-screen or complex");
  simulate->add_option("--ops", sim.ops, "Operators under test (screen designs)")->delimiter(',');
  simulate->add_option("--replicates", sim.replicates, "Replicates per design");
  simulate->add_option("--p", sim.p, "Number of primary features");

  DataArgs eval_data;
  PanArgs eval_pan;
  EvaluateArgs eval;
  auto* evaluate = app.add_subcommand("evaluate", "Random-split test RMSE of iBART models");
  add_data_options(evaluate, eval_data);
  add_pan_options(evaluate, eval_pan);
  evaluate->add_option("--splits", eval.splits, "Number of random splits");
  evaluate->add_option("--train-fraction", eval.train_fraction, "Training share of each split");
  evaluate->add_option("--k-max", eval.k_max, "Largest model size");

  DataArgs bs_data;
  BartSelectArgs bs;
  auto* bart_select = app.add_subcommand("bart-select", "One BART-G.SE screening pass");
  add_data_options(bart_select, bs_data);
  bart_select->add_option("--bart", bs.bart_config, "BartConfig JSON");
  bart_select->add_option("--permutations", bs.permutations, "Null permutations");
  bart_select->add_option("--alpha", bs.alpha, "Family-wise level");
  bart_select->add_flag("--dump-split-counts", bs.dump_split_counts,
                        "Write per-draw split-rule counts of the unpermuted fit");

  std::string manifest;
  auto* replay = app.add_subcommand("replay", "Rerun a manifest and compare output digests");
  replay->add_option("manifest", manifest, "Manifest JSON")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  spdlog::set_level(spdlog::level::from_str(g.log_level));
  set_thread_count(g.threads ? g.threads : std::max(1u, std::thread::hardware_concurrency()));

  Run run;
  run.argv = args;
  const auto start = std::chrono::steady_clock::now();
  try {
    int code = kOk;
    if (*replay) return cmd_replay(manifest);
    if (*generate) {
      run.command = "generate";
      code = cmd_generate(g, gen, run);
    } else if (*select) {
      run.command = "select";
      code = cmd_select(g, select_data, select_pan, run);
    } else if (*simulate) {
      run.command = "simulate";
      code = cmd_simulate(g, sim, run);
    } else if (*evaluate) {
      run.command = "evaluate";
      code = cmd_evaluate(g, eval_data, eval_pan, eval, run);
    } else if (*bart_select) {
      run.command = "bart-select";
      code = cmd_bart_select(g, bs_data, bs, run);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(g, run, seconds);
    return code;
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const NumericalError& e) {
    spdlog::error("{}", e.what());
    return kNumerical;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("ibart"));
  spdlog::set_pattern("[%l] %v");
  return run_cli(std::vector<std::string>(argv, argv + argc));
}
