// Command-line front end. All numerics go through the C API in ibg.h; this
// file only handles argument parsing, config merging and file placement.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ibg.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> sets;
  std::string out_dir;  // --out beats IBG_OUT_DIR beats config file
};

[[noreturn]] void fail(int status, const std::string& message) {
  const char* category = "internal";
  switch (status) {
    case IBG_E_IO: category = "io"; break;
    case IBG_E_PARSE: category = "parse"; break;
    case IBG_E_CONFIG: category = "config"; break;
    case IBG_E_FORMAT: category = "format"; break;
    case IBG_E_VALIDATION: category = "validation"; break;
    case IBG_E_CONTRACT: category = "contract"; break;
    case IBG_E_DIMENSION: category = "dimension"; break;
    case IBG_E_INDEX: category = "index"; break;
    case IBG_E_CAPABILITY: category = "capability"; break;
    default: break;
  }
  std::cerr << "error: category=" << category << " message=\"" << message << "\"\n";
  std::exit(status == IBG_OK ? IBG_E_INTERNAL : status);
}

void check(int status) {
  if (status != IBG_OK) fail(status, ibg_last_error());
}

std::string take(char* s) {
  std::string out = s ? s : "";
  ibg_string_free(s);
  return out;
}

json parse_or_string(const std::string& text) {
  try {
    return json::parse(text);
  } catch (...) {
    return json(text);
  }
}

void apply_set(json& cfg, const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(IBG_E_CONFIG, "--set expects key.path=value, got '" + spec + "'");
  }
  std::string key = spec.substr(0, eq);
  json value = parse_or_string(spec.substr(eq + 1));
  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) fail(IBG_E_CONFIG, "--set has an empty key segment in '" + spec + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

// defaults < config file < IBG_OUT_DIR < flags; returns the fully resolved
// lock text from the core.
std::string resolve(const CommonOpts& opts, const std::vector<std::string>& extra_sets = {}) {
  json user = json::object();
  if (!opts.config_file.empty()) {
    std::ifstream in(opts.config_file);
    if (!in) fail(IBG_E_IO, "cannot open config file: " + opts.config_file);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      user = json::parse(ss.str());
    } catch (const json::exception& e) {
      fail(IBG_E_PARSE, "config file: " + std::string(e.what()));
    }
  }
  if (const char* env = std::getenv("IBG_OUT_DIR"); env && *env) {
    user["paths"]["out"] = std::string(env);
  }
  for (const auto& s : opts.sets) apply_set(user, s);
  for (const auto& s : extra_sets) apply_set(user, s);
  if (!opts.out_dir.empty()) user["paths"]["out"] = opts.out_dir;
  char* resolved = nullptr;
  check(ibg_resolve_config(user.dump().c_str(), &resolved));
  return take(resolved);
}

std::string out_dir_of(const std::string& resolved) {
  return json::parse(resolved)["paths"]["out"].get<std::string>();
}

// artifact paths are relative to the output directory unless absolute
std::string artifact_path(const std::string& resolved, const std::string& name) {
  std::string p = json::parse(resolved)["paths"][name].get<std::string>();
  if (fs::path(p).is_absolute()) return p;
  return (fs::path(out_dir_of(resolved)) / p).string();
}

void write_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(IBG_E_IO, "cannot write " + path);
  out << content;
}

void write_lock(const std::string& resolved) {
  write_file((fs::path(out_dir_of(resolved)) / "config.lock.json").string(), resolved);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(IBG_E_IO, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CorpusHandle {
  ibg_corpus* ptr = nullptr;
  ~CorpusHandle() { ibg_corpus_free(ptr); }
};

struct ModelHandle {
  ibg_model* ptr = nullptr;
  ~ModelHandle() { ibg_model_free(ptr); }
};

void load_corpus(const std::string& resolved, CorpusHandle& corpus) {
  check(ibg_corpus_load(artifact_path(resolved, "corpus").c_str(), &corpus.ptr));
}

int cmd_gen_data(const CommonOpts& opts) {
  std::string resolved = resolve(opts);
  CorpusHandle corpus;
  check(ibg_corpus_generate(resolved.c_str(), &corpus.ptr));
  std::string corpus_path = artifact_path(resolved, "corpus");
  fs::path p(corpus_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  check(ibg_corpus_save(corpus.ptr, corpus_path.c_str()));
  char* audit = nullptr;
  check(ibg_corpus_audit(corpus.ptr, resolved.c_str(), &audit));
  std::string audit_text = take(audit);
  write_file((fs::path(out_dir_of(resolved)) / "audit.json").string(), audit_text);
  write_lock(resolved);
  std::cout << audit_text;
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& phase) {
  std::string resolved = resolve(opts);
  CorpusHandle corpus;
  load_corpus(resolved, corpus);
  ModelHandle model;
  char* curves = nullptr;
  std::string ckpt_path, curves_name;
  if (phase == "base") {
    check(ibg_train_base(resolved.c_str(), corpus.ptr, &model.ptr, &curves));
    ckpt_path = artifact_path(resolved, "base_checkpoint");
    curves_name = "curves_base.csv";
  } else if (phase == "ibg") {
    ModelHandle base;
    check(ibg_model_load(artifact_path(resolved, "base_checkpoint").c_str(), &base.ptr));
    check(ibg_train_ibil(resolved.c_str(), base.ptr, corpus.ptr, &model.ptr, &curves));
    ckpt_path = artifact_path(resolved, "checkpoint");
    curves_name = "curves_ibg.csv";
  } else {
    fail(IBG_E_CONFIG, "--phase must be 'base' or 'ibg'");
  }
  std::string curves_text = take(curves);
  fs::path cp(ckpt_path);
  if (cp.has_parent_path()) fs::create_directories(cp.parent_path());
  check(ibg_model_save(model.ptr, ckpt_path.c_str()));
  write_file((fs::path(out_dir_of(resolved)) / curves_name).string(), curves_text);
  char* dev_report = nullptr;
  check(ibg_evaluate(model.ptr, corpus.ptr, "dev", &dev_report));
  std::string report = take(dev_report);
  write_file((fs::path(out_dir_of(resolved)) / ("eval_dev_" + phase + ".json")).string(),
             report + "\n");
  write_lock(resolved);
  std::cout << report << "\n";
  return 0;
}

int cmd_explain(const CommonOpts& opts) {
  std::string resolved = resolve(opts);
  CorpusHandle corpus;
  load_corpus(resolved, corpus);
  ModelHandle model;
  check(ibg_model_load(artifact_path(resolved, "checkpoint").c_str(), &model.ptr));
  char* jsonl = nullptr;
  check(ibg_explain(resolved.c_str(), model.ptr, corpus.ptr, &jsonl));
  write_file((fs::path(out_dir_of(resolved)) / "explanations.jsonl").string(), take(jsonl));
  write_lock(resolved);
  return 0;
}

int cmd_eval_faithfulness(const CommonOpts& opts) {
  std::string resolved = resolve(opts);
  CorpusHandle corpus;
  load_corpus(resolved, corpus);
  ModelHandle model;
  check(ibg_model_load(artifact_path(resolved, "checkpoint").c_str(), &model.ptr));
  char* csv = nullptr;
  check(ibg_eval_faithfulness(resolved.c_str(), model.ptr, corpus.ptr, &csv));
  std::string method = json::parse(resolved)["explain"]["method"].get<std::string>();
  std::string text = take(csv);
  write_file((fs::path(out_dir_of(resolved)) / ("faithfulness_" + method + ".csv")).string(), text);
  write_lock(resolved);
  std::cout << text;
  return 0;
}

int cmd_analyze_dims(const CommonOpts& opts) {
  std::string resolved = resolve(opts);
  CorpusHandle corpus;
  load_corpus(resolved, corpus);
  ModelHandle model;
  check(ibg_model_load(artifact_path(resolved, "checkpoint").c_str(), &model.ptr));
  char* importance = nullptr;
  char* masking = nullptr;
  char* summary = nullptr;
  check(ibg_analyze_dims(resolved.c_str(), model.ptr, corpus.ptr, &importance, &masking, &summary));
  write_file((fs::path(out_dir_of(resolved)) / "dim_importance.csv").string(), take(importance));
  write_file((fs::path(out_dir_of(resolved)) / "dim_masking.csv").string(), take(masking));
  std::string summary_text = take(summary);
  write_file((fs::path(out_dir_of(resolved)) / "dim_summary.json").string(), summary_text);
  write_lock(resolved);
  std::cout << summary_text;
  return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& axis, const std::string& values) {
  std::vector<std::string> extra;
  if (!axis.empty()) extra.push_back("sweep.axis=" + axis);
  if (!values.empty()) extra.push_back("sweep.values=[" + values + "]");
  std::string resolved = resolve(opts, extra);
  CorpusHandle corpus;
  load_corpus(resolved, corpus);
  std::string resolved_axis = json::parse(resolved)["sweep"]["axis"].get<std::string>();
  // alpha rescoring uses the trained bottleneck model; beta / low_dim retrain
  // from the base checkpoint
  std::string ckpt = resolved_axis == "alpha" ? "checkpoint" : "base_checkpoint";
  ModelHandle model;
  check(ibg_model_load(artifact_path(resolved, ckpt).c_str(), &model.ptr));
  char* csv = nullptr;
  check(ibg_sweep(resolved.c_str(), model.ptr, corpus.ptr, &csv));
  std::string text = take(csv);
  write_file((fs::path(out_dir_of(resolved)) / ("sweep_" + resolved_axis + ".csv")).string(), text);
  write_lock(resolved);
  std::cout << text;
  return 0;
}

int cmd_report(const CommonOpts& opts) {
  std::string resolved = resolve(opts);
  fs::path dir(out_dir_of(resolved));
  if (!fs::exists(dir)) fail(IBG_E_IO, "output directory does not exist: " + dir.string());
  auto render = [&](const std::string& csv_name, const std::string& kind,
                    const std::string& svg_name) {
    fs::path src = dir / csv_name;
    if (!fs::exists(src)) return;
    char* svg = nullptr;
    check(ibg_render_chart(kind.c_str(), read_file(src.string()).c_str(), &svg));
    write_file((dir / svg_name).string(), take(svg));
  };
  render("curves_base.csv", "curves", "curves_base.svg");
  render("curves_ibg.csv", "curves", "curves_ibg.svg");
  std::string combined;
  for (const char* m : {"simple", "smooth", "ig", "ibg"}) {
    render("faithfulness_" + std::string(m) + ".csv", "faithfulness",
           "faithfulness_" + std::string(m) + ".svg");
    fs::path src = dir / ("faithfulness_" + std::string(m) + ".csv");
    if (fs::exists(src)) combined += read_file(src.string());
  }
  if (!combined.empty()) {
    char* svg = nullptr;
    check(ibg_render_chart("faithfulness_bars", combined.c_str(), &svg));
    write_file((dir / "faithfulness_summary.svg").string(), take(svg));
  }
  for (const char* a : {"alpha", "beta", "low_dim"}) {
    render("sweep_" + std::string(a) + ".csv", "sweep", "sweep_" + std::string(a) + ".svg");
  }
  render("dim_importance.csv", "dim_importance", "dim_importance.svg");
  render("dim_importance.csv", "dim_frequency", "dim_frequency.svg");
  render("dim_masking.csv", "dim_masking", "dim_masking.svg");
  write_lock(resolved);
  return 0;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_file, "run-config JSON file");
  cmd->add_option("--set", opts.sets, "override a config key, e.g. --set train.epochs=5");
  cmd->add_option("--out", opts.out_dir, "output directory (overrides paths.out)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"information-bottleneck gradient attribution pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string phase = "base", axis, values;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic corpus");
  add_common(gen, opts);
  auto* train = app.add_subcommand("train", "train phase 'base' or 'ibg'");
  add_common(train, opts);
  train->add_option("--phase", phase, "base | ibg")->required();
  auto* explain = app.add_subcommand("explain", "emit per-example token scores");
  add_common(explain, opts);
  explain->add_option("--method", [&opts](const std::vector<std::string>& v) {
    opts.sets.push_back("explain.method=" + v[0]);
    return true;
  }, "simple | smooth | ig | ibg");
  auto* faith = app.add_subcommand("eval-faithfulness", "deletion metrics and opinion recovery");
  add_common(faith, opts);
  faith->add_option("--method", [&opts](const std::vector<std::string>& v) {
    opts.sets.push_back("explain.method=" + v[0]);
    return true;
  }, "simple | smooth | ig | ibg");
  auto* dims = app.add_subcommand("analyze-dims", "per-dimension importance analyses");
  add_common(dims, opts);
  auto* sweep = app.add_subcommand("sweep", "sweep alpha, beta or low_dim");
  add_common(sweep, opts);
  sweep->add_option("--axis", axis, "alpha | beta | low_dim");
  sweep->add_option("--values", values, "comma-separated values");
  auto* report = app.add_subcommand("report", "render SVG charts from emitted CSVs");
  add_common(report, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(opts);
    if (train->parsed()) return cmd_train(opts, phase);
    if (explain->parsed()) return cmd_explain(opts);
    if (faith->parsed()) return cmd_eval_faithfulness(opts);
    if (dims->parsed()) return cmd_analyze_dims(opts);
    if (sweep->parsed()) return cmd_sweep(opts, axis, values);
    if (report->parsed()) return cmd_report(opts);
  } catch (const std::exception& e) {
    fail(IBG_E_INTERNAL, e.what());
  }
  return 0;
}
