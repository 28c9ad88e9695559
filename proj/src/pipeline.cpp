#include "ibg/pipeline.hpp"

#include <algorithm>

#include "ibg/errors.hpp"
#include "ibg/format.hpp"
#include "json.hpp"

namespace ibg {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json default_run_config() {
  GeneratorConfig g = GeneratorConfig::defaults();
  ordered_json j;
  j["split"] = "test";
  j["data"] = {
      {"seed", g.seed},
      {"size", 1500},
      {"noise_rate", g.noise_rate},
      {"multi_aspect_rate", g.multi_aspect_rate},
      {"forced_conflict_rate", g.forced_conflict_rate},
      {"templates", g.templates},
      {"aspects", g.aspects},
      {"positive", g.positive},
      {"negative", g.negative},
      {"neutral", g.neutral},
      {"distractors", g.distractors},
  };
  ModelConfig m;
  j["model"] = {
      {"high_dim", m.high_dim},     {"low_dim", m.low_dim},
      {"encoder_layers", m.encoder_layers}, {"beta", m.beta},
      {"alpha", m.alpha},           {"seed", m.seed},
      {"max_len", m.max_len},       {"use_positions", m.use_positions},
  };
  TrainConfig t;
  j["train"] = {
      {"epochs", t.epochs},         {"batch_size", t.batch_size},
      {"lr_base", t.lr_base},       {"lr_new", t.lr_new},
      {"adam_beta1", t.adam_beta1}, {"adam_beta2", t.adam_beta2},
      {"adam_eps", t.adam_eps},     {"seed", t.seed},
      {"shuffle", t.shuffle},
  };
  AttributionConfig a;
  j["attribution"] = {
      {"alpha", a.alpha},
      {"target", "predicted"},
      {"scalar", "log_prob"},
      {"smoothgrad_samples", a.smoothgrad_samples},
      {"smoothgrad_noise", a.smoothgrad_noise},
      {"ig_steps", a.ig_steps},
      {"ig_baseline", "zero"},
      {"seed", a.seed},
  };
  FaithfulnessConfig f;
  j["faithfulness"] = {
      {"k_max", f.k_max},
      {"ph_k", f.ph_k},
      {"recovery_k", f.recovery_k},
      {"replacement", "mask"},
  };
  j["dims"] = {
      {"k_list", json::array({1, 2, 4, 8, 16, 32})},
      {"frequency_k", 10},
      {"ranking", "grad_input"},
      {"scope", "per_sample"},
  };
  j["explain"] = {{"method", "ibg"}, {"top_k", 3}};
  j["sweep"] = {{"axis", "alpha"}, {"values", json::array({0.0, 0.25, 0.5, 0.75, 1.0})}};
  j["paths"] = {
      {"corpus", "corpus.jsonl"},
      {"base_checkpoint", "base.ckpt.json"},
      {"checkpoint", "ibg.ckpt.json"},
      {"out", "out"},
  };
  return j;
}

void merge_checked(ordered_json& base, const json& user, const std::string& prefix) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) {
      throw ConfigError("config: unknown key '" + path + "'");
    }
    if (base[it.key()].is_object() && it.value().is_object()) {
      merge_checked(base[it.key()], it.value(), path);
    } else if (base[it.key()].is_object() != it.value().is_object()) {
      throw ConfigError("config: key '" + path + "' has the wrong structure");
    } else {
      base[it.key()] = it.value();
    }
  }
}

json parsed(const std::string& text, const char* what) {
  try {
    return json::parse(text.empty() ? "{}" : text);
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string resolve_run_config(const std::string& run_config_json) {
  json user = parsed(run_config_json, "run config");
  if (!user.is_object()) throw ConfigError("config: top level must be a JSON object");
  ordered_json resolved = default_run_config();
  merge_checked(resolved, user, "");
  return resolved.dump(1) + "\n";
}

namespace {

json section(const std::string& resolved_json, const char* name) {
  json j = parsed(resolved_json, "resolved config");
  if (!j.contains(name)) throw ConfigError(std::string("config: missing section '") + name + "'");
  return j[name];
}

}  // namespace

GeneratorConfig generator_config_from_run(const std::string& resolved_json) {
  json d = section(resolved_json, "data");
  GeneratorConfig g;
  g.seed = d.at("seed").get<std::uint64_t>();
  g.size = d.at("size").get<std::size_t>();
  g.noise_rate = d.at("noise_rate").get<double>();
  g.multi_aspect_rate = d.at("multi_aspect_rate").get<double>();
  g.forced_conflict_rate = d.at("forced_conflict_rate").get<double>();
  g.templates = d.at("templates").get<std::vector<std::vector<std::string>>>();
  g.aspects = d.at("aspects").get<std::vector<std::string>>();
  g.positive = d.at("positive").get<std::vector<std::string>>();
  g.negative = d.at("negative").get<std::vector<std::string>>();
  g.neutral = d.at("neutral").get<std::vector<std::string>>();
  g.distractors = d.at("distractors").get<std::vector<std::string>>();
  g.validate();
  return g;
}

ModelConfig model_config_from_run(const std::string& resolved_json) {
  json m = section(resolved_json, "model");
  ModelConfig c;
  c.high_dim = m.at("high_dim").get<std::size_t>();
  c.low_dim = m.at("low_dim").get<std::size_t>();
  c.encoder_layers = m.at("encoder_layers").get<std::size_t>();
  c.beta = m.at("beta").get<double>();
  c.alpha = m.at("alpha").get<double>();
  c.seed = m.at("seed").get<std::uint64_t>();
  c.max_len = m.at("max_len").get<std::size_t>();
  c.use_positions = m.at("use_positions").get<bool>();
  return c;
}

TrainConfig train_config_from_run(const std::string& resolved_json) {
  json t = section(resolved_json, "train");
  TrainConfig c;
  c.epochs = t.at("epochs").get<std::size_t>();
  c.batch_size = t.at("batch_size").get<std::size_t>();
  c.lr_base = t.at("lr_base").get<double>();
  c.lr_new = t.at("lr_new").get<double>();
  c.adam_beta1 = t.at("adam_beta1").get<double>();
  c.adam_beta2 = t.at("adam_beta2").get<double>();
  c.adam_eps = t.at("adam_eps").get<double>();
  c.seed = t.at("seed").get<std::uint64_t>();
  c.shuffle = t.at("shuffle").get<bool>();
  c.validate();
  return c;
}

AttributionConfig attribution_config_from_run(const std::string& resolved_json) {
  json a = section(resolved_json, "attribution");
  AttributionConfig c;
  c.alpha = a.at("alpha").get<double>();
  std::string target = a.at("target").get<std::string>();
  if (target == "predicted") {
    c.target = TargetKind::predicted_class;
  } else if (target == "gold") {
    c.target = TargetKind::gold_class;
  } else {
    throw ConfigError("config: attribution.target must be 'predicted' or 'gold'");
  }
  std::string scalar = a.at("scalar").get<std::string>();
  if (scalar == "log_prob") {
    c.scalar = TargetScalar::log_prob;
  } else if (scalar == "logit") {
    c.scalar = TargetScalar::logit;
  } else {
    throw ConfigError("config: attribution.scalar must be 'log_prob' or 'logit'");
  }
  c.smoothgrad_samples = a.at("smoothgrad_samples").get<std::size_t>();
  c.smoothgrad_noise = a.at("smoothgrad_noise").get<double>();
  c.ig_steps = a.at("ig_steps").get<std::size_t>();
  std::string baseline = a.at("ig_baseline").get<std::string>();
  if (baseline == "zero") {
    c.ig_baseline = IgBaseline::zero_embedding;
  } else if (baseline == "mask") {
    c.ig_baseline = IgBaseline::mask_token_embedding;
  } else {
    throw ConfigError("config: attribution.ig_baseline must be 'zero' or 'mask'");
  }
  c.seed = a.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

FaithfulnessConfig faithfulness_config_from_run(const std::string& resolved_json) {
  json f = section(resolved_json, "faithfulness");
  FaithfulnessConfig c;
  c.k_max = f.at("k_max").get<std::size_t>();
  c.ph_k = f.at("ph_k").get<std::size_t>();
  c.recovery_k = f.at("recovery_k").get<std::size_t>();
  std::string repl = f.at("replacement").get<std::string>();
  if (repl == "mask") {
    c.replacement = Replacement::mask_token;
  } else if (repl == "delete") {
    c.replacement = Replacement::delete_token;
  } else {
    throw ConfigError("config: faithfulness.replacement must be 'mask' or 'delete'");
  }
  c.validate();
  return c;
}

DimConfig dim_config_from_run(const std::string& resolved_json) {
  json d = section(resolved_json, "dims");
  DimConfig c;
  c.k_list = d.at("k_list").get<std::vector<std::size_t>>();
  c.frequency_k = d.at("frequency_k").get<std::size_t>();
  std::string ranking = d.at("ranking").get<std::string>();
  if (ranking == "grad_input") {
    c.ranking = DimRanking::grad_input;
  } else if (ranking == "grad") {
    c.ranking = DimRanking::grad;
  } else {
    throw ConfigError("config: dims.ranking must be 'grad_input' or 'grad'");
  }
  std::string scope = d.at("scope").get<std::string>();
  if (scope == "per_sample") {
    c.scope = DimMaskScope::per_sample;
  } else if (scope == "global") {
    c.scope = DimMaskScope::global;
  } else {
    throw ConfigError("config: dims.scope must be 'per_sample' or 'global'");
  }
  return c;
}

std::string run_config_string(const std::string& resolved_json, const std::string& pointer) {
  json j = parsed(resolved_json, "resolved config");
  json v = j.at(json::json_pointer(pointer));
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::string corpus_audit_json(const Corpus& corpus, const GeneratorConfig& cfg) {
  CorpusAudit a = audit_corpus(corpus, cfg);
  std::size_t train = 0, dev = 0, test = 0;
  for (const auto& ex : corpus.examples) {
    if (ex.split == "train") ++train;
    else if (ex.split == "dev") ++dev;
    else ++test;
  }
  ordered_json j;
  j["examples"] = a.examples;
  j["train"] = train;
  j["dev"] = dev;
  j["test"] = test;
  j["sentences"] = a.sentences;
  j["multi_aspect_sentences"] = a.multi_aspect_sentences;
  j["conflict_sentences"] = a.conflict_sentences;
  j["conflict_fraction"] = a.conflict_fraction();
  j["label_violations"] = a.label_violations;
  return j.dump(1) + "\n";
}

namespace {

std::string method_from(const std::string& resolved_json) {
  return run_config_string(resolved_json, "/explain/method");
}

std::string split_from(const std::string& resolved_json) {
  return run_config_string(resolved_json, "/split");
}

}  // namespace

std::string faithfulness_csv(const SentimentClassifier& model, const Corpus& corpus,
                             const std::string& resolved_json) {
  AttributionConfig attr = attribution_config_from_run(resolved_json);
  FaithfulnessConfig fcfg = faithfulness_config_from_run(resolved_json);
  std::string method = method_from(resolved_json);
  auto examples = encode_split(corpus, split_from(resolved_json), model.vocab(),
                               model.config().max_len);
  ModelPredictor predictor(model);
  MethodScorer scorer(model, method, attr);
  FaithfulnessReport r = faithfulness_report(predictor, examples, scorer, attr.alpha, fcfg);
  return r.to_csv();
}

std::string explain_output(const SentimentClassifier& model, const Corpus& corpus,
                           const std::string& resolved_json) {
  AttributionConfig attr = attribution_config_from_run(resolved_json);
  std::string method = method_from(resolved_json);
  json e = section(resolved_json, "explain");
  std::size_t top_k = e.at("top_k").get<std::size_t>();
  auto examples = encode_split(corpus, split_from(resolved_json), model.vocab(),
                               model.config().max_len);
  return explain_jsonl(model, examples, method, attr, top_k);
}

DimCsvs dims_output(const SentimentClassifier& model, const Corpus& corpus,
                    const std::string& resolved_json) {
  DimConfig cfg = dim_config_from_run(resolved_json);
  AttributionConfig attr = attribution_config_from_run(resolved_json);
  cfg.target = attr.target;
  // curve points beyond this model's width are dropped; k = D is always added
  std::erase_if(cfg.k_list, [&](std::size_t k) { return k > model.config().high_dim; });
  cfg.frequency_k = std::min(cfg.frequency_k, model.config().high_dim);
  auto examples = encode_split(corpus, split_from(resolved_json), model.vocab(),
                               model.config().max_len);
  DimReport r = analyze_dimensions(model, examples, cfg);
  ordered_json summary;
  summary["frequency_k"] = r.frequency_k;
  summary["top_dims_by_frequency"] = r.top_dims;
  ordered_json freqs = ordered_json::array();
  for (std::size_t dim : r.top_dims) freqs.push_back(r.frequency[dim]);
  summary["top_dim_frequencies"] = freqs;
  return {r.importance_csv(), r.masking_csv(), summary.dump(1) + "\n"};
}

SentimentClassifier run_train_base(const Corpus& corpus, const std::string& resolved_json,
                                   std::string& curves_csv) {
  ModelConfig mc = model_config_from_run(resolved_json);
  TrainConfig tc = train_config_from_run(resolved_json);
  Vocab vocab = Vocab::build(corpus);
  SentimentClassifier model = SentimentClassifier::create(mc, vocab);
  TrainResult res = train_base(model, corpus, tc);
  curves_csv = res.curves_csv();
  return model;
}

SentimentClassifier run_train_ibil(const SentimentClassifier& base, const Corpus& corpus,
                                   const std::string& resolved_json, std::string& curves_csv) {
  if (base.has_ibil()) {
    throw ConfigError("train: phase 'ibg' requires a base-phase checkpoint");
  }
  ModelConfig mc = model_config_from_run(resolved_json);
  TrainConfig tc = train_config_from_run(resolved_json);
  SentimentClassifier model = base;  // value copy; the input handle stays usable
  model.mutable_config().low_dim = mc.low_dim;
  model.mutable_config().beta = mc.beta;
  model.mutable_config().alpha = mc.alpha;
  model.mutable_config().validate();
  TrainResult res = train_ibil(model, corpus, tc);
  curves_csv = res.curves_csv();
  return model;
}

std::string sweep_csv(const SentimentClassifier& model, const Corpus& corpus,
                      const std::string& resolved_json) {
  json sw = section(resolved_json, "sweep");
  std::string axis = sw.at("axis").get<std::string>();
  std::vector<double> values = sw.at("values").get<std::vector<double>>();
  if (values.empty()) throw ConfigError("sweep: no values given");
  AttributionConfig attr = attribution_config_from_run(resolved_json);
  FaithfulnessConfig fcfg = faithfulness_config_from_run(resolved_json);
  std::string split = split_from(resolved_json);

  std::string out =
      "axis,value,acc,macro_f1,aopc,ph_acc,precision_at_k,recall_at_k,hit_at_1,final_ce,final_kl\n";
  auto add_row = [&](double value, const EvalReport& ev, const FaithfulnessReport& fr,
                     const std::string& ce, const std::string& kl) {
    out += csv_row({axis, format_double(value), format_double(ev.accuracy),
                    format_double(ev.macro_f1), format_double(fr.aopc), format_double(fr.ph_acc),
                    format_double(fr.precision_at_k), format_double(fr.recall_at_k),
                    format_double(fr.hit_at_1), ce, kl});
  };

  if (axis == "alpha") {
    if (!model.has_ibil()) throw ConfigError("sweep: alpha sweep needs an ibg-phase checkpoint");
    auto examples = encode_split(corpus, split, model.vocab(), model.config().max_len);
    ModelPredictor predictor(model);
    EvalReport ev = evaluate(model, examples);
    for (double v : values) {
      AttributionConfig a = attr;
      a.alpha = v;
      MethodScorer scorer(model, "ibg", a);
      FaithfulnessReport fr = faithfulness_report(predictor, examples, scorer, v, fcfg);
      add_row(v, ev, fr, "", "");
    }
    return out;
  }
  if (axis != "beta" && axis != "low_dim") {
    throw ConfigError("sweep: axis must be alpha, beta or low_dim");
  }
  if (model.has_ibil()) throw ConfigError("sweep: " + axis + " sweep needs a base-phase checkpoint");
  for (double v : values) {
    std::string resolved = resolved_json;
    json patch = parsed(resolved, "resolved config");
    if (axis == "beta") {
      patch["model"]["beta"] = v;
    } else {
      if (v < 1.0 || v != std::floor(v)) throw ConfigError("sweep: low_dim values must be positive integers");
      patch["model"]["low_dim"] = static_cast<std::size_t>(v);
    }
    std::string curves;
    SentimentClassifier trained = run_train_ibil(model, corpus, patch.dump(), curves);
    auto examples = encode_split(corpus, split, trained.vocab(), trained.config().max_len);
    ModelPredictor predictor(trained);
    EvalReport ev = evaluate(trained, examples);
    MethodScorer scorer(trained, "ibg", attr);
    FaithfulnessReport fr = faithfulness_report(predictor, examples, scorer, attr.alpha, fcfg);
    auto rows = parse_csv(curves);
    const auto& last = rows.back();
    add_row(v, ev, fr, last[1], last[2]);
  }
  return out;
}

}  // namespace ibg
