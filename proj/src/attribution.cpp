#include "ibg/attribution.hpp"

#include <algorithm>
#include <cmath>

#include "ibg/errors.hpp"
#include "json.hpp"

namespace ibg {

void AttributionConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("attribution: alpha outside [0, 1]");
  if (smoothgrad_samples < 1) throw ConfigError("attribution: smoothgrad_samples must be >= 1");
  if (smoothgrad_noise < 0.0) throw ConfigError("attribution: smoothgrad_noise must be >= 0");
  if (ig_steps < 2) throw ConfigError("attribution: ig_steps must be >= 2");
}

std::vector<double> normalize_selectable(const std::vector<double>& scores,
                                         const std::vector<bool>& selectable) {
  if (scores.size() != selectable.size()) {
    throw DimensionError("normalize: scores and selectable flags differ in length");
  }
  double sum = 0.0;
  std::size_t n_sel = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (selectable[i]) {
      sum += scores[i];
      ++n_sel;
    }
  }
  if (n_sel == 0) throw ContractError("normalize: no selectable positions");
  std::vector<double> out(scores.size(), 0.0);
  if (sum > 0.0) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (selectable[i]) out[i] = scores[i] / sum;
    }
  } else {
    double u = 1.0 / static_cast<double>(n_sel);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (selectable[i]) out[i] = u;
    }
  }
  return out;
}

int resolve_target_class(const ForwardTrace& trace, TargetKind kind, int gold_label) {
  if (kind == TargetKind::gold_class) {
    if (gold_label < 0) throw ContractError("attribution: gold-class target needs a label");
    return gold_label;
  }
  return trace.predicted_class();
}

ad::Tensor attach_target_scalar(ForwardTrace& trace, int target_class, TargetScalar scalar) {
  if (scalar == TargetScalar::logit) {
    std::vector<double> onehot(trace.logits.cols(), 0.0);
    onehot[static_cast<std::size_t>(target_class)] = 1.0;
    ad::Tensor pick = trace.tape->leaf({trace.logits.cols(), 1}, onehot);
    return trace.tape->matmul(trace.logits, pick);
  }
  // log p(target) = -cross_entropy on the single logits row
  ad::Tensor nll =
      trace.tape->cross_entropy(trace.logits, {static_cast<std::size_t>(target_class)});
  return trace.tape->scale(nll, -1.0);
}

namespace {

std::vector<bool> selectable_flags(const ForwardTrace& trace) {
  std::size_t n = trace.input_ids.size();
  std::vector<bool> out(n, false);
  for (std::size_t i = 0; i < trace.sent_len; ++i) {
    out[i] = !(i >= trace.aspect_begin && i < trace.aspect_end);
  }
  return out;
}

std::vector<double> abs_dot_rows(const std::vector<double>& value, const std::vector<double>& grad,
                                 std::size_t rows, std::size_t cols) {
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += std::abs(value[i * cols + j] * grad[i * cols + j]);
    out[i] = s;
  }
  return out;
}

TokenScores base_scores(const ForwardTrace& trace, const char* method, int target,
                        const AttributionConfig& cfg) {
  TokenScores ts;
  ts.method = method;
  ts.target_class = target;
  ts.predicted = trace.predicted_class();
  ts.alpha = cfg.alpha;
  ts.selectable = selectable_flags(trace);
  return ts;
}

}  // namespace

std::vector<double> grad_input_scores(const ForwardTrace& trace, ScoreLayer layer) {
  if (!trace.mean_mode) throw ContractError("grad_input_scores: trace must be built in mean mode");
  const ad::Tensor* t = nullptr;
  if (layer == ScoreLayer::embedding) {
    t = &trace.x;
  } else {
    if (!trace.has_ibil) {
      throw CapabilityError("grad_input_scores: intrinsic layer requested on a plain model");
    }
    t = &trace.x_hat;
  }
  return abs_dot_rows(t->value(), t->grad(), t->rows(), t->cols());
}

TokenScores simple_gradient(const SentimentClassifier& model, const EncodedExample& enc,
                            const AttributionConfig& cfg) {
  cfg.validate();
  ForwardTrace tr = model.forward(enc, ForwardMode::mean);
  int target = resolve_target_class(tr, cfg.target, enc.label);
  ad::Tensor f = attach_target_scalar(tr, target, cfg.scalar);
  tr.tape->backward(f);
  TokenScores ts = base_scores(tr, "simple", target, cfg);
  ts.gamma = grad_input_scores(tr, ScoreLayer::embedding);
  ts.fscore = normalize_selectable(ts.gamma, ts.selectable);
  return ts;
}

TokenScores smooth_grad(const SentimentClassifier& model, const EncodedExample& enc,
                        const AttributionConfig& cfg) {
  cfg.validate();
  ForwardTrace clean = model.forward(enc, ForwardMode::mean);
  int target = resolve_target_class(clean, cfg.target, enc.label);
  std::size_t L = clean.input_ids.size();
  std::size_t D = model.config().high_dim;
  const std::vector<double>& x0 = clean.x.value();

  std::vector<double> dim_std = model.embedding_dim_std();
  RngStream rng(RngStream::mix(cfg.seed, RngStream::hash_string(enc.example_id)));

  std::vector<double> acc(L, 0.0);
  for (std::size_t s = 0; s < cfg.smoothgrad_samples; ++s) {
    ForwardOverrides ov;
    std::vector<double> noisy = x0;
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < D; ++j) {
        noisy[i * D + j] += rng.normal(0.0, cfg.smoothgrad_noise * dim_std[j]);
      }
    }
    ov.x = std::move(noisy);
    ForwardTrace tr = model.forward(enc, ForwardMode::mean, nullptr, &ov);
    ad::Tensor f = attach_target_scalar(tr, target, cfg.scalar);
    tr.tape->backward(f);
    std::vector<double> s_i = grad_input_scores(tr, ScoreLayer::embedding);
    for (std::size_t i = 0; i < L; ++i) acc[i] += s_i[i];
  }
  for (auto& v : acc) v /= static_cast<double>(cfg.smoothgrad_samples);

  TokenScores ts = base_scores(clean, "smooth", target, cfg);
  ts.gamma = std::move(acc);
  ts.fscore = normalize_selectable(ts.gamma, ts.selectable);
  return ts;
}

TokenScores integrated_gradients(const SentimentClassifier& model, const EncodedExample& enc,
                                 const AttributionConfig& cfg) {
  cfg.validate();
  ForwardTrace clean = model.forward(enc, ForwardMode::mean);
  int target = resolve_target_class(clean, cfg.target, enc.label);
  std::size_t L = clean.input_ids.size();
  std::size_t D = model.config().high_dim;
  const std::vector<double>& x = clean.x.value();

  std::vector<double> baseline(L * D, 0.0);
  if (cfg.ig_baseline == IgBaseline::mask_token_embedding) {
    // mask-token row in place of each token row; position component kept
    const Parameter& emb = model.param("embedding");
    const std::vector<double>* pos = nullptr;
    if (model.config().use_positions) pos = &model.param("position").value;
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < D; ++j) {
        baseline[i * D + j] = emb.value[Vocab::kMask * D + j] + (pos ? (*pos)[i * D + j] : 0.0);
      }
    }
  }

  auto target_value = [&](const std::vector<double>& xv) {
    ForwardOverrides ov;
    ov.x = xv;
    ForwardTrace tr = model.forward(enc, ForwardMode::mean, nullptr, &ov);
    ad::Tensor f = attach_target_scalar(tr, target, cfg.scalar);
    return f.item();
  };

  // Riemann midpoint average of gradients along the straight-line path
  std::vector<double> avg_grad(L * D, 0.0);
  std::vector<double> xk(L * D);
  for (std::size_t k = 1; k <= cfg.ig_steps; ++k) {
    double t = (static_cast<double>(k) - 0.5) / static_cast<double>(cfg.ig_steps);
    for (std::size_t i = 0; i < L * D; ++i) xk[i] = baseline[i] + t * (x[i] - baseline[i]);
    ForwardOverrides ov;
    ov.x = xk;
    ForwardTrace tr = model.forward(enc, ForwardMode::mean, nullptr, &ov);
    ad::Tensor f = attach_target_scalar(tr, target, cfg.scalar);
    tr.tape->backward(f);
    const auto& g = tr.x.grad();
    for (std::size_t i = 0; i < L * D; ++i) avg_grad[i] += g[i];
  }
  for (auto& v : avg_grad) v /= static_cast<double>(cfg.ig_steps);

  TokenScores ts = base_scores(clean, "ig", target, cfg);
  ts.gamma.assign(L, 0.0);
  IgDiagnostics diag;
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < D; ++j) {
      double signed_attr = (x[i * D + j] - baseline[i * D + j]) * avg_grad[i * D + j];
      diag.sum_signed += signed_attr;
      ts.gamma[i] += std::abs(signed_attr);
    }
  }
  diag.delta_f = target_value(x) - target_value(baseline);
  ts.ig = diag;
  ts.fscore = normalize_selectable(ts.gamma, ts.selectable);
  return ts;
}

TokenScores ibg_score(const SentimentClassifier& model, const EncodedExample& enc,
                      const AttributionConfig& cfg) {
  cfg.validate();
  if (!model.has_ibil()) {
    throw CapabilityError("ibg_score: model has no bottleneck layer");
  }
  ForwardTrace tr = model.forward(enc, ForwardMode::mean);
  int target = resolve_target_class(tr, cfg.target, enc.label);
  ad::Tensor f = attach_target_scalar(tr, target, cfg.scalar);
  tr.tape->backward(f);  // one pass serves both layers
  TokenScores ts = base_scores(tr, "ibg", target, cfg);
  ts.gamma = grad_input_scores(tr, ScoreLayer::embedding);
  ts.gamma_hat = grad_input_scores(tr, ScoreLayer::intrinsic);
  std::vector<double> ng = normalize_selectable(ts.gamma, ts.selectable);
  std::vector<double> nh = normalize_selectable(*ts.gamma_hat, ts.selectable);
  ts.fscore.resize(ng.size());
  for (std::size_t i = 0; i < ng.size(); ++i) {
    ts.fscore[i] = (1.0 - cfg.alpha) * ng[i] + cfg.alpha * nh[i];
  }
  return ts;
}

TokenScores score_with_method(const SentimentClassifier& model, const EncodedExample& enc,
                              const std::string& method, const AttributionConfig& cfg) {
  if (method == "simple") return simple_gradient(model, enc, cfg);
  if (method == "smooth") return smooth_grad(model, enc, cfg);
  if (method == "ig") return integrated_gradients(model, enc, cfg);
  if (method == "ibg") return ibg_score(model, enc, cfg);
  throw ConfigError("unknown attribution method '" + method + "'");
}

std::vector<std::size_t> ranking(const TokenScores& scores) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < scores.fscore.size(); ++i) {
    if (scores.selectable[i]) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores.fscore[a] != scores.fscore[b]) return scores.fscore[a] > scores.fscore[b];
    return a < b;
  });
  return idx;
}

OpinionSelection extract_opinion_words(const TokenScores& scores, std::size_t k) {
  if (k < 1) throw ContractError("extract_opinion_words: k must be >= 1");
  std::vector<std::size_t> ranked = ranking(scores);
  OpinionSelection sel;
  if (k >= ranked.size()) {
    sel.indices = ranked;
    sel.clamped = k > ranked.size();
  } else {
    sel.indices.assign(ranked.begin(), ranked.begin() + static_cast<long>(k));
  }
  return sel;
}

std::string explain_jsonl(const SentimentClassifier& model,
                          const std::vector<EncodedExample>& examples, const std::string& method,
                          const AttributionConfig& cfg, std::size_t top_k) {
  std::string out;
  for (const auto& enc : examples) {
    TokenScores ts = score_with_method(model, enc, method, cfg);
    OpinionSelection sel = extract_opinion_words(ts, top_k);
    nlohmann::ordered_json j;
    j["example_id"] = enc.example_id;
    j["tokens"] = enc.display_tokens;
    j["aspect_span"] = {enc.aspect_begin, enc.aspect_end};
    j["method"] = ts.method;
    j["alpha"] = ts.alpha;
    j["scores"] = ts.fscore;
    j["gamma"] = ts.gamma;
    if (ts.gamma_hat) {
      j["gamma_hat"] = *ts.gamma_hat;
    } else {
      j["gamma_hat"] = nullptr;
    }
    j["top_k"] = sel.indices;
    j["predicted"] = ts.predicted;
    j["gold"] = enc.label;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace ibg
