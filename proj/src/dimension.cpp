#include "ibg/dimension.hpp"

#include <algorithm>
#include <cmath>

#include "ibg/errors.hpp"
#include "ibg/format.hpp"

namespace ibg {

void DimConfig::validate(std::size_t high_dim) const {
  for (std::size_t k : k_list) {
    if (k > high_dim) {
      throw ConfigError("dims: k " + std::to_string(k) + " exceeds high_dim " +
                        std::to_string(high_dim));
    }
  }
  if (frequency_k > high_dim) throw ConfigError("dims: frequency_k exceeds high_dim");
  if (frequency_k < 1) throw ConfigError("dims: frequency_k must be >= 1");
}

std::vector<double> per_dim_importance(const SentimentClassifier& model, const EncodedExample& enc,
                                       TargetKind target, DimRanking ranking) {
  ForwardTrace tr = model.forward(enc, ForwardMode::mean);
  int cls = resolve_target_class(tr, target, enc.label);
  ad::Tensor f = attach_target_scalar(tr, cls);
  tr.tape->backward(f);
  const auto& x = tr.x.value();
  const auto& g = tr.x.grad();
  std::size_t L = tr.x.rows(), D = tr.x.cols();
  std::vector<double> out(D, 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < D; ++j) {
      double v = g[i * D + j];
      if (ranking == DimRanking::grad_input) v *= x[i * D + j];
      out[j] += std::abs(v);
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> top_dims(const std::vector<double>& importance, std::size_t k) {
  std::vector<std::size_t> idx(importance.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (importance[a] != importance[b]) return importance[a] > importance[b];
    return a < b;
  });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

int predict_with_dim_mask(const SentimentClassifier& model, const EncodedExample& enc,
                          const std::vector<std::size_t>& keep_dims, std::size_t D) {
  ForwardTrace clean = model.forward(enc, ForwardMode::mean);
  std::size_t L = clean.x.rows();
  std::vector<char> keep(D, 0);
  for (std::size_t j : keep_dims) keep[j] = 1;
  std::vector<double> masked = clean.x.value();
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < D; ++j) {
      if (!keep[j]) masked[i * D + j] = 0.0;
    }
  }
  ForwardOverrides ov;
  ov.x = std::move(masked);
  return model.forward(enc, ForwardMode::mean, nullptr, &ov).predicted_class();
}

}  // namespace

std::vector<double> topk_dim_mask_accuracy(const SentimentClassifier& model,
                                           const std::vector<EncodedExample>& examples,
                                           const std::vector<std::size_t>& k_list,
                                           const DimConfig& cfg) {
  if (examples.empty()) throw ContractError("dims: empty example set");
  std::size_t D = model.config().high_dim;
  // per-sample (or corpus-global) importance ranking, computed once
  std::vector<std::vector<double>> importance;
  importance.reserve(examples.size());
  for (const auto& enc : examples) {
    importance.push_back(per_dim_importance(model, enc, cfg.target, cfg.ranking));
  }
  std::vector<double> global_mean(D, 0.0);
  if (cfg.scope == DimMaskScope::global) {
    for (const auto& imp : importance) {
      for (std::size_t j = 0; j < D; ++j) global_mean[j] += imp[j];
    }
  }
  std::vector<double> out;
  for (std::size_t k : k_list) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      std::vector<std::size_t> keep =
          cfg.scope == DimMaskScope::per_sample ? top_dims(importance[i], k)
                                                : top_dims(global_mean, k);
      if (predict_with_dim_mask(model, examples[i], keep, D) == examples[i].label) ++correct;
    }
    out.push_back(static_cast<double>(correct) / static_cast<double>(examples.size()));
  }
  return out;
}

std::vector<double> dim_frequency(const SentimentClassifier& model,
                                  const std::vector<EncodedExample>& examples, std::size_t K,
                                  const DimConfig& cfg) {
  if (examples.empty()) throw ContractError("dims: empty example set");
  std::size_t D = model.config().high_dim;
  if (K > D) throw ConfigError("dims: K exceeds high_dim");
  std::vector<double> freq(D, 0.0);
  for (const auto& enc : examples) {
    std::vector<double> imp = per_dim_importance(model, enc, cfg.target, cfg.ranking);
    for (std::size_t j : top_dims(imp, K)) freq[j] += 1.0;
  }
  for (auto& f : freq) f /= static_cast<double>(examples.size());
  return freq;
}

DimReport analyze_dimensions(const SentimentClassifier& model,
                             const std::vector<EncodedExample>& examples, const DimConfig& cfg) {
  std::size_t D = model.config().high_dim;
  cfg.validate(D);
  if (examples.empty()) throw ContractError("dims: empty example set");
  DimReport r;
  r.frequency_k = cfg.frequency_k;
  r.mean_importance.assign(D, 0.0);
  for (const auto& enc : examples) {
    std::vector<double> imp = per_dim_importance(model, enc, cfg.target, cfg.ranking);
    for (std::size_t j = 0; j < D; ++j) r.mean_importance[j] += imp[j];
  }
  for (auto& v : r.mean_importance) v /= static_cast<double>(examples.size());
  r.frequency = dim_frequency(model, examples, cfg.frequency_k, cfg);
  r.top_dims = top_dims(r.frequency, 3);
  r.k_list = cfg.k_list;
  if (std::find(r.k_list.begin(), r.k_list.end(), D) == r.k_list.end()) r.k_list.push_back(D);
  r.masked_accuracy = topk_dim_mask_accuracy(model, examples, r.k_list, cfg);
  return r;
}

std::string DimReport::importance_csv() const {
  std::string out = "dim_index,mean_importance,frequency\n";
  for (std::size_t j = 0; j < mean_importance.size(); ++j) {
    out += csv_row({std::to_string(j), format_double(mean_importance[j]),
                    format_double(frequency[j])});
  }
  return out;
}

std::string DimReport::masking_csv() const {
  std::string out = "k,masked_accuracy\n";
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    out += csv_row({std::to_string(k_list[i]), format_double(masked_accuracy[i])});
  }
  return out;
}

}  // namespace ibg
