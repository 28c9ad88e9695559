#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ibg/model.hpp"

namespace ibg {

enum class TargetKind { predicted_class, gold_class };
enum class TargetScalar { log_prob, logit };
enum class ScoreLayer { embedding, intrinsic };
enum class IgBaseline { zero_embedding, mask_token_embedding };

struct AttributionConfig {
  double alpha = 0.5;
  TargetKind target = TargetKind::predicted_class;
  TargetScalar scalar = TargetScalar::log_prob;
  std::size_t smoothgrad_samples = 32;
  double smoothgrad_noise = 0.1;  // relative to per-dim embedding-table std
  std::size_t ig_steps = 64;
  IgBaseline ig_baseline = IgBaseline::zero_embedding;
  std::uint64_t seed = 1;  // SmoothGrad stream base; per-example derived

  void validate() const;
};

struct IgDiagnostics {
  double sum_signed = 0.0;  // sum of signed attributions over every (token, dim)
  double delta_f = 0.0;     // F(x) - F(baseline) for the target scalar
};

// Per-token importance for one example. Vectors cover the model input
// (sentence, separator, appended aspect tokens); pad positions are never
// included. fscore is unit-sum over selectable positions.
struct TokenScores {
  std::string method;
  int target_class = -1;  // scalar the gradients were taken against
  int predicted = -1;     // model argmax on the clean input
  double alpha = 0.0;
  std::vector<double> gamma;                      // embedding-layer scores, >= 0
  std::optional<std::vector<double>> gamma_hat;   // intrinsic-layer scores, >= 0
  std::vector<double> fscore;
  std::vector<bool> selectable;
  std::optional<IgDiagnostics> ig;

  std::size_t size() const { return fscore.size(); }
};

// Unit-sum over selectable positions; uniform over selectable when every
// selectable score is zero, so the normalization invariant always holds.
std::vector<double> normalize_selectable(const std::vector<double>& scores,
                                         const std::vector<bool>& selectable);

// Builds the target scalar on the trace's tape: the log-probability of the
// target class by default, or the raw logit (linear in the head output, which
// keeps rankings exactly invariant under positive logit scaling).
int resolve_target_class(const ForwardTrace& trace, TargetKind kind, int gold_label);
ad::Tensor attach_target_scalar(ForwardTrace& trace, int target_class,
                                TargetScalar scalar = TargetScalar::log_prob);

// L1-aggregated |value * grad| per token at the chosen layer. Requires a
// mean-mode trace whose tape already ran backward from the target scalar.
std::vector<double> grad_input_scores(const ForwardTrace& trace, ScoreLayer layer);

TokenScores simple_gradient(const SentimentClassifier& model, const EncodedExample& enc,
                            const AttributionConfig& cfg);
TokenScores smooth_grad(const SentimentClassifier& model, const EncodedExample& enc,
                        const AttributionConfig& cfg);
TokenScores integrated_gradients(const SentimentClassifier& model, const EncodedExample& enc,
                                 const AttributionConfig& cfg);
TokenScores ibg_score(const SentimentClassifier& model, const EncodedExample& enc,
                      const AttributionConfig& cfg);

TokenScores score_with_method(const SentimentClassifier& model, const EncodedExample& enc,
                              const std::string& method, const AttributionConfig& cfg);

struct OpinionSelection {
  std::vector<std::size_t> indices;  // descending score, ties to the lower index
  bool clamped = false;              // k exceeded the selectable count
};

OpinionSelection extract_opinion_words(const TokenScores& scores, std::size_t k);

// Stable ranking of selectable positions: descending score, ties by index.
std::vector<std::size_t> ranking(const TokenScores& scores);

std::string explain_jsonl(const SentimentClassifier& model,
                          const std::vector<EncodedExample>& examples, const std::string& method,
                          const AttributionConfig& cfg, std::size_t top_k);

}  // namespace ibg
