#pragma once

#include <string>
#include <vector>

#include "ibg/attribution.hpp"
#include "ibg/model.hpp"

namespace ibg {

enum class DimRanking { grad_input, grad };   // |x * dF/dx| vs |dF/dx| per dimension
enum class DimMaskScope { per_sample, global };

struct DimConfig {
  std::vector<std::size_t> k_list;  // masking curve points; high_dim appended if missing
  std::size_t frequency_k = 10;
  DimRanking ranking = DimRanking::grad_input;
  DimMaskScope scope = DimMaskScope::per_sample;
  TargetKind target = TargetKind::predicted_class;

  void validate(std::size_t high_dim) const;
};

// Per-dimension importance for one example: sum over tokens of the per-(token,
// dim) products that grad_input_scores aggregates per token.
std::vector<double> per_dim_importance(const SentimentClassifier& model, const EncodedExample& enc,
                                       TargetKind target, DimRanking ranking);

struct DimReport {
  std::vector<double> mean_importance;          // length D, corpus mean
  std::vector<double> frequency;                // fraction of samples with dim in top-K
  std::vector<std::size_t> top_dims;            // top 3 by frequency
  std::vector<std::size_t> k_list;
  std::vector<double> masked_accuracy;          // aligned with k_list
  std::size_t frequency_k = 0;

  std::string importance_csv() const;           // dim_index, mean_importance, frequency
  std::string masking_csv() const;              // k, masked_accuracy
};

// Accuracy when, per sample, every embedding dimension outside that sample's
// top-k is zeroed before the encoder runs.
std::vector<double> topk_dim_mask_accuracy(const SentimentClassifier& model,
                                           const std::vector<EncodedExample>& examples,
                                           const std::vector<std::size_t>& k_list,
                                           const DimConfig& cfg);

std::vector<double> dim_frequency(const SentimentClassifier& model,
                                  const std::vector<EncodedExample>& examples, std::size_t K,
                                  const DimConfig& cfg);

DimReport analyze_dimensions(const SentimentClassifier& model,
                             const std::vector<EncodedExample>& examples, const DimConfig& cfg);

}  // namespace ibg
