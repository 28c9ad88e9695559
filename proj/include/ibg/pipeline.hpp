#pragma once

#include <string>

#include "ibg/attribution.hpp"
#include "ibg/data.hpp"
#include "ibg/dimension.hpp"
#include "ibg/faithfulness.hpp"
#include "ibg/train.hpp"

namespace ibg {

// Fills every omitted field with its default and rejects unknown keys, so a
// written config.lock.json fully determines a rerun. Input may be "" or "{}".
std::string resolve_run_config(const std::string& run_config_json);

GeneratorConfig generator_config_from_run(const std::string& resolved_json);
ModelConfig model_config_from_run(const std::string& resolved_json);
TrainConfig train_config_from_run(const std::string& resolved_json);
AttributionConfig attribution_config_from_run(const std::string& resolved_json);
FaithfulnessConfig faithfulness_config_from_run(const std::string& resolved_json);
DimConfig dim_config_from_run(const std::string& resolved_json);
std::string run_config_string(const std::string& resolved_json, const std::string& pointer);

std::string corpus_audit_json(const Corpus& corpus, const GeneratorConfig& cfg);

// Faithfulness CSV for the configured method on the configured split.
std::string faithfulness_csv(const SentimentClassifier& model, const Corpus& corpus,
                             const std::string& resolved_json);

// axis alpha: rescoring only; axes beta / low_dim: retrains phase 2 per value
// starting from the given base-phase model.
std::string sweep_csv(const SentimentClassifier& model, const Corpus& corpus,
                      const std::string& resolved_json);

std::string explain_output(const SentimentClassifier& model, const Corpus& corpus,
                           const std::string& resolved_json);

struct DimCsvs {
  std::string importance;
  std::string masking;
  std::string summary_json;  // frequency_k and the top-3 dimensions by frequency
};
DimCsvs dims_output(const SentimentClassifier& model, const Corpus& corpus,
                    const std::string& resolved_json);

// Applies the run config's model overrides to a base checkpoint and runs
// phase 2; returns the trained model and fills curves_csv.
SentimentClassifier run_train_ibil(const SentimentClassifier& base, const Corpus& corpus,
                                   const std::string& resolved_json, std::string& curves_csv);
SentimentClassifier run_train_base(const Corpus& corpus, const std::string& resolved_json,
                                   std::string& curves_csv);

}  // namespace ibg
