#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ibg/model.hpp"

namespace ibg {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double lr_base = 1e-3;  // pre-existing parameters
  double lr_new = 1e-2;   // bottleneck parameters (1:10 ratio preserved)
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  bool shuffle = true;

  void validate() const;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;

  static AdamState init(const std::vector<Parameter>& params);
};

// One Adam update over all non-frozen parameters. grads and lrs are aligned
// with params; frozen parameters are skipped entirely (values and state
// buffers stay bit-identical).
void adam_step(std::vector<Parameter>& params, const std::vector<std::vector<double>>& grads,
               AdamState& state, const std::vector<double>& lrs, const TrainConfig& cfg);

struct EpochStats {
  std::size_t epoch = 0;
  double ce = 0.0;
  double kl = 0.0;
  double total = 0.0;
  double dev_acc = 0.0;
  double dev_macro_f1 = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> curve;
  std::string curves_csv() const;  // epoch, ce, kl, total, dev_acc, dev_macro_f1
};

struct EvalReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::array<double, kNumClasses> precision{};
  std::array<double, kNumClasses> recall{};
  std::array<double, kNumClasses> f1{};
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};  // [gold][pred]
  std::size_t total = 0;

  std::string to_json() const;
};

EvalReport report_from_confusion(
    const std::array<std::array<std::size_t, kNumClasses>, kNumClasses>& confusion);

std::vector<EncodedExample> encode_split(const Corpus& corpus, const std::string& split,
                                         const Vocab& vocab, std::size_t max_len);

EvalReport evaluate(const SentimentClassifier& model, const std::vector<EncodedExample>& examples);
EvalReport evaluate(const SentimentClassifier& model, const Corpus& corpus,
                    const std::string& split);

// Phase 1: plain model, cross-entropy only, single learning rate.
TrainResult train_base(SentimentClassifier& model, const Corpus& corpus, const TrainConfig& cfg);

// Phase 2: inserts the bottleneck, freezes embedding/position tables, trains
// CE + beta*KL in sample mode with dual learning rates.
TrainResult train_ibil(SentimentClassifier& model, const Corpus& corpus, const TrainConfig& cfg);

}  // namespace ibg
