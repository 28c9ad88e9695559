#pragma once

#include <string>
#include <vector>

#include "ibg/attribution.hpp"
#include "ibg/model.hpp"

namespace ibg {

enum class PerturbMode { remove_top_k, keep_top_k };
enum class Replacement { mask_token, delete_token };

// Aspect span and separator positions always survive perturbation; without
// the aspect the prediction task is undefined.
struct PerturbationPolicy {
  PerturbMode mode = PerturbMode::remove_top_k;
  Replacement replacement = Replacement::mask_token;
};

// Anything that can classify an encoded example; lets mock detectors stand in
// for the trained model when validating the metrics themselves.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual int predict(const EncodedExample& enc) const = 0;
};

class ModelPredictor : public Predictor {
 public:
  explicit ModelPredictor(const SentimentClassifier& model) : model_(model) {}
  int predict(const EncodedExample& enc) const override {
    return model_.forward(enc, ForwardMode::mean).predicted_class();
  }

 private:
  const SentimentClassifier& model_;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual TokenScores score(const EncodedExample& enc) const = 0;
  virtual std::string name() const = 0;
};

class MethodScorer : public Scorer {
 public:
  MethodScorer(const SentimentClassifier& model, std::string method, AttributionConfig cfg)
      : model_(model), method_(std::move(method)), cfg_(cfg) {}
  TokenScores score(const EncodedExample& enc) const override {
    return score_with_method(model_, enc, method_, cfg_);
  }
  std::string name() const override { return method_; }
  const AttributionConfig& config() const { return cfg_; }

 private:
  const SentimentClassifier& model_;
  std::string method_;
  AttributionConfig cfg_;
};

EncodedExample perturb(const EncodedExample& enc, const TokenScores& scores,
                       const PerturbationPolicy& policy, std::size_t k);

struct FaithfulnessConfig {
  std::size_t k_max = 5;   // AOPC curve depth
  std::size_t ph_k = 3;    // Ph-Acc keep count
  std::size_t recovery_k = 1;
  Replacement replacement = Replacement::mask_token;

  void validate() const;
};

struct FaithfulnessReport {
  std::string method;
  double alpha = 0.0;
  double acc0 = 0.0;                 // unperturbed accuracy, fraction
  std::vector<double> acc_curve;     // acc_k for k = 1..k_max, fraction
  double aopc = 0.0;                 // percent
  double ph_acc = 0.0;               // percent
  std::size_t k_max = 0;
  std::size_t ph_k = 0;
  double precision_at_k = 0.0;
  double recall_at_k = 0.0;
  double hit_at_1 = 0.0;
  std::size_t recovery_k = 0;
  std::size_t skipped_missing_gold = 0;

  // method, alpha, k, acc_k, aopc, ph_acc, precision_at_k, recall_at_k, hit_at_1
  std::string to_csv() const;
};

double aopc_from_curve(double acc0, const std::vector<double>& acc_curve);

FaithfulnessReport aopc(const Predictor& predictor, const std::vector<EncodedExample>& examples,
                        const Scorer& scorer, std::size_t k_max, Replacement replacement);
FaithfulnessReport ph_acc(const Predictor& predictor, const std::vector<EncodedExample>& examples,
                          const Scorer& scorer, std::size_t k);

struct RecoveryReport {
  double precision_at_k = 0.0;
  double recall_at_k = 0.0;
  double hit_at_1 = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped_missing_gold = 0;
};

RecoveryReport opinion_recovery(const std::vector<EncodedExample>& examples, const Scorer& scorer,
                                std::size_t k);

// Full report: AOPC curve, Ph-Acc and opinion recovery in one pass per policy.
FaithfulnessReport faithfulness_report(const Predictor& predictor,
                                       const std::vector<EncodedExample>& examples,
                                       const Scorer& scorer, double alpha,
                                       const FaithfulnessConfig& cfg);

}  // namespace ibg
