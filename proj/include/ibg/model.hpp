#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ibg/autodiff.hpp"
#include "ibg/data.hpp"
#include "ibg/rng.hpp"

namespace ibg {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t high_dim = 64;      // embedding width D
  std::size_t low_dim = 8;        // intrinsic width d
  std::size_t encoder_layers = 1;
  std::size_t num_classes = kNumClasses;
  double beta = 0.1;              // KL weight
  double alpha = 0.5;             // score blend weight
  std::uint64_t seed = 1;
  std::size_t max_len = 28;
  bool use_positions = true;

  void validate() const;
};

enum class ForwardMode { sample, mean };

struct Parameter {
  std::string name;
  ad::Shape shape;
  std::vector<double> value;
  bool frozen = false;
  bool intrinsic = false;  // bottleneck parameter group (separate learning rate)
};

// Everything one forward pass produced, kept on one tape so a single backward
// sweep yields gradients at the embedding and intrinsic layers together.
struct ForwardTrace {
  std::unique_ptr<ad::Tape> tape;
  std::vector<std::size_t> input_ids;  // non-pad prefix fed to the model
  std::size_t sent_len = 0;
  std::size_t aspect_begin = 0, aspect_end = 0;
  bool has_ibil = false;
  bool mean_mode = true;
  ad::Tensor x;          // L x D embedding-layer output
  ad::Tensor mu;         // L x d
  ad::Tensor log_sigma;  // L x d
  ad::Tensor z;          // L x d noise draw (sample mode only)
  ad::Tensor x_hat;      // L x d (mean mode: the mu node itself)
  ad::Tensor x_prime;    // L x D
  ad::Tensor logits;     // 1 x C
  ad::Tensor probs;      // 1 x C
  ad::Tensor ce;         // filled by attach_loss
  ad::Tensor kl;
  ad::Tensor loss;
  std::vector<ad::Tensor> param_leaves;  // aligned with SentimentClassifier::params()

  int predicted_class() const;
};

// Values that replace intermediates during a forward pass; used by the
// attribution methods (interpolated or noised embeddings), the dimension
// masking analysis, and finite-difference checks against activations.
struct ForwardOverrides {
  std::optional<std::vector<double>> x;          // L x D
  std::optional<std::vector<double>> mu;         // L x d
  std::optional<std::vector<double>> log_sigma;  // L x d
};

class SentimentClassifier {
 public:
  static SentimentClassifier create(const ModelConfig& config, const Vocab& vocab);

  // Adds a freshly initialized bottleneck and freezes the embedding and
  // position tables. W_up starts at zero so the function is unchanged.
  void insert_ibil(std::uint64_t seed);

  ForwardTrace forward(const EncodedExample& enc, ForwardMode mode, RngStream* rng = nullptr,
                       const ForwardOverrides* overrides = nullptr) const;

  // Extends the trace's tape with cross-entropy (+ beta * KL when the
  // bottleneck is present) and stores ce/kl/loss on the trace.
  ad::Tensor attach_loss(ForwardTrace& trace, int label, double beta) const;

  const ModelConfig& config() const { return cfg_; }
  ModelConfig& mutable_config() { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  bool has_ibil() const { return has_ibil_; }
  bool frozen_embedding() const { return frozen_embedding_; }

  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }
  Parameter& param(const std::string& name);
  const Parameter& param(const std::string& name) const;
  int param_index(const std::string& name) const;  // -1 if absent

  std::string phase() const { return has_ibil_ ? "ibg" : "base"; }

  // Per-dimension std of the embedding table (noise scale for SmoothGrad).
  std::vector<double> embedding_dim_std() const;

 private:
  ModelConfig cfg_;
  Vocab vocab_;
  std::vector<Parameter> params_;
  bool has_ibil_ = false;
  bool frozen_embedding_ = false;

  friend SentimentClassifier checkpoint_to_model(const std::string& text);
};

}  // namespace ibg
