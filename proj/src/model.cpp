#include "ibg/model.hpp"

#include <algorithm>
#include <cmath>

#include "ibg/errors.hpp"

namespace ibg {

void ModelConfig::validate() const {
  if (vocab_size == 0) throw ConfigError("model: vocab_size must be positive");
  if (low_dim < 1 || low_dim >= high_dim) {
    throw ConfigError("model: need 1 <= low_dim < high_dim, got low_dim=" +
                      std::to_string(low_dim) + " high_dim=" + std::to_string(high_dim));
  }
  if (num_classes != kNumClasses) throw ConfigError("model: num_classes must be 3");
  if (beta < 0.0) throw ConfigError("model: beta must be >= 0");
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("model: alpha outside [0, 1]");
  if (encoder_layers < 1) throw ConfigError("model: at least one encoder layer");
  if (max_len < 3) throw ConfigError("model: max_len too small");
}

int ForwardTrace::predicted_class() const {
  const auto& p = probs.value();
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return static_cast<int>(best);
}

namespace {

std::vector<double> gaussian_init(RngStream& rng, std::size_t n, double stddev) {
  return rng.normal_vector(n, 0.0, stddev);
}

}  // namespace

SentimentClassifier SentimentClassifier::create(const ModelConfig& config, const Vocab& vocab) {
  ModelConfig cfg = config;
  cfg.vocab_size = vocab.size();
  cfg.validate();
  SentimentClassifier m;
  m.cfg_ = cfg;
  m.vocab_ = vocab;
  RngStream rng(cfg.seed);
  std::size_t D = cfg.high_dim;
  auto add = [&](const std::string& name, ad::Shape shape, std::vector<double> value) {
    m.params_.push_back({name, std::move(shape), std::move(value), false, false});
  };
  add("embedding", {cfg.vocab_size, D}, gaussian_init(rng, cfg.vocab_size * D, 0.3));
  add("position", {cfg.max_len, D}, gaussian_init(rng, cfg.max_len * D, 0.3));
  double enc_std = 1.0 / std::sqrt(static_cast<double>(D));
  for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
    std::string p = "enc" + std::to_string(l) + ".";
    add(p + "wq", {D, D}, gaussian_init(rng, D * D, enc_std));
    add(p + "wk", {D, D}, gaussian_init(rng, D * D, enc_std));
    add(p + "wv", {D, D}, gaussian_init(rng, D * D, enc_std));
    add(p + "wo", {D, D}, gaussian_init(rng, D * D, enc_std));
    add(p + "w_ff", {D, D}, gaussian_init(rng, D * D, enc_std));
    add(p + "b_ff", {D}, std::vector<double>(D, 0.0));
  }
  add("head.w", {D, cfg.num_classes}, gaussian_init(rng, D * cfg.num_classes, enc_std));
  add("head.b", {cfg.num_classes}, std::vector<double>(cfg.num_classes, 0.0));
  return m;
}

void SentimentClassifier::insert_ibil(std::uint64_t seed) {
  if (has_ibil_) throw ConfigError("model: bottleneck already present");
  cfg_.validate();
  RngStream rng(RngStream::mix(seed, 0x1b11));
  std::size_t D = cfg_.high_dim, d = cfg_.low_dim;
  auto add = [&](const std::string& name, ad::Shape shape, std::vector<double> value) {
    params_.push_back({name, std::move(shape), std::move(value), false, true});
  };
  add("ibil.w_mu", {D, d}, gaussian_init(rng, D * d, 0.02));
  add("ibil.b_mu", {d}, std::vector<double>(d, 0.0));
  add("ibil.w_xi", {D, d}, gaussian_init(rng, D * d, 0.02));
  add("ibil.b_xi", {d}, std::vector<double>(d, 0.0));
  // zero upsampling: training starts exactly at the base model's function
  add("ibil.w_up", {d, D}, std::vector<double>(d * D, 0.0));
  has_ibil_ = true;
  frozen_embedding_ = true;
  param("embedding").frozen = true;
  param("position").frozen = true;
}

int SentimentClassifier::param_index(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

Parameter& SentimentClassifier::param(const std::string& name) {
  int i = param_index(name);
  if (i < 0) throw ContractError("model: no parameter named '" + name + "'");
  return params_[static_cast<std::size_t>(i)];
}

const Parameter& SentimentClassifier::param(const std::string& name) const {
  int i = param_index(name);
  if (i < 0) throw ContractError("model: no parameter named '" + name + "'");
  return params_[static_cast<std::size_t>(i)];
}

std::vector<double> SentimentClassifier::embedding_dim_std() const {
  const Parameter& emb = param("embedding");
  std::size_t v = emb.shape[0], d = emb.shape[1];
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (std::size_t i = 0; i < v; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += emb.value[i * d + j];
  }
  for (auto& m : mean) m /= static_cast<double>(v);
  for (std::size_t i = 0; i < v; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double diff = emb.value[i * d + j] - mean[j];
      var[j] += diff * diff;
    }
  }
  std::vector<double> out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = std::sqrt(var[j] / static_cast<double>(v));
  return out;
}

ForwardTrace SentimentClassifier::forward(const EncodedExample& enc, ForwardMode mode,
                                          RngStream* rng, const ForwardOverrides* overrides) const {
  if (enc.length == 0 || enc.sent_len == 0) throw ContractError("forward: empty sentence");
  if (enc.length > cfg_.max_len) {
    throw ContractError("forward: example length " + std::to_string(enc.length) +
                        " exceeds max_len " + std::to_string(cfg_.max_len));
  }
  if (enc.aspect_begin >= enc.aspect_end || enc.aspect_end > enc.sent_len) {
    throw ContractError("forward: empty or out-of-range aspect mask");
  }
  if (mode == ForwardMode::sample && rng == nullptr) {
    throw ContractError("forward: sample mode requires an rng stream");
  }

  ForwardTrace tr;
  tr.tape = std::make_unique<ad::Tape>();
  ad::Tape& tape = *tr.tape;
  tr.input_ids.assign(enc.ids.begin(), enc.ids.begin() + static_cast<long>(enc.length));
  for (std::size_t id : tr.input_ids) {
    if (id >= cfg_.vocab_size) {
      throw IndexError("forward: token id " + std::to_string(id) + " outside vocab of " +
                       std::to_string(cfg_.vocab_size));
    }
  }
  tr.sent_len = enc.sent_len;
  tr.aspect_begin = enc.aspect_begin;
  tr.aspect_end = enc.aspect_end;
  tr.has_ibil = has_ibil_;
  tr.mean_mode = (mode == ForwardMode::mean);

  std::size_t L = enc.length;
  std::size_t D = cfg_.high_dim;

  tr.param_leaves.resize(params_.size());
  auto leaf_of = [&](const std::string& name) -> ad::Tensor {
    int idx = param_index(name);
    const Parameter& p = params_[static_cast<std::size_t>(idx)];
    if (!tr.param_leaves[static_cast<std::size_t>(idx)].valid()) {
      tr.param_leaves[static_cast<std::size_t>(idx)] = tape.leaf(p.shape, p.value);
    }
    return tr.param_leaves[static_cast<std::size_t>(idx)];
  };

  // embedding layer: token rows (+ position rows)
  ad::Tensor x = tape.gather_rows(leaf_of("embedding"), tr.input_ids);
  if (cfg_.use_positions) {
    std::vector<std::size_t> pos(L);
    for (std::size_t i = 0; i < L; ++i) pos[i] = i;
    x = tape.add(x, tape.gather_rows(leaf_of("position"), pos));
  }
  if (overrides && overrides->x) {
    if (overrides->x->size() != L * D) throw DimensionError("override x: wrong length");
    x = tape.leaf({L, D}, *overrides->x);
  }
  tr.x = x;

  ad::Tensor h = x;
  if (has_ibil_) {
    std::size_t d = cfg_.low_dim;
    ad::Tensor mu = tape.add_rowvec(tape.matmul(x, leaf_of("ibil.w_mu")), leaf_of("ibil.b_mu"));
    if (overrides && overrides->mu) {
      if (overrides->mu->size() != L * d) throw DimensionError("override mu: wrong length");
      mu = tape.leaf({L, d}, *overrides->mu);
    }
    ad::Tensor log_sigma =
        tape.add_rowvec(tape.matmul(x, leaf_of("ibil.w_xi")), leaf_of("ibil.b_xi"));
    if (overrides && overrides->log_sigma) {
      if (overrides->log_sigma->size() != L * d) throw DimensionError("override log_sigma: wrong length");
      log_sigma = tape.leaf({L, d}, *overrides->log_sigma);
    }
    tr.mu = mu;
    tr.log_sigma = log_sigma;
    if (mode == ForwardMode::sample) {
      tr.z = tape.leaf({L, d}, rng->normal_vector(L * d));
      tr.x_hat = tape.add(mu, tape.mul(tape.exp(log_sigma), tr.z));
    } else {
      tr.x_hat = mu;  // same node: gradients on x_hat are gradients on mu
    }
    h = tape.add(x, tape.matmul(tr.x_hat, leaf_of("ibil.w_up")));
  }
  tr.x_prime = h;

  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(D));
  for (std::size_t l = 0; l < cfg_.encoder_layers; ++l) {
    std::string p = "enc" + std::to_string(l) + ".";
    ad::Tensor q = tape.matmul(h, leaf_of(p + "wq"));
    ad::Tensor k = tape.matmul(h, leaf_of(p + "wk"));
    ad::Tensor v = tape.matmul(h, leaf_of(p + "wv"));
    ad::Tensor attn = tape.softmax_rows(tape.scale(tape.matmul(q, tape.transpose(k)), inv_sqrt_d));
    h = tape.add(h, tape.matmul(tape.matmul(attn, v), leaf_of(p + "wo")));
    ad::Tensor ff = tape.tanh(tape.add_rowvec(tape.matmul(h, leaf_of(p + "w_ff")), leaf_of(p + "b_ff")));
    h = tape.add(h, ff);
  }

  // mean pool over the in-sentence aspect positions
  std::vector<double> pool(L, 0.0);
  double w = 1.0 / static_cast<double>(enc.aspect_end - enc.aspect_begin);
  for (std::size_t i = enc.aspect_begin; i < enc.aspect_end; ++i) pool[i] = w;
  ad::Tensor pooled = tape.matmul(tape.leaf({1, L}, pool), h);

  tr.logits = tape.add_rowvec(tape.matmul(pooled, leaf_of("head.w")), leaf_of("head.b"));
  tr.probs = tape.softmax_rows(tr.logits);
  return tr;
}

ad::Tensor SentimentClassifier::attach_loss(ForwardTrace& trace, int label, double beta) const {
  if (label < 0 || static_cast<std::size_t>(label) >= cfg_.num_classes) {
    throw IndexError("loss: label " + std::to_string(label) + " out of range");
  }
  if (beta < 0.0) throw ContractError("loss: beta must be >= 0");
  ad::Tape& tape = *trace.tape;
  trace.ce = tape.cross_entropy(trace.logits, {static_cast<std::size_t>(label)});
  if (trace.has_ibil) {
    trace.kl = tape.gaussian_kl(trace.mu, trace.log_sigma);
    trace.loss = tape.add(trace.ce, tape.scale(trace.kl, beta));
  } else {
    trace.loss = trace.ce;
  }
  return trace.loss;
}

}  // namespace ibg
