#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ibg/data.hpp"
#include "ibg/model.hpp"

namespace ibg::testing {

inline Example example(const std::string& id, std::vector<std::string> tokens, std::size_t ab,
                       std::size_t ae, Polarity label, std::vector<std::size_t> gold,
                       const std::string& split = "train") {
  Example ex;
  ex.id = id;
  ex.tokens = std::move(tokens);
  ex.aspect_begin = ab;
  ex.aspect_end = ae;
  ex.label = label;
  ex.gold_opinion = std::move(gold);
  ex.split = split;
  return ex;
}

inline Corpus mini_corpus() {
  Corpus c;
  c.examples.push_back(example("m0", {"the", "food", "was", "tasty"}, 1, 2, Polarity::positive, {3}));
  c.examples.push_back(example("m1", {"the", "service", "was", "awful"}, 1, 2, Polarity::negative, {3}));
  c.examples.push_back(example("m2", {"the", "menu", "was", "average"}, 1, 2, Polarity::neutral, {3}));
  c.examples.push_back(example("m3", {"the", "food", "was", "awful", "but", "the", "staff", "was",
                                      "tasty"},
                               1, 2, Polarity::negative, {3}));
  c.examples.push_back(example("m4", {"the", "food", "was", "awful", "but", "the", "staff", "was",
                                      "tasty"},
                               6, 7, Polarity::positive, {8}));
  c.examples.push_back(example("d0", {"the", "price", "was", "tasty"}, 1, 2, Polarity::positive, {3},
                               "dev"));
  c.examples.push_back(example("t0", {"the", "decor", "was", "awful"}, 1, 2, Polarity::negative, {3},
                               "test"));
  return c;
}

inline SentimentClassifier mini_model(bool with_ibil, std::size_t high_dim = 16,
                                      std::size_t low_dim = 4, std::uint64_t seed = 3,
                                      bool use_positions = true) {
  Corpus c = mini_corpus();
  Vocab v = Vocab::build(c);
  ModelConfig cfg;
  cfg.high_dim = high_dim;
  cfg.low_dim = low_dim;
  cfg.seed = seed;
  cfg.max_len = 16;
  cfg.use_positions = use_positions;
  SentimentClassifier m = SentimentClassifier::create(cfg, v);
  if (with_ibil) m.insert_ibil(seed + 1);
  return m;
}

// Independent dense re-implementation of the forward pipeline (mean mode),
// plain loops only. Used as the composition oracle against the tape path.
inline std::vector<double> dense_forward_probs(const SentimentClassifier& m,
                                               const EncodedExample& enc) {
  const ModelConfig& cfg = m.config();
  std::size_t L = enc.length, D = cfg.high_dim;
  auto matmul = [](const std::vector<double>& a, const std::vector<double>& b, std::size_t r,
                   std::size_t k, std::size_t c) {
    std::vector<double> out(r * c, 0.0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] += a[i * k + p] * b[p * c + j];
    return out;
  };

  const auto& emb = m.param("embedding").value;
  std::vector<double> x(L * D);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < D; ++j) x[i * D + j] = emb[enc.ids[i] * D + j];
  if (cfg.use_positions) {
    const auto& pos = m.param("position").value;
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = 0; j < D; ++j) x[i * D + j] += pos[i * D + j];
  }

  std::vector<double> h = x;
  if (m.has_ibil()) {
    std::size_t d = cfg.low_dim;
    std::vector<double> mu = matmul(x, m.param("ibil.w_mu").value, L, D, d);
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = 0; j < d; ++j) mu[i * d + j] += m.param("ibil.b_mu").value[j];
    std::vector<double> up = matmul(mu, m.param("ibil.w_up").value, L, d, D);
    for (std::size_t i = 0; i < L * D; ++i) h[i] = x[i] + up[i];
  }

  for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
    std::string p = "enc" + std::to_string(l) + ".";
    auto q = matmul(h, m.param(p + "wq").value, L, D, D);
    auto k = matmul(h, m.param(p + "wk").value, L, D, D);
    auto v = matmul(h, m.param(p + "wv").value, L, D, D);
    std::vector<double> attn(L * L, 0.0);
    double inv = 1.0 / std::sqrt(static_cast<double>(D));
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < L; ++j) {
        double s = 0.0;
        for (std::size_t t = 0; t < D; ++t) s += q[i * D + t] * k[j * D + t];
        attn[i * L + j] = s * inv;
      }
      double mx = attn[i * L];
      for (std::size_t j = 1; j < L; ++j) mx = std::max(mx, attn[i * L + j]);
      double denom = 0.0;
      for (std::size_t j = 0; j < L; ++j) {
        attn[i * L + j] = std::exp(attn[i * L + j] - mx);
        denom += attn[i * L + j];
      }
      for (std::size_t j = 0; j < L; ++j) attn[i * L + j] /= denom;
    }
    auto mixed = matmul(matmul(attn, v, L, L, D), m.param(p + "wo").value, L, D, D);
    for (std::size_t i = 0; i < L * D; ++i) h[i] += mixed[i];
    auto ff = matmul(h, m.param(p + "w_ff").value, L, D, D);
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = 0; j < D; ++j)
        ff[i * D + j] = std::tanh(ff[i * D + j] + m.param(p + "b_ff").value[j]);
    for (std::size_t i = 0; i < L * D; ++i) h[i] += ff[i];
  }

  std::vector<double> pooled(D, 0.0);
  double w = 1.0 / static_cast<double>(enc.aspect_end - enc.aspect_begin);
  for (std::size_t i = enc.aspect_begin; i < enc.aspect_end; ++i)
    for (std::size_t j = 0; j < D; ++j) pooled[j] += w * h[i * D + j];

  std::size_t C = cfg.num_classes;
  std::vector<double> logits = matmul(pooled, m.param("head.w").value, 1, D, C);
  for (std::size_t j = 0; j < C; ++j) logits[j] += m.param("head.b").value[j];
  double mx = logits[0];
  for (std::size_t j = 1; j < C; ++j) mx = std::max(mx, logits[j]);
  double denom = 0.0;
  std::vector<double> probs(C);
  for (std::size_t j = 0; j < C; ++j) {
    probs[j] = std::exp(logits[j] - mx);
    denom += probs[j];
  }
  for (auto& p : probs) p /= denom;
  return probs;
}

}  // namespace ibg::testing
