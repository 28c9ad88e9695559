#include "ibg/train.hpp"

#include <cmath>

#include "ibg/errors.hpp"
#include "ibg/format.hpp"
#include "json.hpp"

namespace ibg {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (lr_base < 0.0 || lr_new < 0.0) throw ConfigError("train: learning rates must be >= 0");
  if (adam_eps <= 0.0) throw ConfigError("train: adam_eps must be > 0");
}

AdamState AdamState::init(const std::vector<Parameter>& params) {
  AdamState s;
  s.m.resize(params.size());
  s.v.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i].assign(params[i].value.size(), 0.0);
    s.v[i].assign(params[i].value.size(), 0.0);
  }
  return s;
}

void adam_step(std::vector<Parameter>& params, const std::vector<std::vector<double>>& grads,
               AdamState& state, const std::vector<double>& lrs, const TrainConfig& cfg) {
  if (grads.size() != params.size() || lrs.size() != params.size() ||
      state.m.size() != params.size()) {
    throw DimensionError("adam_step: params/grads/state out of alignment");
  }
  state.t += 1;
  double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (p.frozen) continue;
    if (grads[i].size() != p.value.size()) {
      throw DimensionError("adam_step: gradient for '" + p.name + "' has wrong length");
    }
    auto& m = state.m[i];
    auto& v = state.v[i];
    double lr = lrs[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      double g = grads[i][j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      p.value[j] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

std::string TrainResult::curves_csv() const {
  std::string out = "epoch,ce,kl,total,dev_acc,dev_macro_f1\n";
  for (const auto& e : curve) {
    out += csv_row({std::to_string(e.epoch), format_double(e.ce), format_double(e.kl),
                    format_double(e.total), format_double(e.dev_acc),
                    format_double(e.dev_macro_f1)});
  }
  return out;
}

EvalReport report_from_confusion(
    const std::array<std::array<std::size_t, kNumClasses>, kNumClasses>& confusion) {
  EvalReport r;
  r.confusion = confusion;
  std::size_t correct = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    correct += confusion[c][c];
    for (std::size_t p = 0; p < kNumClasses; ++p) r.total += confusion[c][p];
  }
  r.accuracy = r.total ? static_cast<double>(correct) / static_cast<double>(r.total) : 0.0;
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t tp = confusion[c][c];
    std::size_t support = 0, predicted = 0;
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      support += confusion[c][p];
      predicted += confusion[p][c];
    }
    // zero-support / zero-prediction classes contribute 0, reported as such
    r.precision[c] = predicted ? static_cast<double>(tp) / predicted : 0.0;
    r.recall[c] = support ? static_cast<double>(tp) / support : 0.0;
    r.f1[c] = (r.precision[c] + r.recall[c]) > 0.0
                  ? 2.0 * r.precision[c] * r.recall[c] / (r.precision[c] + r.recall[c])
                  : 0.0;
    f1_sum += r.f1[c];
  }
  r.macro_f1 = f1_sum / static_cast<double>(kNumClasses);
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy;
  j["macro_f1"] = macro_f1;
  j["total"] = total;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  j["confusion"] = confusion;
  return j.dump();
}

std::vector<EncodedExample> encode_split(const Corpus& corpus, const std::string& split,
                                         const Vocab& vocab, std::size_t max_len) {
  std::vector<EncodedExample> out;
  for (const auto& ex : corpus.examples) {
    if (split == "all" || ex.split == split) out.push_back(tokenize_and_encode(ex, vocab, max_len));
  }
  return out;
}

EvalReport evaluate(const SentimentClassifier& model, const std::vector<EncodedExample>& examples) {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
  for (const auto& enc : examples) {
    ForwardTrace tr = model.forward(enc, ForwardMode::mean);
    int pred = tr.predicted_class();
    if (enc.label < 0) throw ContractError("evaluate: unlabeled example " + enc.example_id);
    confusion[static_cast<std::size_t>(enc.label)][static_cast<std::size_t>(pred)] += 1;
  }
  return report_from_confusion(confusion);
}

EvalReport evaluate(const SentimentClassifier& model, const Corpus& corpus,
                    const std::string& split) {
  return evaluate(model, encode_split(corpus, split, model.vocab(), model.config().max_len));
}

namespace {

struct EpochRun {
  double ce = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

// One epoch of minibatch Adam. Gradients are averaged over each batch; every
// example runs on its own tape.
EpochRun run_epoch(SentimentClassifier& model, const std::vector<EncodedExample>& train,
                   const std::vector<std::size_t>& order, ForwardMode mode, double beta,
                   AdamState& state, const std::vector<double>& lrs, const TrainConfig& cfg,
                   RngStream& sample_rng) {
  EpochRun stats;
  auto& params = model.params();
  std::vector<std::vector<double>> grads(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) grads[i].assign(params[i].value.size(), 0.0);

  std::size_t n = order.size();
  for (std::size_t start = 0; start < n; start += cfg.batch_size) {
    std::size_t stop = std::min(n, start + cfg.batch_size);
    double inv = 1.0 / static_cast<double>(stop - start);
    for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t bi = start; bi < stop; ++bi) {
      const EncodedExample& enc = train[order[bi]];
      ForwardTrace tr = model.forward(enc, mode, &sample_rng);
      model.attach_loss(tr, enc.label, beta);
      tr.tape->backward(tr.loss);
      stats.ce += tr.ce.item();
      stats.kl += tr.has_ibil ? tr.kl.item() : 0.0;
      stats.total += tr.loss.item();
      for (std::size_t pi = 0; pi < params.size(); ++pi) {
        if (params[pi].frozen || !tr.param_leaves[pi].valid()) continue;
        const auto& g = tr.param_leaves[pi].grad();
        for (std::size_t j = 0; j < g.size(); ++j) grads[pi][j] += inv * g[j];
      }
    }
    adam_step(params, grads, state, lrs, cfg);
  }
  double invn = 1.0 / static_cast<double>(n);
  stats.ce *= invn;
  stats.kl *= invn;
  stats.total *= invn;
  return stats;
}

TrainResult train_loop(SentimentClassifier& model, const Corpus& corpus, const TrainConfig& cfg,
                       ForwardMode mode, double beta, const std::vector<double>& lrs) {
  auto train = encode_split(corpus, "train", model.vocab(), model.config().max_len);
  auto dev = encode_split(corpus, "dev", model.vocab(), model.config().max_len);
  if (train.empty()) throw ContractError("train: empty train split");

  AdamState state = AdamState::init(model.params());
  RngStream shuffle_rng(RngStream::mix(cfg.seed, 0x5u));
  RngStream sample_rng(RngStream::mix(cfg.seed, 0x51u));

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) shuffle_rng.shuffle(order);
    EpochRun run = run_epoch(model, train, order, mode, beta, state, lrs, cfg, sample_rng);
    EpochStats es;
    es.epoch = epoch;
    es.ce = run.ce;
    es.kl = run.kl;
    es.total = run.total;
    if (!dev.empty()) {
      EvalReport r = evaluate(model, dev);
      es.dev_acc = r.accuracy;
      es.dev_macro_f1 = r.macro_f1;
    }
    result.curve.push_back(es);
  }
  return result;
}

}  // namespace

TrainResult train_base(SentimentClassifier& model, const Corpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  if (model.has_ibil()) throw ContractError("train_base: model already has a bottleneck");
  if (corpus.examples.empty()) throw ContractError("train_base: empty corpus");
  std::vector<double> lrs(model.params().size(), cfg.lr_base);
  return train_loop(model, corpus, cfg, ForwardMode::mean, 0.0, lrs);
}

TrainResult train_ibil(SentimentClassifier& model, const Corpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  if (model.has_ibil()) throw ContractError("train_ibil: bottleneck already inserted");
  if (corpus.examples.empty()) throw ContractError("train_ibil: empty corpus");
  model.config().validate();  // rejects low_dim >= high_dim before any mutation
  model.insert_ibil(cfg.seed);
  std::vector<double> lrs(model.params().size());
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    lrs[i] = model.params()[i].intrinsic ? cfg.lr_new : cfg.lr_base;
  }
  return train_loop(model, corpus, cfg, ForwardMode::sample, model.config().beta, lrs);
}

}  // namespace ibg
