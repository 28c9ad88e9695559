#include "ibg/faithfulness.hpp"

#include <algorithm>

#include "ibg/errors.hpp"
#include "ibg/format.hpp"

namespace ibg {

void FaithfulnessConfig::validate() const {
  if (k_max < 1) throw ConfigError("faithfulness: k_max must be >= 1");
  if (ph_k < 1) throw ConfigError("faithfulness: ph_k must be >= 1");
  if (recovery_k < 1) throw ConfigError("faithfulness: recovery_k must be >= 1");
}

namespace {

// Top-k selectable positions under the shared tie rule (extract_opinion_words).
std::vector<std::size_t> top_positions(const TokenScores& scores, std::size_t k) {
  if (k == 0) return {};
  return extract_opinion_words(scores, k).indices;
}

EncodedExample delete_positions(const EncodedExample& enc, const std::vector<bool>& drop) {
  EncodedExample out = enc;
  out.ids.clear();
  out.display_tokens.clear();
  out.gold_opinion.clear();
  std::vector<std::size_t> remap(enc.length, 0);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < enc.length; ++i) {
    remap[i] = kept;
    if (!drop[i]) {
      out.ids.push_back(enc.ids[i]);
      out.display_tokens.push_back(enc.display_tokens[i]);
      ++kept;
    }
  }
  std::size_t dropped_in_sentence = 0;
  for (std::size_t i = 0; i < enc.sent_len; ++i) {
    if (drop[i]) ++dropped_in_sentence;
  }
  out.length = kept;
  out.sent_len = enc.sent_len - dropped_in_sentence;
  out.aspect_begin = remap[enc.aspect_begin];
  out.aspect_end = remap[enc.aspect_end - 1] + 1;
  for (std::size_t g : enc.gold_opinion) {
    if (g < enc.length && !drop[g]) out.gold_opinion.push_back(remap[g]);
  }
  out.ids.resize(enc.ids.size(), Vocab::kPad);
  return out;
}

}  // namespace

EncodedExample perturb(const EncodedExample& enc, const TokenScores& scores,
                       const PerturbationPolicy& policy, std::size_t k) {
  if (scores.size() != enc.length) {
    throw DimensionError("perturb: scores cover " + std::to_string(scores.size()) +
                         " positions, example has " + std::to_string(enc.length));
  }
  std::size_t selectable = enc.selectable_count();
  std::size_t k_eff = std::min(k, selectable);  // clamped
  std::vector<bool> change(enc.length, false);
  if (policy.mode == PerturbMode::remove_top_k) {
    for (std::size_t pos : top_positions(scores, k_eff)) change[pos] = true;
  } else {
    // mask every selectable position outside the top-k
    std::vector<bool> keep(enc.length, false);
    for (std::size_t pos : top_positions(scores, k_eff)) keep[pos] = true;
    for (std::size_t i = 0; i < enc.length; ++i) {
      if (enc.selectable(i) && !keep[i]) change[i] = true;
    }
  }
  if (policy.replacement == Replacement::delete_token &&
      policy.mode == PerturbMode::remove_top_k) {
    return delete_positions(enc, change);
  }
  EncodedExample out = enc;
  for (std::size_t i = 0; i < enc.length; ++i) {
    if (change[i]) {
      out.ids[i] = Vocab::kMask;
      out.display_tokens[i] = "<mask>";
    }
  }
  return out;
}

double aopc_from_curve(double acc0, const std::vector<double>& acc_curve) {
  double sum = 0.0;
  for (double a : acc_curve) sum += acc0 - a;
  return acc_curve.empty() ? 0.0 : 100.0 * sum / static_cast<double>(acc_curve.size());
}

namespace {

double accuracy(const Predictor& predictor, const std::vector<EncodedExample>& examples) {
  if (examples.empty()) throw ContractError("faithfulness: empty example set");
  std::size_t correct = 0;
  for (const auto& enc : examples) {
    if (predictor.predict(enc) == enc.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace

FaithfulnessReport aopc(const Predictor& predictor, const std::vector<EncodedExample>& examples,
                        const Scorer& scorer, std::size_t k_max, Replacement replacement) {
  if (k_max < 1) throw ContractError("aopc: k_max must be >= 1");
  FaithfulnessReport r;
  r.method = scorer.name();
  r.k_max = k_max;
  r.acc0 = accuracy(predictor, examples);
  std::vector<TokenScores> scores;
  scores.reserve(examples.size());
  for (const auto& enc : examples) scores.push_back(scorer.score(enc));
  PerturbationPolicy policy{PerturbMode::remove_top_k, replacement};
  for (std::size_t k = 1; k <= k_max; ++k) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      EncodedExample p = perturb(examples[i], scores[i], policy, k);
      if (predictor.predict(p) == p.label) ++correct;
    }
    r.acc_curve.push_back(static_cast<double>(correct) / static_cast<double>(examples.size()));
  }
  r.aopc = aopc_from_curve(r.acc0, r.acc_curve);
  return r;
}

FaithfulnessReport ph_acc(const Predictor& predictor, const std::vector<EncodedExample>& examples,
                          const Scorer& scorer, std::size_t k) {
  if (k < 1) throw ContractError("ph_acc: k must be >= 1");
  FaithfulnessReport r;
  r.method = scorer.name();
  r.ph_k = k;
  PerturbationPolicy policy{PerturbMode::keep_top_k, Replacement::mask_token};
  std::size_t correct = 0;
  for (const auto& enc : examples) {
    TokenScores s = scorer.score(enc);
    EncodedExample p = perturb(enc, s, policy, k);
    if (predictor.predict(p) == p.label) ++correct;
  }
  if (examples.empty()) throw ContractError("ph_acc: empty example set");
  r.ph_acc = 100.0 * static_cast<double>(correct) / static_cast<double>(examples.size());
  return r;
}

RecoveryReport opinion_recovery(const std::vector<EncodedExample>& examples, const Scorer& scorer,
                                std::size_t k) {
  if (k < 1) throw ContractError("opinion_recovery: k must be >= 1");
  RecoveryReport r;
  double prec_sum = 0.0, rec_sum = 0.0;
  std::size_t hits = 0;
  for (const auto& enc : examples) {
    if (enc.gold_opinion.empty()) {
      ++r.skipped_missing_gold;
      continue;
    }
    TokenScores s = scorer.score(enc);
    OpinionSelection sel = extract_opinion_words(s, k);
    std::size_t inter = 0;
    for (std::size_t idx : sel.indices) {
      if (std::find(enc.gold_opinion.begin(), enc.gold_opinion.end(), idx) !=
          enc.gold_opinion.end()) {
        ++inter;
      }
    }
    prec_sum += static_cast<double>(inter) / static_cast<double>(k);
    rec_sum += static_cast<double>(inter) / static_cast<double>(enc.gold_opinion.size());
    if (!sel.indices.empty() &&
        std::find(enc.gold_opinion.begin(), enc.gold_opinion.end(), sel.indices[0]) !=
            enc.gold_opinion.end()) {
      ++hits;
    }
    ++r.evaluated;
  }
  if (r.evaluated > 0) {
    r.precision_at_k = prec_sum / static_cast<double>(r.evaluated);
    r.recall_at_k = rec_sum / static_cast<double>(r.evaluated);
    r.hit_at_1 = static_cast<double>(hits) / static_cast<double>(r.evaluated);
  }
  return r;
}

FaithfulnessReport faithfulness_report(const Predictor& predictor,
                                       const std::vector<EncodedExample>& examples,
                                       const Scorer& scorer, double alpha,
                                       const FaithfulnessConfig& cfg) {
  cfg.validate();
  FaithfulnessReport r = aopc(predictor, examples, scorer, cfg.k_max, cfg.replacement);
  FaithfulnessReport ph = ph_acc(predictor, examples, scorer, cfg.ph_k);
  r.ph_acc = ph.ph_acc;
  r.ph_k = cfg.ph_k;
  r.alpha = alpha;
  RecoveryReport rec = opinion_recovery(examples, scorer, cfg.recovery_k);
  r.precision_at_k = rec.precision_at_k;
  r.recall_at_k = rec.recall_at_k;
  r.hit_at_1 = rec.hit_at_1;
  r.recovery_k = cfg.recovery_k;
  r.skipped_missing_gold = rec.skipped_missing_gold;
  return r;
}

std::string FaithfulnessReport::to_csv() const {
  std::string out = "method,alpha,k,acc_k,aopc,ph_acc,precision_at_k,recall_at_k,hit_at_1\n";
  for (std::size_t k = 1; k <= acc_curve.size(); ++k) {
    out += csv_row({method, format_double(alpha), std::to_string(k),
                    format_double(acc_curve[k - 1]), format_double(aopc), format_double(ph_acc),
                    format_double(precision_at_k), format_double(recall_at_k),
                    format_double(hit_at_1)});
  }
  return out;
}

}  // namespace ibg
