#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ibg {

enum class Polarity : int { positive = 0, negative = 1, neutral = 2 };

char polarity_char(Polarity p);
Polarity polarity_from_char(char c);

constexpr std::size_t kNumClasses = 3;

// One (sentence, aspect) pair. Multi-aspect sentences appear once per aspect,
// sharing tokens but with their own span, label and gold opinion indices.
struct Example {
  std::string id;
  std::vector<std::string> tokens;
  std::size_t aspect_begin = 0;  // half-open [begin, end)
  std::size_t aspect_end = 0;
  Polarity label = Polarity::neutral;
  std::vector<std::size_t> gold_opinion;  // token indices, may be empty
  std::string split;                      // train | dev | test

  void validate(std::size_t line_hint = 0) const;  // throws ValidationError
};

struct Corpus {
  std::vector<Example> examples;

  std::vector<const Example*> split(const std::string& name) const;
  std::size_t size() const { return examples.size(); }
};

// Reserved ids are stable: pad=0, unk=1, sep=2, mask=3.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kSep = 2;
  static constexpr std::size_t kMask = 3;

  static Vocab build(const Corpus& corpus);
  static Vocab from_tokens(const std::vector<std::string>& id_to_token);

  std::size_t size() const { return id_to_token_.size(); }
  std::size_t lookup(const std::string& token) const;  // kUnk if absent
  const std::string& token(std::size_t id) const;
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::map<std::string, std::size_t> token_to_id_;
};

// Model-ready form: [sentence ids..., sep, aspect ids..., pad...]. Attribution
// and perturbation indices refer to positions within the non-pad prefix;
// selectable positions are in-sentence tokens outside the aspect span.
struct EncodedExample {
  std::string example_id;
  std::vector<std::size_t> ids;            // length max_len, pad-filled tail
  std::size_t length = 0;                  // non-pad prefix = sent_len + 1 + aspect_len
  std::size_t sent_len = 0;
  std::size_t aspect_begin = 0;
  std::size_t aspect_end = 0;
  int label = -1;
  std::vector<std::size_t> gold_opinion;   // sentence positions
  std::vector<std::string> display_tokens; // original words + "<sep>" + aspect words

  bool selectable(std::size_t pos) const {
    return pos < sent_len && !(pos >= aspect_begin && pos < aspect_end);
  }
  std::size_t selectable_count() const;
};

EncodedExample tokenize_and_encode(const Example& ex, const Vocab& vocab, std::size_t max_len);
std::vector<std::string> decode_tokens(const std::vector<std::size_t>& ids, const Vocab& vocab,
                                       std::size_t length);

struct GeneratorConfig {
  std::uint64_t seed = 7;
  std::size_t size = 1500;  // sentences; examples fan out per (sentence, aspect)
  double noise_rate = 0.0;  // chance of an extra opinion word attached to a distractor noun
  double multi_aspect_rate = 0.55;
  double forced_conflict_rate = 0.75;  // among multi-aspect sentences
  // slot patterns: {a0}..{a2} aspect slots, {o0}..{o2} their opinion words,
  // anything else a literal token; 1 to 3 aspect slots per template
  std::vector<std::vector<std::string>> templates;
  std::vector<std::string> aspects;
  std::vector<std::string> positive;
  std::vector<std::string> negative;
  std::vector<std::string> neutral;
  std::vector<std::string> distractors;

  static GeneratorConfig defaults();
  void validate() const;  // lexicons non-empty and pairwise disjoint, templates well-formed
};

Corpus generate_corpus(const GeneratorConfig& config);

struct CorpusAudit {
  std::size_t examples = 0;
  std::size_t sentences = 0;
  std::size_t multi_aspect_sentences = 0;
  std::size_t conflict_sentences = 0;  // multi-aspect with differing labels
  std::size_t label_violations = 0;    // label != planted opinion word's lexicon
  double conflict_fraction() const {
    return sentences ? static_cast<double>(conflict_sentences) / sentences : 0.0;
  }
};

CorpusAudit audit_corpus(const Corpus& corpus, const GeneratorConfig& config);

void save_jsonl(const Corpus& corpus, const std::string& path);
Corpus load_jsonl(const std::string& path);
std::string corpus_to_jsonl(const Corpus& corpus);
Corpus corpus_from_jsonl(const std::string& text);

}  // namespace ibg
