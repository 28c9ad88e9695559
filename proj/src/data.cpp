#include "ibg/data.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ibg/errors.hpp"
#include "ibg/format.hpp"
#include "ibg/rng.hpp"
#include "json.hpp"

namespace ibg {

char polarity_char(Polarity p) {
  switch (p) {
    case Polarity::positive: return 'P';
    case Polarity::negative: return 'N';
    case Polarity::neutral: return 'O';
  }
  return '?';
}

Polarity polarity_from_char(char c) {
  switch (c) {
    case 'P': return Polarity::positive;
    case 'N': return Polarity::negative;
    case 'O': return Polarity::neutral;
  }
  throw ValidationError(std::string("label must be P, N or O, got '") + c + "'");
}

void Example::validate(std::size_t line_hint) const {
  auto where = [&]() {
    return line_hint ? " (line " + std::to_string(line_hint) + ", id " + id + ")"
                     : " (id " + id + ")";
  };
  if (tokens.empty()) throw ValidationError("tokens: empty sentence" + where());
  if (aspect_begin >= aspect_end || aspect_end > tokens.size()) {
    throw ValidationError("aspect: span [" + std::to_string(aspect_begin) + ", " +
                          std::to_string(aspect_end) + ") invalid for " +
                          std::to_string(tokens.size()) + " tokens" + where());
  }
  for (std::size_t g : gold_opinion) {
    if (g >= tokens.size()) {
      throw ValidationError("opinion: index " + std::to_string(g) + " out of bounds" + where());
    }
    if (g >= aspect_begin && g < aspect_end) {
      throw ValidationError("opinion: index " + std::to_string(g) + " inside aspect span" + where());
    }
  }
  if (split != "train" && split != "dev" && split != "test") {
    throw ValidationError("split: must be train, dev or test" + where());
  }
}

std::vector<const Example*> Corpus::split(const std::string& name) const {
  std::vector<const Example*> out;
  for (const auto& ex : examples) {
    if (ex.split == name) out.push_back(&ex);
  }
  return out;
}

Vocab Vocab::build(const Corpus& corpus) {
  std::set<std::string> words;
  for (const auto& ex : corpus.examples) {
    for (const auto& t : ex.tokens) words.insert(t);
  }
  Vocab v;
  v.id_to_token_ = {"<pad>", "<unk>", "<sep>", "<mask>"};
  for (const auto& w : words) {
    if (std::find(v.id_to_token_.begin(), v.id_to_token_.end(), w) == v.id_to_token_.end()) {
      v.id_to_token_.push_back(w);
    }
  }
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) v.token_to_id_[v.id_to_token_[i]] = i;
  return v;
}

Vocab Vocab::from_tokens(const std::vector<std::string>& id_to_token) {
  if (id_to_token.size() < 4 || id_to_token[0] != "<pad>" || id_to_token[1] != "<unk>" ||
      id_to_token[2] != "<sep>" || id_to_token[3] != "<mask>") {
    throw FormatError("vocab: reserved ids 0..3 must be <pad>, <unk>, <sep>, <mask>");
  }
  Vocab v;
  v.id_to_token_ = id_to_token;
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
    if (!v.token_to_id_.emplace(v.id_to_token_[i], i).second) {
      throw FormatError("vocab: duplicate token '" + v.id_to_token_[i] + "'");
    }
  }
  return v;
}

std::size_t Vocab::lookup(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(std::size_t id) const {
  if (id >= id_to_token_.size()) {
    throw IndexError("vocab: id " + std::to_string(id) + " out of range [0, " +
                     std::to_string(id_to_token_.size()) + ")");
  }
  return id_to_token_[id];
}

std::size_t EncodedExample::selectable_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < sent_len; ++i) {
    if (selectable(i)) ++n;
  }
  return n;
}

EncodedExample tokenize_and_encode(const Example& ex, const Vocab& vocab, std::size_t max_len) {
  ex.validate();
  std::size_t sent = ex.tokens.size();
  std::size_t alen = ex.aspect_end - ex.aspect_begin;
  std::size_t needed = sent + 1 + alen;
  if (needed > max_len) {
    throw ValidationError("encode: example " + ex.id + " needs " + std::to_string(needed) +
                          " positions, max_len is " + std::to_string(max_len) +
                          " (refusing to truncate)");
  }
  EncodedExample enc;
  enc.example_id = ex.id;
  enc.ids.assign(max_len, Vocab::kPad);
  for (std::size_t i = 0; i < sent; ++i) enc.ids[i] = vocab.lookup(ex.tokens[i]);
  enc.ids[sent] = Vocab::kSep;
  for (std::size_t i = 0; i < alen; ++i) {
    enc.ids[sent + 1 + i] = vocab.lookup(ex.tokens[ex.aspect_begin + i]);
  }
  enc.length = needed;
  enc.sent_len = sent;
  enc.aspect_begin = ex.aspect_begin;
  enc.aspect_end = ex.aspect_end;
  enc.label = static_cast<int>(ex.label);
  enc.gold_opinion = ex.gold_opinion;
  enc.display_tokens = ex.tokens;
  enc.display_tokens.push_back("<sep>");
  for (std::size_t i = ex.aspect_begin; i < ex.aspect_end; ++i) {
    enc.display_tokens.push_back(ex.tokens[i]);
  }
  return enc;
}

std::vector<std::string> decode_tokens(const std::vector<std::size_t>& ids, const Vocab& vocab,
                                       std::size_t length) {
  std::vector<std::string> out;
  out.reserve(length);
  for (std::size_t i = 0; i < length && i < ids.size(); ++i) out.push_back(vocab.token(ids[i]));
  return out;
}

namespace {

bool is_slot(const std::string& w, char kind, std::size_t& index) {
  if (w.size() == 4 && w[0] == '{' && w[1] == kind && w[2] >= '0' && w[2] <= '2' && w[3] == '}') {
    index = static_cast<std::size_t>(w[2] - '0');
    return true;
  }
  return false;
}

// aspect slot count of a validated template
std::size_t slot_count(const std::vector<std::string>& words) {
  std::size_t n = 0;
  for (const auto& w : words) {
    std::size_t idx;
    if (is_slot(w, 'a', idx)) ++n;
  }
  return n;
}

void validate_template(const std::vector<std::string>& words) {
  bool aspects[3] = {false, false, false};
  bool opinions[3] = {false, false, false};
  for (const auto& w : words) {
    std::size_t idx;
    if (is_slot(w, 'a', idx)) {
      if (aspects[idx]) throw ConfigError("generator: template repeats slot {a" + std::to_string(idx) + "}");
      aspects[idx] = true;
    } else if (is_slot(w, 'o', idx)) {
      if (opinions[idx]) throw ConfigError("generator: template repeats slot {o" + std::to_string(idx) + "}");
      opinions[idx] = true;
    }
  }
  if (!aspects[0]) throw ConfigError("generator: template lacks an {a0} slot");
  for (std::size_t k = 0; k < 3; ++k) {
    if (aspects[k] != opinions[k]) {
      throw ConfigError("generator: template pairs {a" + std::to_string(k) + "}/{o" +
                        std::to_string(k) + "} incompletely");
    }
    if (k > 0 && aspects[k] && !aspects[k - 1]) {
      throw ConfigError("generator: template slots must be contiguous from {a0}");
    }
  }
}

}  // namespace

GeneratorConfig GeneratorConfig::defaults() {
  GeneratorConfig c;
  c.templates = {
      {"the", "{a0}", "was", "{o0}"},
      {"the", "{a0}", "was", "really", "{o0}"},
      {"i", "thought", "the", "{a0}", "was", "{o0}"},
      {"the", "{a0}", "seemed", "{o0}", "to", "us"},
      {"overall", "the", "{a0}", "was", "{o0}"},
      {"honestly", "the", "{a0}", "was", "{o0}", "here"},
      {"the", "{a0}", "was", "{o0}", "but", "the", "{a1}", "was", "{o1}"},
      {"the", "{a0}", "was", "{o0}", "and", "the", "{a1}", "was", "{o1}"},
      {"the", "{a0}", "was", "{o0}", "while", "the", "{a1}", "seemed", "{o1}"},
      {"although", "the", "{a0}", "was", "{o0}", "the", "{a1}", "was", "{o1}"},
      {"the", "{a0}", "was", "{o0}", "the", "{a1}", "was", "{o1}", "and", "the", "{a2}", "was",
       "{o2}"},
  };
  c.aspects = {"food",  "service", "staff",  "ambience", "price",   "menu",
               "pizza", "sushi",   "coffee", "decor",    "location", "dessert",
               "wait staff", "wine list"};
  c.positive = {"tasty",   "great",    "excellent", "friendly", "wonderful",
                "amazing", "delicious", "superb",   "lovely",   "fantastic"};
  c.negative = {"awful",    "terrible",      "rude",  "bland", "horrible",
                "dreadful", "disappointing", "slow",  "overpriced", "stale"};
  c.neutral = {"average", "ordinary", "typical", "standard", "middling", "unremarkable", "passable"};
  c.distractors = {"evening", "visit", "table", "crowd", "weather", "music", "parking"};
  return c;
}

void GeneratorConfig::validate() const {
  auto require = [](const std::vector<std::string>& lex, const char* name) {
    if (lex.empty()) throw ConfigError(std::string("generator: empty lexicon '") + name + "'");
  };
  require(aspects, "aspects");
  require(positive, "positive");
  require(negative, "negative");
  require(neutral, "neutral");
  require(distractors, "distractors");
  if (noise_rate < 0.0 || noise_rate > 1.0) throw ConfigError("generator: noise_rate outside [0, 1]");
  if (multi_aspect_rate < 0.0 || multi_aspect_rate > 1.0) {
    throw ConfigError("generator: multi_aspect_rate outside [0, 1]");
  }
  std::vector<const std::vector<std::string>*> lexes = {&aspects, &positive, &negative, &neutral,
                                                        &distractors};
  const char* names[] = {"aspects", "positive", "negative", "neutral", "distractors"};
  for (std::size_t a = 0; a < lexes.size(); ++a) {
    for (std::size_t b = a + 1; b < lexes.size(); ++b) {
      for (const auto& w : *lexes[a]) {
        if (std::find(lexes[b]->begin(), lexes[b]->end(), w) != lexes[b]->end()) {
          throw ConfigError(std::string("generator: lexicons '") + names[a] + "' and '" + names[b] +
                            "' both contain '" + w + "'");
        }
      }
    }
  }
  if (templates.empty()) throw ConfigError("generator: no templates");
  std::size_t max_slots = 0;
  bool has_single = false, has_multi = false;
  for (const auto& t : templates) {
    validate_template(t);
    std::size_t n = slot_count(t);
    max_slots = std::max(max_slots, n);
    has_single = has_single || n == 1;
    has_multi = has_multi || n > 1;
  }
  if (!has_single || !has_multi) {
    throw ConfigError("generator: need both single-aspect and multi-aspect templates");
  }
  if (aspects.size() < max_slots) {
    throw ConfigError("generator: " + std::to_string(max_slots) +
                      "-slot templates need at least that many distinct aspects");
  }
}

namespace {

std::string split_for_id(const std::string& id) {
  std::uint64_t h = RngStream::hash_string(id);
  std::uint64_t bucket = h % 10;
  if (bucket < 8) return "train";
  if (bucket == 8) return "dev";
  return "test";
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

}  // namespace

Corpus generate_corpus(const GeneratorConfig& config) {
  config.validate();
  RngStream rng(config.seed);
  Corpus corpus;
  const std::vector<std::string>* lexicons[3] = {&config.positive, &config.negative,
                                                 &config.neutral};
  std::vector<const std::vector<std::string>*> singles, doubles, triples;
  for (const auto& t : config.templates) {
    std::size_t n = slot_count(t);
    (n == 1 ? singles : n == 2 ? doubles : triples).push_back(&t);
  }
  for (std::size_t s = 0; s < config.size; ++s) {
    bool multi = rng.uniform() < config.multi_aspect_rate;
    const std::vector<std::string>* tmpl;
    if (!multi || (doubles.empty() && triples.empty())) {
      tmpl = singles[rng.index(singles.size())];
    } else if (!triples.empty() && (doubles.empty() || rng.uniform() < 0.25)) {
      tmpl = triples[rng.index(triples.size())];
    } else {
      tmpl = doubles[rng.index(doubles.size())];
    }
    std::size_t n = slot_count(*tmpl);

    // distinct aspects per sentence
    std::vector<std::size_t> order(config.aspects.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::vector<std::string>> aspect_words(n);
    for (std::size_t k = 0; k < n; ++k) aspect_words[k] = split_words(config.aspects[order[k]]);

    std::vector<Polarity> labels(n);
    for (std::size_t k = 0; k < n; ++k) labels[k] = static_cast<Polarity>(rng.index(3));
    if (n > 1 && rng.uniform() < config.forced_conflict_rate) {
      while (std::all_of(labels.begin(), labels.end(), [&](Polarity p) { return p == labels[0]; })) {
        labels[rng.index(n)] = static_cast<Polarity>(rng.index(3));
      }
    }
    std::vector<std::string> opinions(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& lex = *lexicons[static_cast<int>(labels[k])];
      opinions[k] = lex[rng.index(lex.size())];
    }

    std::vector<std::string> tokens;
    std::vector<std::pair<std::size_t, std::size_t>> aspect_spans(n);
    std::vector<std::size_t> opinion_pos(n);
    for (const auto& w : *tmpl) {
      std::size_t k;
      if (is_slot(w, 'a', k)) {
        aspect_spans[k].first = tokens.size();
        for (const auto& aw : aspect_words[k]) tokens.push_back(aw);
        aspect_spans[k].second = tokens.size();
      } else if (is_slot(w, 'o', k)) {
        opinion_pos[k] = tokens.size();
        tokens.push_back(opinions[k]);
      } else {
        tokens.push_back(w);
      }
    }
    if (rng.uniform() < config.noise_rate) {
      // clause about a non-aspect noun, carrying a sentiment word that is not
      // gold for any emitted example
      tokens.push_back(",");
      tokens.push_back("the");
      tokens.push_back(config.distractors[rng.index(config.distractors.size())]);
      tokens.push_back("was");
      const auto& lex = *lexicons[rng.index(3)];
      tokens.push_back(lex[rng.index(lex.size())]);
    }

    char sid[32];
    std::snprintf(sid, sizeof(sid), "s%05zu", s);
    for (std::size_t k = 0; k < n; ++k) {
      Example ex;
      ex.id = std::string(sid) + "_a" + std::to_string(k);
      ex.tokens = tokens;
      ex.aspect_begin = aspect_spans[k].first;
      ex.aspect_end = aspect_spans[k].second;
      ex.label = labels[k];
      ex.gold_opinion = {opinion_pos[k]};
      ex.split = split_for_id(ex.id);
      ex.validate();
      corpus.examples.push_back(std::move(ex));
    }
  }
  return corpus;
}

CorpusAudit audit_corpus(const Corpus& corpus, const GeneratorConfig& config) {
  CorpusAudit a;
  a.examples = corpus.examples.size();
  auto lexicon_of = [&](const std::string& w) -> std::optional<Polarity> {
    auto in = [&](const std::vector<std::string>& lex) {
      return std::find(lex.begin(), lex.end(), w) != lex.end();
    };
    if (in(config.positive)) return Polarity::positive;
    if (in(config.negative)) return Polarity::negative;
    if (in(config.neutral)) return Polarity::neutral;
    return std::nullopt;
  };
  std::map<std::string, std::vector<Polarity>> by_sentence;
  for (const auto& ex : corpus.examples) {
    std::string key = ex.id.substr(0, ex.id.find("_a"));
    by_sentence[key].push_back(ex.label);
    for (std::size_t g : ex.gold_opinion) {
      auto pol = lexicon_of(ex.tokens[g]);
      if (!pol || *pol != ex.label) ++a.label_violations;
    }
  }
  a.sentences = by_sentence.size();
  for (const auto& [key, labels] : by_sentence) {
    (void)key;
    if (labels.size() > 1) {
      ++a.multi_aspect_sentences;
      if (!std::all_of(labels.begin(), labels.end(),
                       [&](Polarity p) { return p == labels[0]; })) {
        ++a.conflict_sentences;
      }
    }
  }
  return a;
}

namespace {

nlohmann::ordered_json example_to_json(const Example& ex) {
  nlohmann::ordered_json j;
  j["id"] = ex.id;
  j["tokens"] = ex.tokens;
  j["aspect"] = {ex.aspect_begin, ex.aspect_end};
  j["label"] = std::string(1, polarity_char(ex.label));
  j["opinion"] = ex.gold_opinion;
  j["split"] = ex.split;
  return j;
}

Example example_from_json(const nlohmann::json& j, std::size_t line) {
  auto where = " (line " + std::to_string(line) + ")";
  auto need = [&](const char* field) {
    if (!j.contains(field)) throw ValidationError(std::string("missing field '") + field + "'" + where);
  };
  for (const char* f : {"id", "tokens", "aspect", "label", "opinion", "split"}) need(f);
  Example ex;
  try {
    ex.id = j.at("id").get<std::string>();
    ex.tokens = j.at("tokens").get<std::vector<std::string>>();
    auto span = j.at("aspect").get<std::vector<std::int64_t>>();
    if (span.size() != 2 || span[0] < 0 || span[1] < 0) {
      throw ValidationError("aspect: expected [begin, end]" + where);
    }
    ex.aspect_begin = static_cast<std::size_t>(span[0]);
    ex.aspect_end = static_cast<std::size_t>(span[1]);
    auto label = j.at("label").get<std::string>();
    if (label.size() != 1) throw ValidationError("label: expected one of P, N, O" + where);
    ex.label = polarity_from_char(label[0]);
    auto gold = j.at("opinion").get<std::vector<std::int64_t>>();
    for (auto g : gold) {
      if (g < 0) throw ValidationError("opinion: negative index" + where);
      ex.gold_opinion.push_back(static_cast<std::size_t>(g));
    }
    ex.split = j.at("split").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("record field has wrong type: " + std::string(e.what()) + where);
  }
  ex.validate(line);
  return ex;
}

}  // namespace

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& ex : corpus.examples) {
    out += example_to_json(ex).dump();
    out += '\n';
  }
  return out;
}

Corpus corpus_from_jsonl(const std::string& text) {
  Corpus corpus;
  std::size_t line = 0;
  std::istringstream ss(text);
  std::string raw;
  while (std::getline(ss, raw)) {
    ++line;
    if (raw.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("malformed JSON at line " + std::to_string(line) + ": " + e.what());
    }
    corpus.examples.push_back(example_from_json(j, line));
  }
  return corpus;
}

void save_jsonl(const Corpus& corpus, const std::string& path) {
  write_text_file(path, corpus_to_jsonl(corpus));
}

Corpus load_jsonl(const std::string& path) { return corpus_from_jsonl(read_text_file(path)); }

}  // namespace ibg
