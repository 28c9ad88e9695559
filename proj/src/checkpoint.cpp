#include "ibg/checkpoint.hpp"

#include <cmath>

#include "ibg/errors.hpp"
#include "ibg/format.hpp"
#include "json.hpp"

namespace ibg {

namespace {
constexpr int kFormatVersion = 1;
}

std::string model_to_checkpoint(const SentimentClassifier& model) {
  const ModelConfig& c = model.config();
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["phase"] = model.phase();
  j["config"] = {
      {"vocab_size", c.vocab_size},   {"high_dim", c.high_dim},
      {"low_dim", c.low_dim},         {"encoder_layers", c.encoder_layers},
      {"num_classes", c.num_classes}, {"beta", c.beta},
      {"alpha", c.alpha},             {"seed", c.seed},
      {"max_len", c.max_len},         {"use_positions", c.use_positions},
  };
  j["frozen_embedding"] = model.frozen_embedding();
  j["vocab"] = model.vocab().tokens();
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  for (const auto& p : model.params()) {
    nlohmann::ordered_json t;
    t["name"] = p.name;
    t["shape"] = p.shape;
    t["frozen"] = p.frozen;
    t["intrinsic"] = p.intrinsic;
    t["data"] = encode_f64_base64(p.value);
    tensors.push_back(std::move(t));
  }
  j["tensors"] = std::move(tensors);
  return j.dump(1) + "\n";
}

SentimentClassifier checkpoint_to_model(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: not valid JSON: ") + e.what());
  }
  try {
    if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
      throw FormatError("checkpoint: missing format_version");
    }
    int ver = j["format_version"].get<int>();
    if (ver != kFormatVersion) {
      throw FormatError("checkpoint: unsupported format_version " + std::to_string(ver));
    }
    const auto& jc = j.at("config");
    ModelConfig cfg;
    cfg.vocab_size = jc.at("vocab_size").get<std::size_t>();
    cfg.high_dim = jc.at("high_dim").get<std::size_t>();
    cfg.low_dim = jc.at("low_dim").get<std::size_t>();
    cfg.encoder_layers = jc.at("encoder_layers").get<std::size_t>();
    cfg.num_classes = jc.at("num_classes").get<std::size_t>();
    cfg.beta = jc.at("beta").get<double>();
    cfg.alpha = jc.at("alpha").get<double>();
    cfg.seed = jc.at("seed").get<std::uint64_t>();
    cfg.max_len = jc.at("max_len").get<std::size_t>();
    cfg.use_positions = jc.at("use_positions").get<bool>();
    cfg.validate();

    Vocab vocab = Vocab::from_tokens(j.at("vocab").get<std::vector<std::string>>());
    if (vocab.size() != cfg.vocab_size) {
      throw FormatError("checkpoint: vocab has " + std::to_string(vocab.size()) +
                        " entries, config says " + std::to_string(cfg.vocab_size));
    }

    std::string phase = j.at("phase").get<std::string>();
    if (phase != "base" && phase != "ibg") {
      throw FormatError("checkpoint: unknown phase '" + phase + "'");
    }

    SentimentClassifier model;
    model.cfg_ = cfg;
    model.vocab_ = vocab;
    model.has_ibil_ = (phase == "ibg");
    model.frozen_embedding_ = j.value("frozen_embedding", false);
    for (const auto& t : j.at("tensors")) {
      Parameter p;
      p.name = t.at("name").get<std::string>();
      p.shape = t.at("shape").get<ad::Shape>();
      p.frozen = t.value("frozen", false);
      p.intrinsic = t.value("intrinsic", false);
      p.value = decode_f64_base64(t.at("data").get<std::string>());
      if (p.value.size() != ad::shape_numel(p.shape)) {
        throw FormatError("checkpoint: tensor '" + p.name + "' has " +
                          std::to_string(p.value.size()) + " values for shape " +
                          ad::shape_str(p.shape));
      }
      for (double v : p.value) {
        if (!std::isfinite(v)) throw FormatError("checkpoint: tensor '" + p.name + "' has non-finite values");
      }
      model.params_.push_back(std::move(p));
    }

    // required parameter inventory against the config
    std::size_t D = cfg.high_dim, d = cfg.low_dim;
    auto expect = [&](const std::string& name, ad::Shape shape) {
      int idx = model.param_index(name);
      if (idx < 0) throw FormatError("checkpoint: missing tensor '" + name + "'");
      if (model.params_[static_cast<std::size_t>(idx)].shape != shape) {
        throw FormatError("checkpoint: tensor '" + name + "' has shape " +
                          ad::shape_str(model.params_[static_cast<std::size_t>(idx)].shape) +
                          ", config requires " + ad::shape_str(shape));
      }
    };
    expect("embedding", {cfg.vocab_size, D});
    expect("position", {cfg.max_len, D});
    for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
      std::string pfx = "enc" + std::to_string(l) + ".";
      expect(pfx + "wq", {D, D});
      expect(pfx + "wk", {D, D});
      expect(pfx + "wv", {D, D});
      expect(pfx + "wo", {D, D});
      expect(pfx + "w_ff", {D, D});
      expect(pfx + "b_ff", {D});
    }
    expect("head.w", {D, cfg.num_classes});
    expect("head.b", {cfg.num_classes});
    if (model.has_ibil_) {
      expect("ibil.w_mu", {D, d});
      expect("ibil.b_mu", {d});
      expect("ibil.w_xi", {D, d});
      expect("ibil.b_xi", {d});
      expect("ibil.w_up", {d, D});
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed envelope: ") + e.what());
  }
}

void save_checkpoint(const SentimentClassifier& model, const std::string& path) {
  write_text_file(path, model_to_checkpoint(model));
}

SentimentClassifier load_checkpoint(const std::string& path) {
  return checkpoint_to_model(read_text_file(path));
}

}  // namespace ibg
