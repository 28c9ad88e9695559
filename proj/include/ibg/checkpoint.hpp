#pragma once

#include <string>

#include "ibg/model.hpp"

namespace ibg {

// Versioned JSON envelope: {format_version, phase, config, vocab, tensors};
// tensor data is base64 little-endian f64. Save/load round-trips bit-exactly.
std::string model_to_checkpoint(const SentimentClassifier& model);
SentimentClassifier checkpoint_to_model(const std::string& text);

void save_checkpoint(const SentimentClassifier& model, const std::string& path);
SentimentClassifier load_checkpoint(const std::string& path);

}  // namespace ibg
