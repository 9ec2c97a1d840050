#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "json.hpp"

namespace pjx {

// Reserved vocabulary ids shared by question and explanation vocabularies.
inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kBosId = 1;
inline constexpr std::size_t kEosId = 2;
inline constexpr std::size_t kUnkId = 3;
inline constexpr std::size_t kReservedTokens = 4;

struct ModelConfig {
  std::size_t feature_channels = 32;
  std::size_t grid_rows = 4;
  std::size_t grid_cols = 4;
  std::size_t question_vocab = kReservedTokens;
  std::size_t answer_count = 1;
  std::size_t explanation_vocab = kReservedTokens;
  std::size_t word_embed = 64;
  std::size_t question_hidden = 64;
  std::size_t question_layers = 2;
  std::size_t attention_hidden = 32;
  std::size_t answer_embed = 32;
  std::size_t decoder_embed = 32;
  std::size_t decoder_hidden = 64;
  std::size_t max_len = 20;
  // Activity recognition: the question representation is a vector of ones.
  bool activity_mode = false;
  // Ablation switch: when false the answer embedding is replaced by ones, so
  // pointing and fusion for the explanation never see the answer.
  bool answer_conditioned = true;

  std::size_t locations() const { return grid_rows * grid_cols; }
  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Dropout and randomness for one forward pass.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;

  static ForwardContext eval() { return {}; }
};

}  // namespace pjx
