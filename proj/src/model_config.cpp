#include "pjx/model_config.hpp"

#include "pjx/errors.hpp"

namespace pjx {

void ModelConfig::validate() const {
  auto positive = [](const char* key, std::size_t v) {
    if (v == 0) throw ConfigError(key, "must be >= 1");
  };
  positive("feature_channels", feature_channels);
  positive("grid_rows", grid_rows);
  positive("grid_cols", grid_cols);
  positive("answer_count", answer_count);
  positive("word_embed", word_embed);
  positive("question_hidden", question_hidden);
  positive("question_layers", question_layers);
  positive("attention_hidden", attention_hidden);
  positive("answer_embed", answer_embed);
  positive("decoder_embed", decoder_embed);
  positive("decoder_hidden", decoder_hidden);
  positive("max_len", max_len);
  if (question_vocab < kReservedTokens) throw ConfigError("question_vocab", "must include the 4 reserved tokens");
  if (explanation_vocab < kReservedTokens) {
    throw ConfigError("explanation_vocab", "must include the 4 reserved tokens");
  }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"feature_channels", c.feature_channels},
                     {"grid_rows", c.grid_rows},
                     {"grid_cols", c.grid_cols},
                     {"question_vocab", c.question_vocab},
                     {"answer_count", c.answer_count},
                     {"explanation_vocab", c.explanation_vocab},
                     {"word_embed", c.word_embed},
                     {"question_hidden", c.question_hidden},
                     {"question_layers", c.question_layers},
                     {"attention_hidden", c.attention_hidden},
                     {"answer_embed", c.answer_embed},
                     {"decoder_embed", c.decoder_embed},
                     {"decoder_hidden", c.decoder_hidden},
                     {"max_len", c.max_len},
                     {"activity_mode", c.activity_mode},
                     {"answer_conditioned", c.answer_conditioned}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("feature_channels").get_to(c.feature_channels);
  j.at("grid_rows").get_to(c.grid_rows);
  j.at("grid_cols").get_to(c.grid_cols);
  j.at("question_vocab").get_to(c.question_vocab);
  j.at("answer_count").get_to(c.answer_count);
  j.at("explanation_vocab").get_to(c.explanation_vocab);
  j.at("word_embed").get_to(c.word_embed);
  j.at("question_hidden").get_to(c.question_hidden);
  j.at("question_layers").get_to(c.question_layers);
  j.at("attention_hidden").get_to(c.attention_hidden);
  j.at("answer_embed").get_to(c.answer_embed);
  j.at("decoder_embed").get_to(c.decoder_embed);
  j.at("decoder_hidden").get_to(c.decoder_hidden);
  j.at("max_len").get_to(c.max_len);
  j.at("activity_mode").get_to(c.activity_mode);
  j.at("answer_conditioned").get_to(c.answer_conditioned);
}

}  // namespace pjx
