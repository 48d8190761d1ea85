#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clann/linalg.hpp"

namespace clann {

struct Question {
  std::string id;
  std::string language;
  std::string text;
  std::vector<std::string> tokens;
  std::optional<std::string> translated_text;
  std::optional<Vector> precomputed_vector;
  // Vector of translated_text's rendering, when running on precomputed vectors.
  std::optional<Vector> translated_vector;
};

// Language bit carried by every training example: 1 = source, 0 = target.
enum class LanguageBit : int { target = 0, source = 1 };

// One (original, retrieved) pair; the unit the classifier scores.
struct PairExample {
  Question original;
  Question retrieved;
  int ir_rank = 1;
  std::optional<int> label;
  LanguageBit language = LanguageBit::source;
};

}  // namespace clann
