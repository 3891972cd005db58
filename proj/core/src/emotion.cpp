#include "prefrank/emotion.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace prefrank {

namespace {
constexpr std::array<std::string_view, kNumEmotions> kNames = {
    "anger", "disgust", "fear", "happiness", "sadness", "surprise", "neutral"};
}

std::string to_string(Emotion e) { return std::string(kNames.at(channel(e))); }

Emotion parse_emotion(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == lower) return static_cast<Emotion>(i);
  }
  throw std::invalid_argument("unknown emotion '" + std::string(name) + "'");
}

}  // namespace prefrank
