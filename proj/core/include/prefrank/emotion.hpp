#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace prefrank {

// Channel order of the score head.
enum class Emotion : int {
  Anger = 0,
  Disgust = 1,
  Fear = 2,
  Happiness = 3,
  Sadness = 4,
  Surprise = 5,
  Neutral = 6,
};

inline constexpr std::size_t kNumEmotions = 7;

inline constexpr std::array<Emotion, 6> kTargetEmotions = {
    Emotion::Anger,   Emotion::Disgust,  Emotion::Fear,
    Emotion::Happiness, Emotion::Sadness, Emotion::Surprise};

inline constexpr std::size_t channel(Emotion e) { return static_cast<std::size_t>(e); }

// Lower-case name used in file names and wire payloads ("happiness").
std::string to_string(Emotion e);

// Accepts any case. Throws std::invalid_argument on unknown names.
Emotion parse_emotion(std::string_view name);

}  // namespace prefrank
