#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "prefrank/emotion.hpp"
#include "prefrank/image.hpp"

namespace prefrank::face {

inline constexpr std::size_t kDefaultDof = 35;

// Normalized actuator command, every element in [0, 1]. 0.5 is the rest pose.
class ActuatorVector {
 public:
  ActuatorVector() = default;
  // Throws InvalidActuator if any element is outside [0, 1] or not finite.
  explicit ActuatorVector(std::vector<double> values);
  static ActuatorVector neutral(std::size_t dof = kDefaultDof);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const ActuatorVector&, const ActuatorVector&) = default;

 private:
  std::vector<double> values_;
};

// Fixed actuator index -> facial feature map. Indices at or beyond the
// configured DOF count are held at rest; indices >= 35 drive nothing.
namespace actuator {
inline constexpr std::size_t kBrowInnerL = 0, kBrowMidL = 1, kBrowOuterL = 2;
inline constexpr std::size_t kBrowInnerR = 3, kBrowMidR = 4, kBrowOuterR = 5;
inline constexpr std::size_t kCorrugator = 6, kForehead = 7;
inline constexpr std::size_t kUpperLidL = 8, kUpperLidR = 9;
inline constexpr std::size_t kLowerLidL = 10, kLowerLidR = 11;
inline constexpr std::size_t kGazeX = 12, kGazeY = 13, kPupilSize = 14;
inline constexpr std::size_t kCheekL = 15, kCheekR = 16, kNoseWrinkle = 17;
inline constexpr std::size_t kNostrilL = 18, kNostrilR = 19;
inline constexpr std::size_t kNasolabialL = 20, kNasolabialR = 21;
inline constexpr std::size_t kMouthCornerUpL = 22, kMouthCornerUpR = 23;
inline constexpr std::size_t kMouthCornerOutL = 24, kMouthCornerOutR = 25;
inline constexpr std::size_t kUpperLipL = 26, kUpperLipC = 27, kUpperLipR = 28;
inline constexpr std::size_t kLowerLipL = 29, kLowerLipC = 30, kLowerLipR = 31;
inline constexpr std::size_t kJawDrop = 32, kLipPress = 33, kPucker = 34;
inline constexpr std::size_t kFirstMouth = kMouthCornerUpL;
inline constexpr std::size_t kLastMouth = kPucker;
}  // namespace actuator

// Pixel rectangle [x0, x1) x [y0, y1).
struct Region {
  int x0, y0, x1, y1;
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

// Every pixel touched by a mouth actuator lies inside this rectangle.
inline constexpr Region kMouthRegion{56, 156, 168, 222};

struct FaceSimConfig {
  std::size_t dof = kDefaultDof;
  std::uint64_t optimum_seed = 20250;
  // Squared RBF bandwidth as a fraction of the squared distance from the
  // optimum to its antipode.
  double bandwidth_fraction = 0.15;
};

// Stand-in for the android + fixed camera. Pure and thread-safe.
class FaceSimulator {
 public:
  explicit FaceSimulator(FaceSimConfig config = {});

  const FaceSimConfig& config() const { return config_; }
  std::size_t dof() const { return config_.dof; }

  // 224x224 grayscale render. Throws InvalidActuator on dimension mismatch.
  FaceImage render(const ActuatorVector& v) const;

  // Hidden ground truth in [0, 1]: 1 at optimum(e), 0 at antipode(e).
  double latent_intensity(const ActuatorVector& v, Emotion e) const;

  const ActuatorVector& optimum(Emotion e) const { return optima_[channel(e)]; }
  // Cube vertex farthest from the optimum over the emotion's relevant
  // actuators; irrelevant actuators are mirrored (1 - optimum).
  ActuatorVector antipode(Emotion e) const;
  // Actuators the latent intensity of `e` depends on.
  std::span<const std::size_t> relevant(Emotion e) const { return relevant_[channel(e)]; }

 private:
  void check(const ActuatorVector& v) const;

  FaceSimConfig config_;
  std::array<ActuatorVector, kNumEmotions> optima_;
  std::array<std::vector<std::size_t>, kNumEmotions> relevant_;
  std::array<double, kNumEmotions> max_sq_distance_{};
};

}  // namespace prefrank::face
