#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace prefrank::bo {

// Sobol points on [0, 1)^dim with a seeded Cranley-Patterson rotation
// (every coordinate shifted by a fixed uniform offset, modulo 1).
class SobolSequence {
 public:
  SobolSequence(std::size_t dim, std::uint64_t seed);
  ~SobolSequence();
  SobolSequence(SobolSequence&&) noexcept;
  SobolSequence& operator=(SobolSequence&&) noexcept;

  std::size_t dim() const { return shift_.size(); }
  std::vector<double> next();

 private:
  struct Engine;
  std::unique_ptr<Engine> engine_;
  std::vector<double> shift_;
};

}  // namespace prefrank::bo
