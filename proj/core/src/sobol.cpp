#include "prefrank/sobol.hpp"

#include <boost/random/sobol.hpp>
#include <cmath>

#include "prefrank/random.hpp"

namespace prefrank::bo {

struct SobolSequence::Engine {
  explicit Engine(std::size_t dim) : gen(dim) {}
  boost::random::sobol gen;
};

SobolSequence::SobolSequence(std::size_t dim, std::uint64_t seed)
    : engine_(std::make_unique<Engine>(dim)), shift_(dim) {
  Rng rng(derive_seed(seed, 0x50b0));
  for (auto& s : shift_) s = rng.uniform();
}

SobolSequence::~SobolSequence() = default;
SobolSequence::SobolSequence(SobolSequence&&) noexcept = default;
SobolSequence& SobolSequence::operator=(SobolSequence&&) noexcept = default;

std::vector<double> SobolSequence::next() {
  std::vector<double> point(shift_.size());
  for (std::size_t d = 0; d < point.size(); ++d) {
    const auto raw = static_cast<std::uint64_t>(engine_->gen());
    const double u = static_cast<double>(raw >> 11) * 0x1.0p-53;
    double x = u + shift_[d];
    if (x >= 1.0) x -= 1.0;
    point[d] = x;
  }
  return point;
}

}  // namespace prefrank::bo
