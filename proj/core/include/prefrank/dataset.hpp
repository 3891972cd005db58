#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "prefrank/face_sim.hpp"
#include "prefrank/image.hpp"

namespace prefrank::dataset {

struct PoolEntry {
  int id = 0;
  face::ActuatorVector actuators;
  FaceImage image;
};

// A generated pool has dense ids 0..n-1. Subsets keep the ids of the pool
// they were drawn from.
struct CandidatePool {
  std::vector<PoolEntry> entries;
  std::size_t size() const { return entries.size(); }
  std::vector<int> ids() const;
};

struct Pair {
  int left_id;
  int right_id;
  friend auto operator<=>(const Pair&, const Pair&) = default;
};

// Canonical unordered pairs: left_id < right_id, lexicographic order.
struct PairSet {
  std::vector<Pair> pairs;
  std::size_t size() const { return pairs.size(); }
};

// Sum(a_i b_i) / (|a| |b|). Throws DegenerateVector on a zero-norm input or
// a length mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Pairwise 1 - cosine similarity, row-major n x n.
std::vector<double> cosine_distance_matrix(std::span<const std::span<const double>> vectors);

// Greedy max-min (farthest point) selection on a distance matrix: seed with
// the most distant pair, then repeatedly add the candidate whose minimum
// distance to the selection is largest. Ties go to the lowest index.
// Returns selected indices in selection order.
std::vector<std::size_t> farthest_point_order(std::span<const double> distance, std::size_t n,
                                              std::size_t k);

// Same as above starting from raw vectors under cosine distance.
std::vector<std::size_t> select_diverse_indices(std::span<const std::span<const double>> vectors,
                                                std::size_t k);

// Diverse k-subset of the pool, returned in ascending id order.
// Throws InsufficientPool when the pool is smaller than k (or k < 2).
CandidatePool select_diverse(const CandidatePool& pool, std::size_t k = 100);

// Throws InvalidItems on duplicate ids; fewer than two ids yields no pairs.
PairSet enumerate_pairs(std::span<const int> ids);
PairSet enumerate_pairs(const CandidatePool& subset);

void write_pairs_csv(const std::filesystem::path& path, const PairSet& pairs);
PairSet read_pairs_csv(const std::filesystem::path& path);

// Model input: channel-major planes of height x width, values in [-1, 1].
struct PreprocessedImage {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  std::span<const double> plane(int c) const {
    const auto n = static_cast<std::size_t>(height) * width;
    return std::span<const double>(data).subspan(static_cast<std::size_t>(c) * n, n);
  }
};

// Bilinear resize with pixel-center alignment (no corner alignment).
FaceImage resize_bilinear(const FaceImage& image, int width, int height);

// Resize to 224x224 if needed, normalize x -> (x - 0.5) / 0.5, replicate the
// gray plane over `channels`. Throws InvalidImage on an empty image.
PreprocessedImage preprocess(const FaceImage& raw, int channels = 1);

}  // namespace prefrank::dataset
