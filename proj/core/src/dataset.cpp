#include "prefrank/dataset.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "prefrank/errors.hpp"

namespace prefrank::dataset {

std::vector<int> CandidatePool::ids() const {
  std::vector<int> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.id);
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DegenerateVector("length mismatch " + std::to_string(a.size()) + " vs " +
                           std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateVector("zero-norm vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> cosine_distance_matrix(std::span<const std::span<const double>> vectors) {
  const std::size_t n = vectors.size();
  if (n == 0) return {};
  const std::size_t dim = vectors[0].size();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    if (vectors[i].size() != dim) throw DegenerateVector("vectors differ in length");
    rows.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(vectors[i].data(), static_cast<Eigen::Index>(dim));
  }
  Eigen::VectorXd norms = rows.rowwise().norm();
  if ((norms.array() == 0.0).any()) throw DegenerateVector("zero-norm vector");
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(rows.rows(), rows.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(rows);
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      const double s = i == j ? 1.0 : gram(ii, jj) / (norms(ii) * norms(jj));
      const double d = std::max(0.0, 1.0 - s);
      out[i * n + j] = d;
      out[j * n + i] = d;
    }
  }
  return out;
}

std::vector<std::size_t> farthest_point_order(std::span<const double> distance, std::size_t n,
                                              std::size_t k) {
  if (k < 2) throw InsufficientPool("k must be at least 2");
  if (n < k)
    throw InsufficientPool("pool of " + std::to_string(n) + " cannot supply " +
                           std::to_string(k));
  if (distance.size() != n * n) throw InsufficientPool("distance matrix has wrong size");

  std::size_t best_i = 0, best_j = 1;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (distance[i * n + j] > best) {
        best = distance[i * n + j];
        best_i = i;
        best_j = j;
      }

  std::vector<std::size_t> order{best_i, best_j};
  std::vector<bool> taken(n, false);
  taken[best_i] = taken[best_j] = true;
  std::vector<double> min_dist(n);
  for (std::size_t c = 0; c < n; ++c)
    min_dist[c] = std::min(distance[c * n + best_i], distance[c * n + best_j]);

  while (order.size() < k) {
    std::size_t pick = n;
    double pick_dist = -1.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!taken[c] && min_dist[c] > pick_dist) {
        pick_dist = min_dist[c];
        pick = c;
      }
    }
    taken[pick] = true;
    order.push_back(pick);
    for (std::size_t c = 0; c < n; ++c)
      min_dist[c] = std::min(min_dist[c], distance[c * n + pick]);
  }
  return order;
}

std::vector<std::size_t> select_diverse_indices(std::span<const std::span<const double>> vectors,
                                                std::size_t k) {
  if (vectors.size() < k)
    throw InsufficientPool("pool of " + std::to_string(vectors.size()) + " cannot supply " +
                           std::to_string(k));
  const auto dist = cosine_distance_matrix(vectors);
  return farthest_point_order(dist, vectors.size(), k);
}

CandidatePool select_diverse(const CandidatePool& pool, std::size_t k) {
  if (k < 2) throw InsufficientPool("k must be at least 2");
  if (pool.size() < k)
    throw InsufficientPool("pool of " + std::to_string(pool.size()) + " cannot supply " +
                           std::to_string(k));
  // Stable in id order so ties resolve to the lowest id.
  std::vector<const PoolEntry*> sorted;
  for (const auto& e : pool.entries) sorted.push_back(&e);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const PoolEntry* a, const PoolEntry* b) { return a->id < b->id; });

  std::vector<std::size_t> chosen;
  if (pool.size() == k) {
    for (std::size_t i = 0; i < k; ++i) chosen.push_back(i);
  } else {
    std::vector<std::span<const double>> vecs;
    for (const auto* e : sorted) vecs.push_back(e->image.pixels());
    chosen = select_diverse_indices(vecs, k);
    std::sort(chosen.begin(), chosen.end());
  }
  CandidatePool out;
  for (auto i : chosen) out.entries.push_back(*sorted[i]);
  return out;
}

PairSet enumerate_pairs(std::span<const int> ids) {
  std::vector<int> sorted(ids.begin(), ids.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidItems("duplicate ids in subset");
  PairSet out;
  out.pairs.reserve(sorted.size() * (sorted.size() - (sorted.empty() ? 0 : 1)) / 2);
  for (std::size_t i = 0; i < sorted.size(); ++i)
    for (std::size_t j = i + 1; j < sorted.size(); ++j) out.pairs.push_back({sorted[i], sorted[j]});
  return out;
}

PairSet enumerate_pairs(const CandidatePool& subset) {
  const auto ids = subset.ids();
  return enumerate_pairs(ids);
}

void write_pairs_csv(const std::filesystem::path& path, const PairSet& pairs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "left_id,right_id\n";
  for (const auto& p : pairs.pairs) out << p.left_id << ',' << p.right_id << '\n';
}

PairSet read_pairs_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "left_id,right_id")
    throw FormatError(path.string() + ": expected header left_id,right_id");
  PairSet out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError(path.string() + ": bad row '" + line + "'");
    out.pairs.push_back({std::stoi(line.substr(0, comma)), std::stoi(line.substr(comma + 1))});
  }
  return out;
}

FaceImage resize_bilinear(const FaceImage& image, int width, int height) {
  if (image.empty()) throw InvalidImage("empty image");
  if (image.width() == width && image.height() == height) return image;
  FaceImage out(width, height);
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  auto src_coord = [](int dst, double scale, int limit, int& lo, int& hi, double& frac) {
    double s = (dst + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(limit - 1));
    lo = static_cast<int>(std::floor(s));
    hi = std::min(lo + 1, limit - 1);
    frac = s - lo;
  };
  for (int y = 0; y < height; ++y) {
    int y0, y1;
    double fy;
    src_coord(y, sy, image.height(), y0, y1, fy);
    for (int x = 0; x < width; ++x) {
      int x0, x1;
      double fx;
      src_coord(x, sx, image.width(), x0, x1, fx);
      const double top = image.at(x0, y0) * (1 - fx) + image.at(x1, y0) * fx;
      const double bottom = image.at(x0, y1) * (1 - fx) + image.at(x1, y1) * fx;
      out.at(x, y) = top * (1 - fy) + bottom * fy;
    }
  }
  return out;
}

PreprocessedImage preprocess(const FaceImage& raw, int channels) {
  if (raw.empty() || raw.width() <= 0 || raw.height() <= 0) throw InvalidImage("empty image");
  if (channels <= 0) throw InvalidImage("channel count must be positive");
  const FaceImage sized = resize_bilinear(raw, kImageSize, kImageSize);
  PreprocessedImage out;
  out.channels = channels;
  out.height = kImageSize;
  out.width = kImageSize;
  const auto px = sized.pixels();
  out.data.resize(px.size() * static_cast<std::size_t>(channels));
  for (int c = 0; c < channels; ++c)
    std::transform(px.begin(), px.end(), out.data.begin() + static_cast<std::ptrdiff_t>(c * px.size()),
                   [](double x) { return (x - 0.5) / 0.5; });
  return out;
}

}  // namespace prefrank::dataset
