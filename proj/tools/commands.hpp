#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefrank/emotion.hpp"

namespace prefrank::cli {

namespace fs = std::filesystem;

// Bad invocation detected after parsing; maps to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenPoolArgs {
  fs::path out;
  std::size_t count = 500;
  std::uint64_t seed = 0;
  double bo_fraction = 0.5;
};

struct SelectArgs {
  fs::path pool;
  std::size_t k = 100;
};

struct AnnotateArgs {
  fs::path data_dir;
  fs::path subset;
  std::string mode = "synthetic";
  std::vector<Emotion> emotions;
  std::string annotator = "synthetic";
  std::uint64_t seed = 0;
  std::string schedule = "mergesort";
  bool resume = false;
  std::string bind = "127.0.0.1:8080";
  fs::path static_dir;
};

struct TrainArgs {
  fs::path data_dir;
  fs::path subset;
  fs::path pairs;
  std::vector<fs::path> sessions;
  std::vector<Emotion> emotions;
  int folds = 5;
  double learning_rate = 0.005;
  double weight_decay = 1e-5;
  double momentum = 0.9;
  int epochs = 300;
  int batch_size = 32;
  double sigmoid_scale = 1.0;
  std::uint64_t seed = 0;
};

struct OptimizeArgs {
  fs::path data_dir;
  std::optional<fs::path> model;
  std::vector<Emotion> emotions;
  int budget = 300;
  int init = 20;
  int baseline = 300;
  std::uint64_t seed = 0;
};

struct ReportArgs {
  fs::path data_dir;
  std::vector<fs::path> runs;
  fs::path out;
};

struct ServeArgs {
  fs::path data_dir;
  fs::path pool;
  std::string bind = "127.0.0.1:8080";
  fs::path static_dir;
};

int gen_pool(const GenPoolArgs& a);
int select(const SelectArgs& a);
int annotate(const AnnotateArgs& a);
int train(const TrainArgs& a);
int optimize(const OptimizeArgs& a);
int report(const ReportArgs& a);
int serve(const ServeArgs& a);

}  // namespace prefrank::cli
