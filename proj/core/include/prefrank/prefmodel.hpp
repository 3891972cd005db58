#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prefrank/dataset.hpp"
#include "prefrank/emotion.hpp"
#include "prefrank/ranking.hpp"

namespace prefrank::model {

// Shapes of the scorer. The frozen branch sees the image average-pooled by
// `frozen_pool`, the trainable branch by `train_pool`. The concatenated
// feature must be 512 wide to feed the (512, 7) head.
struct ModelDims {
  int image_size = kImageSize;
  int channels = 1;
  int frozen_pool = 8;
  int frozen_dim = 480;
  int train_pool = 16;
  int hidden = 16;
  int train_dim = 32;

  static constexpr int kFeatureDim = 512;
  static constexpr int kClasses = static_cast<int>(kNumEmotions);

  int frozen_side() const { return image_size / frozen_pool; }
  int train_side() const { return image_size / train_pool; }
  int frozen_in() const { return frozen_side() * frozen_side(); }
  int train_in() const { return train_side() * train_side(); }
  int feature_dim() const { return frozen_dim + train_dim; }
};

struct ModelConfig {
  ModelDims dims;
  Emotion target = Emotion::Happiness;
  double sigmoid_scale = 1.0;
  std::uint64_t seed = 0;
};

// Trainable weights: the two-layer tanh perceptron and the softmax head.
struct Parameters {
  Eigen::MatrixXd w1;      // hidden x train_in
  Eigen::VectorXd b1;      // hidden
  Eigen::MatrixXd w2;      // train_dim x hidden
  Eigen::VectorXd b2;      // train_dim
  Eigen::MatrixXd head_w;  // 7 x 512
  Eigen::VectorXd head_b;  // 7

  static Parameters zeros_like(const ModelDims& dims);

  std::size_t count() const;
  // Flat views in the fixed order w1, b1, w2, b2, head_w, head_b
  // (column-major within each block).
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  static const std::vector<std::string>& block_names();
};

// A preprocessed image reduced to what the scorer consumes: the pooled
// input of the trainable branch and the (cached) frozen-branch features.
struct EncodedImage {
  Eigen::VectorXd train_input;
  Eigen::VectorXd frozen_features;
};

// Index-based pair over an image table. label == 1 means `a` is preferred.
struct PreferencePair {
  std::size_t a = 0;
  std::size_t b = 0;
  int label = 0;
};

struct Gradients {
  Parameters trainable;
  // Stop-gradient on the frozen projection: always all zeros.
  Eigen::MatrixXd frozen;
};

// Siamese scorer: the same weights score both images of a pair; the pair
// probability is sigmoid(scale * (s_a - s_b)) with s = softmax(head)[target].
class PreferenceModel {
 public:
  // Seeded frozen projection and trainable initialization.
  // Throws InvalidInput on inconsistent dimensions.
  static PreferenceModel initialize(const ModelConfig& config);

  // Reassembles a model from stored trainable weights; the frozen branch is
  // regenerated from the seed. Throws InvalidInput on a shape mismatch.
  static PreferenceModel from_parameters(const ModelConfig& config, Parameters params);

  const ModelConfig& config() const { return config_; }
  const ModelDims& dims() const { return config_.dims; }
  Emotion target() const { return config_.target; }
  double sigmoid_scale() const { return config_.sigmoid_scale; }

  const Parameters& parameters() const { return params_; }
  Parameters& parameters() { return params_; }
  const Eigen::MatrixXd& frozen_projection() const { return frozen_; }
  // SHA-256 of the frozen projection as little-endian doubles.
  std::string frozen_checksum() const;

  // Throws InvalidInput when the image does not match the model's shape.
  EncodedImage encode(const dataset::PreprocessedImage& image) const;
  std::vector<EncodedImage> encode_all(std::span<const dataset::PreprocessedImage> images) const;

  // Softmax distribution over the 7 emotion channels.
  Eigen::VectorXd score(const dataset::PreprocessedImage& image) const;
  Eigen::VectorXd score(const EncodedImage& image) const;
  double target_score(const EncodedImage& image) const;
  // log(s / (1 - s)) for the target channel, from the logits; a monotone
  // transform of target_score that does not round to a constant near 1.
  double target_log_odds(const EncodedImage& image) const;

  double pair_probability(const EncodedImage& a, const EncodedImage& b) const;
  double pair_probability(const dataset::PreprocessedImage& a,
                          const dataset::PreprocessedImage& b) const;

 private:
  PreferenceModel(ModelConfig config, Eigen::MatrixXd frozen, Parameters params)
      : config_(std::move(config)), frozen_(std::move(frozen)), params_(std::move(params)) {}

  ModelConfig config_;
  Eigen::MatrixXd frozen_;  // frozen_dim x frozen_in
  Parameters params_;
};

inline constexpr double kBceEpsilon = 1e-7;

// -[y log p + (1 - y) log(1 - p)] with p clamped to [eps, 1 - eps].
double bce_loss(int y, double predicted);
// Mean BCE over (label, prediction) pairs. Throws NoData on empty input.
double mean_bce(std::span<const int> labels, std::span<const double> predictions);

// Mean BCE of the model over the pairs.
double pair_loss(const PreferenceModel& m, std::span<const EncodedImage> images,
                 std::span<const PreferencePair> pairs);

// Exact gradient of pair_loss with respect to the trainable parameters.
// Throws NoData on an empty batch.
Gradients gradients(const PreferenceModel& m, std::span<const EncodedImage> images,
                    std::span<const PreferencePair> batch);

struct TrainConfig {
  double learning_rate = 0.005;
  double weight_decay = 1e-5;
  double momentum = 0.9;
  int epochs = 300;
  int batch_size = 32;
  int patience = 30;  // epochs without validation improvement; 0 disables
  std::uint64_t seed = 0;
};

struct TrainResult {
  PreferenceModel model;
  std::vector<double> train_loss;       // per epoch, after the epoch's updates
  std::vector<double> validation_loss;  // empty without a validation set
  int best_epoch = -1;                  // -1 without a validation set
};

// Minibatch SGD with momentum and decoupled weight decay on the weight
// matrices (not biases). With validation pairs, returns the weights of the
// epoch with the lowest validation loss and stops after `patience` epochs
// without improvement. Throws NoData on an empty training set.
TrainResult train(const PreferenceModel& init, std::span<const EncodedImage> images,
                  std::span<const PreferencePair> pairs, const TrainConfig& config,
                  std::span<const PreferencePair> validation = {});

// Fraction of pairs where (p > 0.5) agrees with (label == 1); p == 0.5 is
// counted as wrong. Throws NoData on an empty set.
double evaluate_accuracy(const PreferenceModel& m, std::span<const EncodedImage> images,
                         std::span<const PreferencePair> pairs);

struct LabeledPair {
  int left_id = 0;
  int right_id = 0;
  int label = 0;  // 1: left preferred
  int votes_left = 0;
  int votes_right = 0;
};

struct LabelReport {
  std::vector<LabeledPair> labels;
  std::size_t dropped_ties = 0;  // includes pairs nobody voted on
  std::size_t abstentions = 0;   // annotator-pair votes skipped for missing items
  std::string provenance;
};

// Majority vote of the annotators' rankings on every pair. Annotators that
// do not rank both items abstain; ties are dropped and counted.
LabelReport build_labels(std::span<const ranking::Ranking> rankings, const dataset::PairSet& pairs,
                         std::string provenance = "synthetic");

struct FoldReport {
  std::vector<int> train_ids;
  std::vector<int> validation_ids;
  std::size_t train_pairs = 0;
  std::size_t validation_pairs = 0;
  std::size_t dropped_ties = 0;
  double accuracy = 0.0;
  double validation_loss = 0.0;
  std::vector<double> train_loss;
};

struct CvReport {
  std::vector<FoldReport> folds;
  double mean_accuracy = 0.0;
};

// Image-level k-fold cross-validation: ids are shuffled with
// `train_config.seed`, split into k folds, and pairs are formed only within
// the training side and within the validation fold. Each fold trains a fresh
// model from `model_config`. Throws InvalidSplit if there are fewer than k
// images or k < 2.
CvReport kfold_cv(const std::map<int, dataset::PreprocessedImage>& images,
                  std::span<const ranking::Ranking> rankings, int k,
                  const ModelConfig& model_config, const TrainConfig& train_config);

// Same, with images already encoded by a model built from `model_config`.
CvReport kfold_cv(const std::map<int, EncodedImage>& encoded,
                  std::span<const ranking::Ranking> rankings, int k,
                  const ModelConfig& model_config, const TrainConfig& train_config);

// Binary checkpoint: "PRFMODEL", u32 version, u64 header length, JSON
// header (seed, dims, frozen checksum, target, sigmoid_scale, blocks), then
// the trainable parameters as little-endian float64.
void save_checkpoint(const std::filesystem::path& path, const PreferenceModel& m);
// Throws FormatError on a malformed file or a frozen checksum mismatch.
PreferenceModel load_checkpoint(const std::filesystem::path& path);

}  // namespace prefrank::model
