#include "prefrank/prefmodel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <unordered_map>

#include "prefrank/errors.hpp"
#include "prefrank/hashing.hpp"
#include "prefrank/random.hpp"

namespace prefrank::model {

namespace {

void check_dims(const ModelDims& d) {
  auto bad = [](const std::string& why) { throw InvalidInput("model dims: " + why); };
  if (d.image_size <= 0 || d.channels <= 0) bad("image size and channels must be positive");
  if (d.frozen_pool <= 0 || d.image_size % d.frozen_pool != 0)
    bad("frozen_pool must divide image_size");
  if (d.train_pool <= 0 || d.image_size % d.train_pool != 0)
    bad("train_pool must divide image_size");
  if (d.frozen_dim <= 0 || d.hidden <= 0 || d.train_dim <= 0) bad("widths must be positive");
  if (d.feature_dim() != ModelDims::kFeatureDim)
    bad("frozen_dim + train_dim must be " + std::to_string(ModelDims::kFeatureDim));
}

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = stddev * rng.normal();
  return m;
}

Eigen::MatrixXd make_frozen(const ModelConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 1));
  return gaussian(rng, cfg.dims.frozen_dim, cfg.dims.frozen_in(),
                  1.0 / std::sqrt(static_cast<double>(cfg.dims.frozen_in())));
}

// Average over channels and pool x pool blocks; row-major output.
Eigen::VectorXd avg_pool(const dataset::PreprocessedImage& img, int pool) {
  const int side = img.width / pool;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(side) * side);
  for (int c = 0; c < img.channels; ++c) {
    const auto plane = img.plane(c);
    for (int y = 0; y < img.height; ++y) {
      const auto row = static_cast<Eigen::Index>(y / pool) * side;
      for (int x = 0; x < img.width; ++x) out(row + x / pool) += plane[static_cast<std::size_t>(y) * img.width + x];
    }
  }
  out /= static_cast<double>(pool) * pool * img.channels;
  return out;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Column-wise forward pass over a set of encoded images.
struct Forward {
  Eigen::MatrixXd x;       // train_in x m
  Eigen::MatrixXd frozen;  // frozen_dim x m
  Eigen::MatrixXd h;       // hidden x m
  Eigen::MatrixXd t;       // train_dim x m
  Eigen::MatrixXd z;       // 7 x m (logits)
  Eigen::MatrixXd p;       // 7 x m (softmax)
};

Forward forward(const PreferenceModel& m, std::span<const EncodedImage> images,
                std::span<const std::size_t> columns) {
  const auto& d = m.dims();
  const auto& w = m.parameters();
  const auto cols = static_cast<Eigen::Index>(columns.size());
  Forward f;
  f.x.resize(d.train_in(), cols);
  f.frozen.resize(d.frozen_dim, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const auto& img = images[columns[static_cast<std::size_t>(c)]];
    f.x.col(c) = img.train_input;
    f.frozen.col(c) = img.frozen_features;
  }
  f.h = ((w.w1 * f.x).colwise() + w.b1).array().tanh().matrix();
  f.t = ((w.w2 * f.h).colwise() + w.b2).array().tanh().matrix();
  Eigen::MatrixXd& logits = f.z;
  logits = w.head_w.leftCols(d.frozen_dim) * f.frozen +
                           w.head_w.rightCols(d.train_dim) * f.t;
  logits.colwise() += w.head_b;
  f.p.resize(logits.rows(), cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double mx = logits.col(c).maxCoeff();
    const Eigen::VectorXd e = (logits.col(c).array() - mx).exp().matrix();
    f.p.col(c) = e / e.sum();
  }
  return f;
}

struct BatchColumns {
  std::vector<std::size_t> columns;                   // image index per column
  std::unordered_map<std::size_t, Eigen::Index> col;  // image index -> column
};

BatchColumns gather(std::span<const PreferencePair> pairs, std::size_t num_images) {
  BatchColumns b;
  for (const auto& p : pairs) {
    for (auto idx : {p.a, p.b}) {
      if (idx >= num_images) throw InvalidInput("pair references image " + std::to_string(idx));
      if (b.col.emplace(idx, static_cast<Eigen::Index>(b.columns.size())).second)
        b.columns.push_back(idx);
    }
  }
  return b;
}

// Gradient of the mean loss over `pairs` into `g` (overwritten). Returns the loss.
double backprop(const PreferenceModel& m, std::span<const EncodedImage> images,
                std::span<const PreferencePair> pairs, Parameters& g) {
  if (pairs.empty()) throw NoData("empty batch");
  const auto& d = m.dims();
  const auto& w = m.parameters();
  const auto target = static_cast<Eigen::Index>(channel(m.target()));
  const double scale = m.sigmoid_scale();
  const auto batch = gather(pairs, images.size());
  const Forward f = forward(m, images, batch.columns);
  const auto cols = static_cast<Eigen::Index>(batch.columns.size());

  // d loss / d score[target] per column.
  Eigen::VectorXd dscore = Eigen::VectorXd::Zero(cols);
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  double loss = 0.0;
  for (const auto& p : pairs) {
    const auto ca = batch.col.at(p.a), cb = batch.col.at(p.b);
    const double yhat = sigmoid(scale * (f.p(target, ca) - f.p(target, cb)));
    loss += bce_loss(p.label, yhat);
    if (yhat < kBceEpsilon || yhat > 1.0 - kBceEpsilon) continue;  // clamped: flat
    const double dz = (yhat - p.label) * inv_n;
    dscore(ca) += scale * dz;
    dscore(cb) -= scale * dz;
  }

  // softmax: d p_t / d logit_k = p_t (delta_tk - p_k)
  Eigen::MatrixXd dlogits = -f.p;
  dlogits.row(target).array() += 1.0;
  for (Eigen::Index c = 0; c < cols; ++c) dlogits.col(c) *= f.p(target, c) * dscore(c);

  g.head_w.resize(w.head_w.rows(), w.head_w.cols());
  g.head_w.leftCols(d.frozen_dim).noalias() = dlogits * f.frozen.transpose();
  g.head_w.rightCols(d.train_dim).noalias() = dlogits * f.t.transpose();
  g.head_b = dlogits.rowwise().sum();

  const Eigen::MatrixXd dz2 =
      ((w.head_w.rightCols(d.train_dim).transpose() * dlogits).array() *
       (1.0 - f.t.array().square()))
          .matrix();
  g.w2.noalias() = dz2 * f.h.transpose();
  g.b2 = dz2.rowwise().sum();
  const Eigen::MatrixXd dz1 =
      ((w.w2.transpose() * dz2).array() * (1.0 - f.h.array().square())).matrix();
  g.w1.noalias() = dz1 * f.x.transpose();
  g.b1 = dz1.rowwise().sum();
  return loss * inv_n;
}

std::vector<double> target_scores(const PreferenceModel& m, std::span<const EncodedImage> images) {
  std::vector<std::size_t> all(images.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Forward f = forward(m, images, all);
  const auto target = static_cast<Eigen::Index>(channel(m.target()));
  std::vector<double> s(images.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = f.p(target, static_cast<Eigen::Index>(i));
  return s;
}

double loss_from_scores(const PreferenceModel& m, const std::vector<double>& s,
                        std::span<const PreferencePair> pairs) {
  if (pairs.empty()) throw NoData("no pairs");
  double total = 0.0;
  for (const auto& p : pairs)
    total += bce_loss(p.label, sigmoid(m.sigmoid_scale() * (s.at(p.a) - s.at(p.b))));
  return total / static_cast<double>(pairs.size());
}

}  // namespace

Parameters Parameters::zeros_like(const ModelDims& d) {
  Parameters p;
  p.w1 = Eigen::MatrixXd::Zero(d.hidden, d.train_in());
  p.b1 = Eigen::VectorXd::Zero(d.hidden);
  p.w2 = Eigen::MatrixXd::Zero(d.train_dim, d.hidden);
  p.b2 = Eigen::VectorXd::Zero(d.train_dim);
  p.head_w = Eigen::MatrixXd::Zero(ModelDims::kClasses, d.feature_dim());
  p.head_b = Eigen::VectorXd::Zero(ModelDims::kClasses);
  return p;
}

std::size_t Parameters::count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size() + head_w.size() +
                                  head_b.size());
}

std::vector<std::span<double>> Parameters::blocks() {
  auto s = [](auto& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  return {s(w1), s(b1), s(w2), s(b2), s(head_w), s(head_b)};
}

std::vector<std::span<const double>> Parameters::blocks() const {
  auto s = [](const auto& m) {
    return std::span<const double>(m.data(), static_cast<std::size_t>(m.size()));
  };
  return {s(w1), s(b1), s(w2), s(b2), s(head_w), s(head_b)};
}

const std::vector<std::string>& Parameters::block_names() {
  static const std::vector<std::string> names = {"w1", "b1", "w2", "b2", "head_w", "head_b"};
  return names;
}

PreferenceModel PreferenceModel::initialize(const ModelConfig& config) {
  check_dims(config.dims);
  if (!(config.sigmoid_scale > 0.0)) throw InvalidInput("sigmoid_scale must be positive");
  const auto& d = config.dims;
  Rng rng(derive_seed(config.seed, 2));
  Parameters p = Parameters::zeros_like(d);
  p.w1 = gaussian(rng, d.hidden, d.train_in(), 1.0 / std::sqrt(static_cast<double>(d.train_in())));
  p.w2 = gaussian(rng, d.train_dim, d.hidden, 1.0 / std::sqrt(static_cast<double>(d.hidden)));
  p.head_w = gaussian(rng, ModelDims::kClasses, d.feature_dim(),
                      0.1 / std::sqrt(static_cast<double>(d.feature_dim())));
  return PreferenceModel(config, make_frozen(config), std::move(p));
}

PreferenceModel PreferenceModel::from_parameters(const ModelConfig& config, Parameters params) {
  check_dims(config.dims);
  if (!(config.sigmoid_scale > 0.0)) throw InvalidInput("sigmoid_scale must be positive");
  const Parameters ref = Parameters::zeros_like(config.dims);
  const auto want = ref.blocks();
  const auto got = params.blocks();
  for (std::size_t i = 0; i < want.size(); ++i)
    if (want[i].size() != got[i].size())
      throw InvalidInput("parameter block " + Parameters::block_names()[i] + " has wrong size");
  if (params.w1.rows() != ref.w1.rows() || params.w2.rows() != ref.w2.rows() ||
      params.head_w.rows() != ref.head_w.rows())
    throw InvalidInput("parameter block shapes do not match dims");
  return PreferenceModel(config, make_frozen(config), std::move(params));
}

std::string PreferenceModel::frozen_checksum() const {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(static_cast<std::size_t>(frozen_.size()) * 8);
  for (Eigen::Index i = 0; i < frozen_.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(frozen_.data()[i]);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  return sha256_hex(bytes);
}

EncodedImage PreferenceModel::encode(const dataset::PreprocessedImage& image) const {
  const auto& d = dims();
  if (image.channels != d.channels || image.width != d.image_size ||
      image.height != d.image_size ||
      image.data.size() != static_cast<std::size_t>(d.channels) * d.image_size * d.image_size)
    throw InvalidInput("expected a " + std::to_string(d.channels) + "x" +
                       std::to_string(d.image_size) + "x" + std::to_string(d.image_size) +
                       " preprocessed image");
  EncodedImage e;
  e.train_input = avg_pool(image, d.train_pool);
  e.frozen_features = frozen_ * avg_pool(image, d.frozen_pool);
  return e;
}

std::vector<EncodedImage> PreferenceModel::encode_all(
    std::span<const dataset::PreprocessedImage> images) const {
  std::vector<EncodedImage> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(encode(img));
  return out;
}

Eigen::VectorXd PreferenceModel::score(const EncodedImage& image) const {
  const std::size_t col = 0;
  const Forward f = forward(*this, std::span<const EncodedImage>(&image, 1),
                            std::span<const std::size_t>(&col, 1));
  return f.p.col(0);
}

Eigen::VectorXd PreferenceModel::score(const dataset::PreprocessedImage& image) const {
  return score(encode(image));
}

double PreferenceModel::target_score(const EncodedImage& image) const {
  return score(image)(static_cast<Eigen::Index>(channel(config_.target)));
}

double PreferenceModel::target_log_odds(const EncodedImage& image) const {
  const std::size_t col = 0;
  const Forward f = forward(*this, std::span<const EncodedImage>(&image, 1),
                            std::span<const std::size_t>(&col, 1));
  const auto t = static_cast<Eigen::Index>(channel(config_.target));
  const Eigen::VectorXd z = f.z.col(0);
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < z.size(); ++k)
    if (k != t) mx = std::max(mx, z(k));
  double sum = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k)
    if (k != t) sum += std::exp(z(k) - mx);
  return z(t) - (mx + std::log(sum));
}

double PreferenceModel::pair_probability(const EncodedImage& a, const EncodedImage& b) const {
  return sigmoid(config_.sigmoid_scale * (target_score(a) - target_score(b)));
}

double PreferenceModel::pair_probability(const dataset::PreprocessedImage& a,
                                         const dataset::PreprocessedImage& b) const {
  return pair_probability(encode(a), encode(b));
}

double bce_loss(int y, double predicted) {
  const double p = std::clamp(predicted, kBceEpsilon, 1.0 - kBceEpsilon);
  return -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
}

double mean_bce(std::span<const int> labels, std::span<const double> predictions) {
  if (labels.empty()) throw NoData("empty batch");
  if (labels.size() != predictions.size()) throw InvalidInput("labels/predictions size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) total += bce_loss(labels[i], predictions[i]);
  return total / static_cast<double>(labels.size());
}

double pair_loss(const PreferenceModel& m, std::span<const EncodedImage> images,
                 std::span<const PreferencePair> pairs) {
  if (pairs.empty()) throw NoData("no pairs");
  const auto batch = gather(pairs, images.size());
  const Forward f = forward(m, images, batch.columns);
  const auto target = static_cast<Eigen::Index>(channel(m.target()));
  std::vector<int> labels;
  std::vector<double> preds;
  for (const auto& p : pairs) {
    labels.push_back(p.label);
    preds.push_back(sigmoid(m.sigmoid_scale() *
                            (f.p(target, batch.col.at(p.a)) - f.p(target, batch.col.at(p.b)))));
  }
  return mean_bce(labels, preds);
}

Gradients gradients(const PreferenceModel& m, std::span<const EncodedImage> images,
                    std::span<const PreferencePair> batch) {
  Gradients g;
  backprop(m, images, batch, g.trainable);
  g.frozen = Eigen::MatrixXd::Zero(m.frozen_projection().rows(), m.frozen_projection().cols());
  return g;
}

TrainResult train(const PreferenceModel& init, std::span<const EncodedImage> images,
                  std::span<const PreferencePair> pairs, const TrainConfig& config,
                  std::span<const PreferencePair> validation) {
  if (pairs.empty()) throw NoData("training set is empty");
  if (!(config.learning_rate > 0.0) || config.weight_decay < 0.0 || config.momentum < 0.0 ||
      config.epochs <= 0 || config.batch_size <= 0)
    throw InvalidInput("invalid training configuration");

  TrainResult result{init, {}, {}, -1};
  PreferenceModel& model = result.model;
  std::optional<Parameters> best;
  double best_val = std::numeric_limits<double>::infinity();

  Parameters grad;
  Parameters velocity = Parameters::zeros_like(model.dims());
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<PreferencePair> batch;
  Rng rng(config.seed);
  const auto bs = static_cast<std::size_t>(config.batch_size);
  const double decay = config.learning_rate * config.weight_decay;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + bs); ++i)
        batch.push_back(pairs[order[i]]);
      backprop(model, images, batch, grad);

      auto& w = model.parameters();
      auto params = w.blocks();
      auto vel = velocity.blocks();
      const auto g = std::as_const(grad).blocks();
      for (std::size_t b = 0; b < params.size(); ++b) {
        for (std::size_t i = 0; i < params[b].size(); ++i) {
          vel[b][i] = config.momentum * vel[b][i] + g[b][i];
          params[b][i] -= config.learning_rate * vel[b][i];
        }
      }
      if (decay > 0.0) {
        w.w1 *= 1.0 - decay;
        w.w2 *= 1.0 - decay;
        w.head_w *= 1.0 - decay;
      }
    }

    const auto scores = target_scores(model, images);
    result.train_loss.push_back(loss_from_scores(model, scores, pairs));
    if (!validation.empty()) {
      const double val = loss_from_scores(model, scores, validation);
      result.validation_loss.push_back(val);
      if (val < best_val) {
        best_val = val;
        best = model.parameters();
        result.best_epoch = epoch;
      } else if (config.patience > 0 && epoch - result.best_epoch >= config.patience) {
        break;
      }
    }
  }
  if (best) model.parameters() = std::move(*best);
  return result;
}

double evaluate_accuracy(const PreferenceModel& m, std::span<const EncodedImage> images,
                         std::span<const PreferencePair> pairs) {
  if (pairs.empty()) throw NoData("no pairs to evaluate");
  const auto s = target_scores(m, images);
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    const double prob = sigmoid(m.sigmoid_scale() * (s.at(p.a) - s.at(p.b)));
    if ((prob > 0.5) == (p.label == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

LabelReport build_labels(std::span<const ranking::Ranking> rankings, const dataset::PairSet& pairs,
                         std::string provenance) {
  if (rankings.empty()) throw NoData("no rankings to vote with");
  std::vector<std::unordered_map<ranking::ItemId, std::size_t>> positions;
  for (const auto& r : rankings) positions.push_back(r.positions());

  LabelReport report;
  report.provenance = std::move(provenance);
  for (const auto& pair : pairs.pairs) {
    LabeledPair lp{pair.left_id, pair.right_id, 0, 0, 0};
    for (const auto& pos : positions) {
      const auto l = pos.find(pair.left_id);
      const auto r = pos.find(pair.right_id);
      if (l == pos.end() || r == pos.end()) {
        ++report.abstentions;
        continue;
      }
      (l->second < r->second ? lp.votes_left : lp.votes_right) += 1;
    }
    if (lp.votes_left == lp.votes_right) {
      ++report.dropped_ties;
      continue;
    }
    lp.label = lp.votes_left > lp.votes_right ? 1 : 0;
    report.labels.push_back(lp);
  }
  return report;
}

CvReport kfold_cv(const std::map<int, dataset::PreprocessedImage>& images,
                  std::span<const ranking::Ranking> rankings, int k,
                  const ModelConfig& model_config, const TrainConfig& train_config) {
  const auto encoder = PreferenceModel::initialize(model_config);
  std::map<int, EncodedImage> encoded;
  for (const auto& [id, img] : images) encoded.emplace(id, encoder.encode(img));
  return kfold_cv(encoded, rankings, k, model_config, train_config);
}

CvReport kfold_cv(const std::map<int, EncodedImage>& encoded,
                  std::span<const ranking::Ranking> rankings, int k,
                  const ModelConfig& model_config, const TrainConfig& train_config) {
  if (k < 2) throw InvalidSplit("k must be at least 2");
  if (encoded.size() < static_cast<std::size_t>(k))
    throw InvalidSplit(std::to_string(encoded.size()) + " images cannot form " +
                       std::to_string(k) + " folds");

  std::vector<int> ids;
  std::vector<EncodedImage> table;
  std::unordered_map<int, std::size_t> index;
  for (const auto& [id, e] : encoded) {
    index.emplace(id, table.size());
    ids.push_back(id);
    table.push_back(e);
  }
  std::vector<int> shuffled = ids;
  Rng rng(derive_seed(train_config.seed, 0xf01d));
  rng.shuffle(shuffled);

  const auto to_pairs = [&](const std::vector<int>& side, std::size_t& dropped) {
    const auto labels = build_labels(rankings, dataset::enumerate_pairs(side));
    dropped += labels.dropped_ties;
    std::vector<PreferencePair> out;
    out.reserve(labels.labels.size());
    for (const auto& lp : labels.labels)
      out.push_back({index.at(lp.left_id), index.at(lp.right_id), lp.label});
    return out;
  };

  const auto init = PreferenceModel::initialize(model_config);
  CvReport report;
  const std::size_t n = shuffled.size();
  for (int f = 0; f < k; ++f) {
    const std::size_t lo = n * static_cast<std::size_t>(f) / static_cast<std::size_t>(k);
    const std::size_t hi = n * static_cast<std::size_t>(f + 1) / static_cast<std::size_t>(k);
    FoldReport fold;
    for (std::size_t i = 0; i < n; ++i)
      (i >= lo && i < hi ? fold.validation_ids : fold.train_ids).push_back(shuffled[i]);
    std::sort(fold.train_ids.begin(), fold.train_ids.end());
    std::sort(fold.validation_ids.begin(), fold.validation_ids.end());

    const auto train_pairs = to_pairs(fold.train_ids, fold.dropped_ties);
    const auto val_pairs = to_pairs(fold.validation_ids, fold.dropped_ties);
    fold.train_pairs = train_pairs.size();
    fold.validation_pairs = val_pairs.size();

    auto trained = train(init, table, train_pairs, train_config, val_pairs);
    fold.train_loss = std::move(trained.train_loss);
    if (!val_pairs.empty()) {
      fold.accuracy = evaluate_accuracy(trained.model, table, val_pairs);
      fold.validation_loss = pair_loss(trained.model, table, val_pairs);
    }
    report.mean_accuracy += fold.accuracy / k;
    report.folds.push_back(std::move(fold));
  }
  return report;
}

}  // namespace prefrank::model
