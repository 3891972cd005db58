#include "prefrank/face_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <utility>

#include "prefrank/errors.hpp"
#include "prefrank/random.hpp"

namespace prefrank::face {

ActuatorVector::ActuatorVector(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double x = values_[i];
    if (!std::isfinite(x) || x < 0.0 || x > 1.0)
      throw InvalidActuator("element " + std::to_string(i) + " = " + std::to_string(x) +
                            " outside [0,1]");
  }
}

ActuatorVector ActuatorVector::neutral(std::size_t dof) {
  return ActuatorVector(std::vector<double>(dof, 0.5));
}

namespace {

constexpr double kBackground = 0.12;
constexpr double kSkin = 0.78;
constexpr double kInk = 0.14;
constexpr double kEyeWhite = 0.96;
constexpr double kPupil = 0.06;
constexpr double kMouthInside = 0.22;

struct Point {
  double x, y;
};

class Canvas {
 public:
  Canvas() : image_(kImageSize, kImageSize, kBackground) {}

  FaceImage take() && { return std::move(image_); }

  // Calls cov(px, py) for each pixel center inside the (clamped) box and
  // blends `value` with the returned coverage in [0, 1].
  template <typename Coverage>
  void paint(double x0, double y0, double x1, double y1, double value, Coverage&& cov) {
    const int ix0 = std::max(0, static_cast<int>(std::floor(x0)));
    const int iy0 = std::max(0, static_cast<int>(std::floor(y0)));
    const int ix1 = std::min(kImageSize, static_cast<int>(std::ceil(x1)) + 1);
    const int iy1 = std::min(kImageSize, static_cast<int>(std::ceil(y1)) + 1);
    for (int y = iy0; y < iy1; ++y) {
      for (int x = ix0; x < ix1; ++x) {
        const double c = cov(x + 0.5, y + 0.5);
        if (c <= 0.0) continue;
        double& p = image_.at(x, y);
        p += (value - p) * std::min(c, 1.0);
      }
    }
  }

 private:
  FaceImage image_;
};

double ellipse_coverage(double px, double py, double cx, double cy, double rx, double ry) {
  const double dx = (px - cx) / rx;
  const double dy = (py - cy) / ry;
  const double signed_dist = (std::sqrt(dx * dx + dy * dy) - 1.0) * std::min(rx, ry);
  return std::clamp(0.5 - signed_dist, 0.0, 1.0);
}

void fill_ellipse(Canvas& c, double cx, double cy, double rx, double ry, double value,
                  double alpha = 1.0) {
  if (alpha <= 0.0) return;
  c.paint(cx - rx - 1, cy - ry - 1, cx + rx + 1, cy + ry + 1, value, [&](double px, double py) {
    return alpha * ellipse_coverage(px, py, cx, cy, rx, ry);
  });
}

double segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double wx = p.x - a.x, wy = p.y - a.y;
  const double len2 = vx * vx + vy * vy;
  const double t = len2 > 0.0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
  const double dx = wx - t * vx, dy = wy - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

struct Box {
  double x0, y0, x1, y1;
};

Box bounds(const std::vector<Point>& pts, double pad) {
  Box b{pts[0].x, pts[0].y, pts[0].x, pts[0].y};
  for (const auto& p : pts) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return {b.x0 - pad, b.y0 - pad, b.x1 + pad, b.y1 + pad};
}

void stroke(Canvas& c, const std::vector<Point>& pts, double width, double value,
            double alpha = 1.0) {
  if (alpha <= 0.0 || pts.size() < 2) return;
  const double soft = 8.0;
  const Box b = bounds(pts, width + soft + 1);
  c.paint(b.x0, b.y0, b.x1, b.y1, value, [&](double px, double py) {
    double d = 1e300;
    for (std::size_t i = 1; i < pts.size(); ++i)
      d = std::min(d, segment_distance({px, py}, pts[i - 1], pts[i]));
    return alpha * std::clamp((0.5 * width + soft - d) / soft, 0.0, 1.0);
  });
}

// Even-odd fill with a one-pixel antialiased rim.
void fill_polygon(Canvas& c, const std::vector<Point>& pts, double value, double alpha = 1.0) {
  if (alpha <= 0.0 || pts.size() < 3) return;
  const Box b = bounds(pts, 1.5);
  c.paint(b.x0, b.y0, b.x1, b.y1, value, [&](double px, double py) {
    bool inside = false;
    double d = 1e300;
    for (std::size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
      const Point& a = pts[i];
      const Point& q = pts[j];
      if ((a.y > py) != (q.y > py) && px < (q.x - a.x) * (py - a.y) / (q.y - a.y) + a.x)
        inside = !inside;
      d = std::min(d, segment_distance({px, py}, a, q));
    }
    const double signed_dist = inside ? -d : d;
    return alpha * std::clamp(0.5 - signed_dist, 0.0, 1.0);
  });
}

// Centripetal-free (uniform) Catmull-Rom through the control points.
std::vector<Point> spline(const std::vector<Point>& ctrl, int samples_per_segment = 8) {
  std::vector<Point> out;
  const std::size_t n = ctrl.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Point p0 = ctrl[i == 0 ? 0 : i - 1];
    const Point p1 = ctrl[i];
    const Point p2 = ctrl[i + 1];
    const Point p3 = ctrl[std::min(i + 2, n - 1)];
    for (int s = 0; s < samples_per_segment; ++s) {
      const double t = static_cast<double>(s) / samples_per_segment;
      const double t2 = t * t, t3 = t2 * t;
      auto blend = [&](double a, double b, double c2, double d) {
        return 0.5 * (2 * b + (-a + c2) * t + (2 * a - 5 * b + 4 * c2 - d) * t2 +
                      (-a + 3 * b - 3 * c2 + d) * t3);
      };
      out.push_back({blend(p0.x, p1.x, p2.x, p3.x), blend(p0.y, p1.y, p2.y, p3.y)});
    }
  }
  out.push_back(ctrl.back());
  return out;
}

// Relevant actuators per emotion and the side of the range the optimum
// sits on (+1: high, -1: low).
struct Relevance {
  std::size_t index;
  int direction;
};

std::vector<Relevance> relevance_table(Emotion e) {
  using namespace actuator;
  switch (e) {
    case Emotion::Anger:
      return {{kBrowInnerL, -1}, {kBrowInnerR, -1}, {kCorrugator, +1},     {kUpperLidL, +1},
              {kUpperLidR, +1},  {kLipPress, +1},   {kNostrilL, +1},       {kNostrilR, +1},
              {kMouthCornerUpL, -1}, {kMouthCornerUpR, -1}};
    case Emotion::Disgust:
      return {{kNoseWrinkle, +1}, {kUpperLipL, +1},   {kUpperLipC, +1},       {kUpperLipR, +1},
              {kCorrugator, +1},  {kCheekL, +1},      {kCheekR, +1},          {kMouthCornerUpL, -1},
              {kMouthCornerUpR, -1}, {kNasolabialL, +1}, {kNasolabialR, +1}};
    case Emotion::Fear:
      return {{kBrowInnerL, +1}, {kBrowInnerR, +1},      {kBrowMidL, +1},
              {kBrowMidR, +1},   {kUpperLidL, +1},       {kUpperLidR, +1},
              {kMouthCornerOutL, +1}, {kMouthCornerOutR, +1}, {kJawDrop, +1}};
    case Emotion::Happiness:
      return {{kMouthCornerUpL, +1},  {kMouthCornerUpR, +1}, {kMouthCornerOutL, +1},
              {kMouthCornerOutR, +1}, {kCheekL, +1},         {kCheekR, +1},
              {kLowerLidL, +1},       {kLowerLidR, +1},      {kNasolabialL, +1},
              {kNasolabialR, +1}};
    case Emotion::Sadness:
      return {{kBrowInnerL, +1},      {kBrowInnerR, +1},      {kBrowOuterL, -1},
              {kBrowOuterR, -1},      {kMouthCornerUpL, -1},  {kMouthCornerUpR, -1},
              {kUpperLidL, -1},       {kUpperLidR, -1},       {kLowerLipC, +1}};
    case Emotion::Surprise:
      return {{kBrowInnerL, +1}, {kBrowMidL, +1}, {kBrowOuterL, +1}, {kBrowInnerR, +1},
              {kBrowMidR, +1},   {kBrowOuterR, +1}, {kForehead, +1},  {kUpperLidL, +1},
              {kUpperLidR, +1},  {kJawDrop, +1}};
    case Emotion::Neutral:
      break;
  }
  return {};
}

}  // namespace

FaceSimulator::FaceSimulator(FaceSimConfig config) : config_(config) {
  if (config_.dof == 0) throw InvalidActuator("dof must be positive");
  if (!(config_.bandwidth_fraction > 0.0)) throw InvalidActuator("bandwidth_fraction must be > 0");
  for (std::size_t k = 0; k < kNumEmotions; ++k) {
    const auto e = static_cast<Emotion>(k);
    Rng rng(derive_seed(config_.optimum_seed, k));
    std::vector<double> opt(config_.dof, 0.5);
    std::vector<std::size_t> rel;
    if (e == Emotion::Neutral) {
      for (std::size_t i = 0; i < config_.dof; ++i) rel.push_back(i);
    } else {
      for (const auto& r : relevance_table(e)) {
        const double u = rng.uniform();
        if (r.index >= config_.dof) continue;
        opt[r.index] = r.direction > 0 ? 0.85 + 0.15 * u : 0.15 * u;
        rel.push_back(r.index);
      }
      std::sort(rel.begin(), rel.end());
    }
    double dmax = 0.0;
    for (auto i : rel) {
      const double far = std::max(opt[i], 1.0 - opt[i]);
      dmax += far * far;
    }
    optima_[k] = ActuatorVector(std::move(opt));
    relevant_[k] = std::move(rel);
    max_sq_distance_[k] = dmax;
  }
}

void FaceSimulator::check(const ActuatorVector& v) const {
  if (v.size() != config_.dof)
    throw InvalidActuator("expected " + std::to_string(config_.dof) + " actuators, got " +
                          std::to_string(v.size()));
}

ActuatorVector FaceSimulator::antipode(Emotion e) const {
  const auto& opt = optima_[channel(e)];
  std::vector<double> out(config_.dof);
  for (std::size_t i = 0; i < config_.dof; ++i) out[i] = 1.0 - opt[i];
  for (auto i : relevant_[channel(e)]) out[i] = opt[i] < 0.5 ? 1.0 : 0.0;
  return ActuatorVector(std::move(out));
}

double FaceSimulator::latent_intensity(const ActuatorVector& v, Emotion e) const {
  check(v);
  const auto k = channel(e);
  const auto& opt = optima_[k];
  const double dmax = max_sq_distance_[k];
  if (dmax <= 0.0) return 1.0;
  double d2 = 0.0;
  for (auto i : relevant_[k]) {
    // Same operations as the max-distance sum so the antipode lands on 0 exactly.
    const double diff = v[i] >= opt[i] ? v[i] - opt[i] : opt[i] - v[i];
    d2 += diff * diff;
  }
  const double two_l2 = 2.0 * config_.bandwidth_fraction * dmax;
  const double floor = std::exp(-dmax / two_l2);
  const double bump = std::exp(-d2 / two_l2);
  return std::clamp((bump - floor) / (1.0 - floor), 0.0, 1.0);
}

FaceImage FaceSimulator::render(const ActuatorVector& v) const {
  check(v);
  using namespace actuator;
  // Centered actuator value in [-0.5, 0.5]; rest (0) for indices past the DOF.
  auto a = [&](std::size_t i) { return i < v.size() ? v[i] - 0.5 : 0.0; };
  auto u = [&](std::size_t i) { return a(i) + 0.5; };

  Canvas c;
  fill_ellipse(c, 112, 118, 84, 104, kSkin);

  // Forehead lines fade in with the frontalis actuator.
  for (int k = 0; k < 3; ++k) {
    const double y = 36 + 7 * k;
    stroke(c, spline({{82, y + 2}, {112, y - 1}, {142, y + 2}}), 1.5, kInk, 0.8 * u(kForehead));
  }

  // Brows. The corrugator pulls the inner ends down and toward the midline.
  const double pull = 6.0 * u(kCorrugator);
  stroke(c,
         spline({{98 + pull, 72 - 18 * a(kBrowInnerL) + pull},
                 {80, 64 - 18 * a(kBrowMidL)},
                 {60, 70 - 18 * a(kBrowOuterL)}}),
         4.0, kInk);
  stroke(c,
         spline({{126 - pull, 72 - 18 * a(kBrowInnerR) + pull},
                 {144, 64 - 18 * a(kBrowMidR)},
                 {164, 70 - 18 * a(kBrowOuterR)}}),
         4.0, kInk);
  for (double x : {108.0, 116.0})
    stroke(c, {{x, 76}, {x, 76 + 14 * u(kCorrugator)}}, 1.5, kInk, u(kCorrugator));

  // Eyes: the opening spans from the upper lid (raised by openness) to the
  // lower lid (raised by the lower-lid actuator).
  auto eye = [&](double cx, std::size_t upper, std::size_t lower) {
    const double cy = 98;
    const double up = 2.0 + 9.0 * u(upper);
    const double low = 8.0 - 7.0 * u(lower);
    const double ey = cy + 0.5 * (low - up);
    const double ry = 0.5 * (up + low);
    fill_ellipse(c, cx, ey, 15, ry, kEyeWhite);
    const double px = cx + 6.0 * a(kGazeX);
    const double py = ey + 4.0 * a(kGazeY);
    const double pr = 3.5 + 2.0 * u(kPupilSize);
    c.paint(px - pr - 1, py - pr - 1, px + pr + 1, py + pr + 1, kPupil, [&](double x, double y) {
      return ellipse_coverage(x, y, px, py, pr, pr) * ellipse_coverage(x, y, cx, ey, 15, ry);
    });
    std::vector<Point> lid;
    for (int k = 0; k <= 12; ++k) {
      const double t = -1.0 + k / 6.0;
      lid.push_back({cx + 16 * t, ey - ry * std::sqrt(std::max(0.0, 1 - t * t)) - 1});
    }
    stroke(c, lid, 2.0, kInk);
    // Lower-lid tension shows as a crease under the eye.
    stroke(c, spline({{cx - 13, cy + 13}, {cx, cy + 17}, {cx + 13, cy + 13}}), 2.5, kInk, 0.9 * u(lower));
  };
  eye(84, kUpperLidL, kLowerLidL);
  eye(140, kUpperLidR, kLowerLidR);

  // Cheek creases rise and darken as the cheeks lift.
  auto cheek = [&](double cx, double side, std::size_t idx) {
    const double y = 128 - 16 * u(idx);
    stroke(c, spline({{cx - 18 * side, y - 6}, {cx, y + 3}, {cx + 18 * side, y - 6}}), 3.5, kInk,
           u(idx));
  };
  cheek(80, 1.0, kCheekL);
  cheek(144, -1.0, kCheekR);

  for (double dy : {0.0, 7.0}) {
    stroke(c, {{100, 100 + dy}, {108, 106 + dy}}, 2.5, kInk, u(kNoseWrinkle));
    stroke(c, {{124, 100 + dy}, {116, 106 + dy}}, 2.5, kInk, u(kNoseWrinkle));
  }
  stroke(c, spline({{112, 100}, {110, 122}, {112, 134}}), 1.5, kInk, 0.5);
  fill_ellipse(c, 104 - 3.0 * u(kNostrilL), 138, 3.0 + 6.0 * u(kNostrilL), 2.5 + 2.0 * u(kNostrilL), 0.2);
  fill_ellipse(c, 120 + 3.0 * u(kNostrilR), 138, 3.0 + 6.0 * u(kNostrilR), 2.5 + 2.0 * u(kNostrilR), 0.2);

  stroke(c, spline({{97, 132}, {90 - 6 * u(kNasolabialL), 141}, {84 - 8 * u(kNasolabialL), 152}}), 3.5, kInk, u(kNasolabialL));
  stroke(c, spline({{127, 132}, {134 + 6 * u(kNasolabialR), 141}, {140 + 8 * u(kNasolabialR), 152}}), 3.5, kInk, u(kNasolabialR));

  // Mouth. Everything below stays inside kMouthRegion.
  const double cy = 178;
  const double half_l = 26 + 20 * a(kMouthCornerOutL) - 6 * u(kPucker);
  const double half_r = 26 + 20 * a(kMouthCornerOutR) - 6 * u(kPucker);
  const Point corner_l{112 - half_l, cy - 20 * a(kMouthCornerUpL)};
  const Point corner_r{112 + half_r, cy - 20 * a(kMouthCornerUpR)};
  const double open = 16 * u(kJawDrop);
  const double lip_w = 1.5 + 5.0 * u(kLipPress);
  const auto upper = spline({corner_l,
                             {100, cy - 4 - 10 * a(kUpperLipL)},
                             {112, cy - 5 - 10 * a(kUpperLipC)},
                             {124, cy - 4 - 10 * a(kUpperLipR)},
                             corner_r});
  const auto lower = spline({corner_l,
                             {100, cy + 3 + 10 * a(kLowerLipL) + 0.7 * open},
                             {112, cy + 4 + 10 * a(kLowerLipC) + open},
                             {124, cy + 3 + 10 * a(kLowerLipR) + 0.7 * open},
                             corner_r});
  std::vector<Point> inside(upper.begin(), upper.end());
  inside.insert(inside.end(), lower.rbegin(), lower.rend());
  fill_polygon(c, inside, kMouthInside);
  stroke(c, upper, lip_w, kInk);
  stroke(c, lower, lip_w, kInk);

  // Pressed lips bunch the chin below the mouth.
  stroke(c, spline({{100, cy + 12 + 0.7 * open}, {112, cy + 13 + open}, {124, cy + 12 + 0.7 * open}}), 2.5,
         kInk, u(kLipPress));
  // Raised corners dimple; a raised upper lip casts a shadow above it.
  for (const auto& [corner, side, idx] : {std::tuple{corner_l, 1.0, kMouthCornerUpL}, std::tuple{corner_r, -1.0, kMouthCornerUpR}})
    stroke(c, {{corner.x - 4 * side, corner.y - 2}, {corner.x - 4 * side, corner.y + 8}}, 2.5,
           kInk, u(idx));
  // Soft shading that survives coarse pooling: corner pits, a pouting lower
  // lip and a bunched chin.
  for (const auto& [corner, side, idx] : {std::tuple{corner_l, 1.0, kMouthCornerUpL}, std::tuple{corner_r, -1.0, kMouthCornerUpR}})
    fill_ellipse(c, corner.x + 3 * side, corner.y + 3, 6, 6, kInk, 0.5 * u(idx));
  fill_ellipse(c, 112, cy + 12 + 10 * a(kLowerLipC) + 0.8 * open, 9, 4, kInk, 0.5 * u(kLowerLipC));
  fill_ellipse(c, 112, cy + 20 + open, 14, 5, kInk, 0.5 * u(kLipPress));
  for (const auto& [x, idx] : {std::pair{100.0, kUpperLipL}, std::pair{112.0, kUpperLipC}, std::pair{124.0, kUpperLipR}})
    stroke(c, {{x - 5, cy - 8 - 10 * a(idx)}, {x + 5, cy - 8 - 10 * a(idx)}}, 2.0, kInk, u(idx));

  return std::move(c).take();
}

}  // namespace prefrank::face
