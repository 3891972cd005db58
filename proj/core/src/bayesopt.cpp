#include "prefrank/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "prefrank/dataset.hpp"
#include "prefrank/face_sim.hpp"
#include "prefrank/prefmodel.hpp"
#include "prefrank/random.hpp"
#include "prefrank/sobol.hpp"

namespace prefrank::bo {

double expected_improvement(double mean, double variance, double best) {
  const double diff = mean - best;
  if (!(variance > 0.0)) return std::max(diff, 0.0);
  const double sigma = std::sqrt(variance);
  const double z = diff / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(diff * cdf + sigma * pdf, 0.0);
}

namespace {

Eigen::VectorXd ei_batch(const GPState& gp, const Eigen::MatrixXd& points, double best) {
  Eigen::VectorXd mean, var;
  gp.posterior(points, mean, var);
  Eigen::VectorXd ei(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) ei(i) = expected_improvement(mean(i), var(i), best);
  return ei;
}

}  // namespace

std::vector<double> propose(const GPState& gp, std::uint64_t seed, const ProposeOptions& options) {
  const auto dim = static_cast<Eigen::Index>(gp.dim());
  const double best = gp.targets().maxCoeff();
  const int m = std::max(1, options.candidates);

  SobolSequence sobol(gp.dim(), seed);
  Eigen::MatrixXd cand(m, dim);
  for (int i = 0; i < m; ++i) {
    const auto p = sobol.next();
    for (Eigen::Index d = 0; d < dim; ++d) cand(i, d) = p[static_cast<std::size_t>(d)];
  }
  const Eigen::VectorXd ei = ei_batch(gp, cand, best);

  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ei(a) > ei(b); });

  Eigen::RowVectorXd best_x = cand.row(order[0]);
  double best_ei = ei(order[0]);

  const int starts = std::clamp(options.refine_starts, 0, m);
  if (starts > 0) {
    Eigen::MatrixXd cur(starts, dim);
    Eigen::VectorXd cur_ei(starts);
    for (int s = 0; s < starts; ++s) {
      cur.row(s) = cand.row(order[static_cast<std::size_t>(s)]);
      cur_ei(s) = ei(order[static_cast<std::size_t>(s)]);
    }
    double step = options.initial_step;
    Eigen::MatrixXd trial(2 * starts, dim);
    for (int sweep = 0; sweep < options.sweeps; ++sweep, step *= 0.5) {
      for (Eigen::Index d = 0; d < dim; ++d) {
        for (int s = 0; s < starts; ++s) {
          trial.row(2 * s) = cur.row(s);
          trial.row(2 * s + 1) = cur.row(s);
          trial(2 * s, d) = std::min(1.0, cur(s, d) + step);
          trial(2 * s + 1, d) = std::max(0.0, cur(s, d) - step);
        }
        const Eigen::VectorXd te = ei_batch(gp, trial, best);
        for (int s = 0; s < starts; ++s) {
          for (int k = 0; k < 2; ++k) {
            if (te(2 * s + k) > cur_ei(s)) {
              cur_ei(s) = te(2 * s + k);
              cur.row(s) = trial.row(2 * s + k);
            }
          }
        }
      }
    }
    for (int s = 0; s < starts; ++s) {
      if (cur_ei(s) > best_ei) {
        best_ei = cur_ei(s);
        best_x = cur.row(s);
      }
    }
  }
  return std::vector<double>(best_x.data(), best_x.data() + dim);
}

namespace {

struct Recorder {
  const Objective& objective;
  Trace trace;
  std::vector<double> best;
  double best_value = -std::numeric_limits<double>::infinity();

  double eval(std::vector<double> x) {
    const double v = objective(x);
    if (!std::isfinite(v))
      throw AbortedRun("objective returned a non-finite value at evaluation " +
                           std::to_string(trace.rows.size()),
                       trace);
    if (v > best_value) {
      best_value = v;
      best = x;
    }
    trace.rows.push_back(TraceRow{static_cast<int>(trace.rows.size()), std::move(x), v, best_value});
    return v;
  }
};

}  // namespace

OptimizeResult optimize(const Objective& objective, std::size_t dim, const OptimizeOptions& options) {
  if (dim == 0) throw InvalidInput("optimize needs at least one dimension");
  if (options.budget < 1) throw InvalidInput("budget must be positive");
  const int init = std::clamp(options.init, 1, options.budget);

  Recorder rec{objective, {}, {}};
  SobolSequence sobol(dim, derive_seed(options.seed, 1));
  for (int i = 0; i < init; ++i) rec.eval(sobol.next());

  KernelParams kernel = KernelParams::isotropic(dim, options.initial_lengthscale);
  const auto d = static_cast<Eigen::Index>(dim);
  for (int it = init; it < options.budget; ++it) {
    const auto n = static_cast<Eigen::Index>(rec.trace.rows.size());
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& row = rec.trace.rows[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < d; ++j) x(i, j) = row.x[static_cast<std::size_t>(j)];
      y(i) = row.objective;
    }
    const double mu = y.mean();
    const double sd = std::sqrt((y.array() - mu).square().mean());
    y = ((y.array() - mu) / (sd > 0.0 ? sd : 1.0)).matrix();

    if (options.refit_every > 0 && (it - init) % options.refit_every == 0)
      kernel = fit_hyperparameters(x, y, kernel, derive_seed(options.seed, 1000 + static_cast<std::uint64_t>(it)),
                                   options.hyper);
    const GPState gp = GPState::fit(std::move(x), std::move(y), kernel);
    rec.eval(propose(gp, derive_seed(options.seed, 2000 + static_cast<std::uint64_t>(it)), options.propose));
  }
  return OptimizeResult{rec.best, rec.best_value, std::move(rec.trace), kernel};
}

OptimizeResult random_search(const Objective& objective, std::size_t dim, int count, std::uint64_t seed) {
  if (dim == 0 || count < 1) throw InvalidInput("random search needs dim > 0 and count > 0");
  Recorder rec{objective, {}, {}};
  SobolSequence sobol(dim, derive_seed(seed, 3));
  for (int i = 0; i < count; ++i) rec.eval(sobol.next());
  return OptimizeResult{rec.best, rec.best_value, std::move(rec.trace), {}};
}

Objective hapi_objective(const model::PreferenceModel& m, const face::FaceSimulator& sim) {
  return [&m, &sim](std::span<const double> v) {
    const auto image = sim.render(face::ActuatorVector({v.begin(), v.end()}));
    const auto pre = dataset::preprocess(image, m.dims().channels);
    return m.target_log_odds(m.encode(pre));
  };
}

Objective latent_objective(const face::FaceSimulator& sim, Emotion e) {
  return [&sim, e](std::span<const double> v) {
    return sim.latent_intensity(face::ActuatorVector({v.begin(), v.end()}), e);
  };
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t dim = trace.rows.empty() ? 0 : trace.rows.front().x.size();
  out << "iter,objective,incumbent";
  for (std::size_t d = 0; d < dim; ++d) out << ",a" << d;
  out << '\n';
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  for (const auto& r : trace.rows) {
    out << r.index << ',' << num(r.objective) << ',' << num(r.incumbent);
    for (double v : r.x) out << ',' << num(v);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Trace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("iter,objective,incumbent", 0) != 0)
    throw FormatError(path.string() + ": missing trace header");
  Trace t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 3) throw FormatError(path.string() + ": short trace row");
    TraceRow r;
    try {
      r.index = std::stoi(cells[0]);
      r.objective = std::stod(cells[1]);
      r.incumbent = std::stod(cells[2]);
      for (std::size_t i = 3; i < cells.size(); ++i) r.x.push_back(std::stod(cells[i]));
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ": bad number in trace row");
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

}  // namespace prefrank::bo
