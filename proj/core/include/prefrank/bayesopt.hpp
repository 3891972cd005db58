#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "prefrank/emotion.hpp"
#include "prefrank/errors.hpp"
#include "prefrank/gp.hpp"

namespace prefrank::face {
class FaceSimulator;
}
namespace prefrank::model {
class PreferenceModel;
}

namespace prefrank::bo {

using Objective = std::function<double(std::span<const double>)>;

// EI for maximization. Equals max(mean - best, 0) when variance is 0.
double expected_improvement(double mean, double variance, double best);

struct ProposeOptions {
  int candidates = 2048;
  int refine_starts = 8;
  int sweeps = 4;
  double initial_step = 0.1;  // halved after every sweep
};

// Maximizes EI (against the best observed target) over [0,1]^dim: scores a
// Sobol candidate set, then refines the top candidates by coordinate ascent.
std::vector<double> propose(const GPState& gp, std::uint64_t seed, const ProposeOptions& options = {});

struct TraceRow {
  int index = 0;
  std::vector<double> x;
  double objective = 0.0;
  double incumbent = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
};

// Thrown when the objective returns a non-finite value; carries everything
// evaluated before the failure.
class AbortedRun : public Error {
 public:
  AbortedRun(const std::string& what, Trace partial)
      : Error("AbortedRun: " + what), trace(std::move(partial)) {}
  Trace trace;
};

struct OptimizeOptions {
  int budget = 300;  // total objective evaluations, init included
  int init = 20;
  std::uint64_t seed = 0;
  int refit_every = 10;
  double initial_lengthscale = 1.0;
  ProposeOptions propose;
  HyperFitOptions hyper;
};

struct OptimizeResult {
  std::vector<double> best;
  double best_value = 0.0;
  Trace trace;
  KernelParams kernel;  // hyperparameters at the end of the run
};

// `init` Sobol evaluations followed by `budget - init` EI iterations on a GP
// fitted to standardized observations.
OptimizeResult optimize(const Objective& objective, std::size_t dim, const OptimizeOptions& options);

// Best of `count` Sobol samples; same trace layout as optimize.
OptimizeResult random_search(const Objective& objective, std::size_t dim, int count, std::uint64_t seed);

// v -> target-emotion log-odds of the model on the rendered face. Same order
// as the softmax score, which saturates at 1 where BO needs resolution.
Objective hapi_objective(const model::PreferenceModel& m, const face::FaceSimulator& sim);
Objective latent_objective(const face::FaceSimulator& sim, Emotion e);

// Columns: iter,objective,incumbent,a0..a{D-1}; values printed round-trip exact.
void write_trace_csv(const std::filesystem::path& path, const Trace& trace);
Trace read_trace_csv(const std::filesystem::path& path);

}  // namespace prefrank::bo
