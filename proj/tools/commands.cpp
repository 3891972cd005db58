#include "commands.hpp"

#include <signal.h>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <thread>

#include "json.hpp"
#include "prefrank/bayesopt.hpp"
#include "prefrank/dataset.hpp"
#include "prefrank/errors.hpp"
#include "prefrank/face_sim.hpp"
#include "prefrank/hashing.hpp"
#include "prefrank/image.hpp"
#include "prefrank/manifest.hpp"
#include "prefrank/pool.hpp"
#include "prefrank/prefmodel.hpp"
#include "prefrank/random.hpp"
#include "prefrank/service.hpp"
#include "prefrank/session_log.hpp"

namespace prefrank::cli {

using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw IoError(what + " not found: " + path.string());
}

// Checks an input against the manifest that produced it, when there is one.
void verify_input(const fs::path& file, const fs::path& data_dir = {}) {
  const fs::path dir = !data_dir.empty() ? data_dir : file.has_parent_path() ? file.parent_path() : fs::path(".");
  verify_artifact(dir, file);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw UsageError("--bind expects host:port, got '" + bind + "'");
  try {
    return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
  } catch (const std::exception&) {
    throw UsageError("--bind expects host:port, got '" + bind + "'");
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int run_service(const fs::path& pool, const fs::path& data_dir, const std::string& bind,
                const fs::path& static_dir) {
  const auto [host, port] = parse_bind(bind);
  // Block termination signals before the server spawns threads; a watcher
  // thread turns them into a clean stop.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  service::AnnotateService svc({pool, data_dir, static_dir});
  const int bound = svc.bind(host, port);
  if (bound < 0) throw IoError("cannot bind " + bind);
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&set, &sig);
    svc.stop();
  });
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  svc.run();
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return 0;
}

std::vector<fs::path> sessions_for(const fs::path& data_dir, Emotion e) {
  std::vector<fs::path> out;
  const fs::path dir = data_dir / "sessions";
  if (!fs::is_directory(dir)) return out;
  const std::string suffix = "-" + to_string(e) + ".jsonl";
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("session-", 0) == 0 && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int gen_pool(const GenPoolArgs& a) {
  ensure_dir(a.out);
  RunManifest m{"gen-pool", {}, a.seed, {}, {}, utc_timestamp(), {}};
  m.config = {{"count", std::to_string(a.count)}, {"bo_fraction", fmt(a.bo_fraction)}};
  face::FaceSimulator sim;
  dataset::PoolOptions opt;
  opt.count = a.count;
  opt.seed = a.seed;
  opt.bo_fraction = a.bo_fraction;
  const auto pool = dataset::generate_pool(sim, opt);
  dataset::write_pool(a.out, pool);
  m.add_output(a.out, a.out / "pool.jsonl");
  m.finished = utc_timestamp();
  write_manifest(a.out, m);
  std::cout << "wrote " << pool.size() << " candidates to " << (a.out / "pool.jsonl").string() << "\n";
  return 0;
}

int select(const SelectArgs& a) {
  require_file(a.pool, "pool");
  verify_input(a.pool);
  const auto pool = dataset::read_pool(a.pool);
  const fs::path out = a.pool.has_parent_path() ? a.pool.parent_path() : fs::path(".");
  const auto subset = dataset::select_diverse(pool, a.k);
  const auto pairs = dataset::enumerate_pairs(subset);
  dataset::write_pool_records(out / "subset.jsonl", subset);
  dataset::write_pairs_csv(out / "pairs.csv", pairs);

  RunManifest m{"select", {{"k", std::to_string(a.k)}}, 0, {}, {}, utc_timestamp(), {}};
  m.add_input(out, a.pool);
  m.add_output(out, out / "subset.jsonl");
  m.add_output(out, out / "pairs.csv");
  m.finished = utc_timestamp();
  write_manifest(out, m);
  std::cout << "selected " << subset.size() << " of " << pool.size() << " candidates; " << pairs.size()
            << " pairs\n";
  return 0;
}

int annotate(const AnnotateArgs& a) {
  const fs::path subset_path = a.subset.empty() ? a.data_dir / "subset.jsonl" : a.subset;
  require_file(subset_path, "subset");
  if (a.mode == "human") return run_service(subset_path, a.data_dir, a.bind, a.static_dir);
  if (a.mode != "synthetic") throw UsageError("--mode must be human or synthetic");
  if (a.emotions.empty()) throw UsageError("pass --emotion or --all-emotions");

  verify_input(subset_path);
  const auto subset = dataset::read_pool(subset_path);
  face::FaceSimulator sim;
  const auto schedule = ranking::parse_schedule(a.schedule);
  for (const Emotion e : a.emotions) {
    std::map<int, double> latent;
    for (const auto& entry : subset.entries) latent[entry.id] = sim.latent_intensity(entry.actuators, e);
    // Ties (measure zero) go to the lower id so the oracle stays total.
    const ranking::Oracle oracle = [&](int x, int y) {
      const double lx = latent.at(x), ly = latent.at(y);
      if (lx != ly) return lx > ly ? x : y;
      return std::min(x, y);
    };

    const fs::path path = a.data_dir / "sessions" / ranking::session_file_name(a.annotator, e);
    std::optional<ranking::SessionFile> file;
    if (fs::exists(path)) {
      if (!a.resume)
        throw UsageError(path.string() + " already exists; pass --resume to continue it");
      file = ranking::SessionFile::open(path);
    } else {
      file = ranking::SessionFile::create(
          path, ranking::SessionHeader{subset.ids(), e, a.annotator, a.seed, schedule});
    }
    while (auto q = file->session().pending()) {
      // Synthetic sessions log timestamp 0 so reruns are byte-identical.
      file->submit({q->query_id, oracle(q->left_id, q->right_id)}, 0);
    }
    const auto& s = file->session();
    const double consistency = ranking::consistency_check(*s.result(), s.log());

    const std::string stage = "annotate-" + a.annotator + "-" + to_string(e);
    RunManifest m{stage,
                  {{"mode", a.mode}, {"emotion", to_string(e)}, {"annotator", a.annotator}, {"schedule", a.schedule}},
                  a.seed, {}, {}, utc_timestamp(), {}};
    m.add_input(a.data_dir, subset_path);
    m.add_output(a.data_dir, path);
    m.finished = m.started;
    write_manifest(a.data_dir, m);
    std::cout << to_string(e) << ": " << s.answered() << " comparisons (at most "
              << ranking::max_queries(schedule, subset.size()) << "), consistency " << fixed(consistency, 3)
              << "\n";
  }
  return 0;
}

int train(const TrainArgs& a) {
  if (a.emotions.empty()) throw UsageError("pass --emotion or --all-emotions");
  if (!a.sessions.empty() && a.emotions.size() > 1)
    throw UsageError("--sessions can only be combined with a single --emotion");
  const fs::path subset_path = a.subset.empty() ? a.data_dir / "subset.jsonl" : a.subset;
  const fs::path pairs_path = a.pairs.empty() ? subset_path.parent_path() / "pairs.csv" : a.pairs;
  require_file(subset_path, "subset");
  require_file(pairs_path, "pairs");
  verify_input(subset_path);
  verify_input(pairs_path);
  const auto subset = dataset::read_pool(subset_path);
  const auto pairs = dataset::read_pairs_csv(pairs_path);

  model::TrainConfig tc;
  tc.learning_rate = a.learning_rate;
  tc.weight_decay = a.weight_decay;
  tc.momentum = a.momentum;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch_size;
  tc.seed = a.seed;

  for (const Emotion e : a.emotions) {
    const auto session_paths = a.sessions.empty() ? sessions_for(a.data_dir, e) : a.sessions;
    if (session_paths.empty())
      throw IoError("no sessions for " + to_string(e) + " under " + (a.data_dir / "sessions").string());
    std::vector<ranking::Ranking> rankings;
    std::vector<std::string> annotators;
    for (const auto& p : session_paths) {
      verify_input(p, a.data_dir);
      const auto file = ranking::SessionFile::open(p);
      const auto& s = file.session();
      if (s.header().emotion != e)
        throw InvalidInput(p.string() + " is a " + to_string(s.header().emotion) + " session");
      if (!s.completed()) throw InvalidInput(p.string() + " is not completed yet");
      rankings.push_back(*s.result());
      annotators.push_back(s.header().annotator_id);
    }
    std::string provenance;
    for (const auto& id : annotators) provenance += (provenance.empty() ? "" : ",") + id;

    model::ModelConfig mc;
    mc.target = e;
    mc.sigmoid_scale = a.sigmoid_scale;
    mc.seed = derive_seed(a.seed, 10 + channel(e));
    const auto init = model::PreferenceModel::initialize(mc);

    std::map<int, model::EncodedImage> encoded;
    std::vector<model::EncodedImage> table;
    std::map<int, std::size_t> index;
    for (const auto& entry : subset.entries) {
      auto enc = init.encode(dataset::preprocess(entry.image, mc.dims.channels));
      index[entry.id] = table.size();
      table.push_back(enc);
      encoded.emplace(entry.id, std::move(enc));
    }

    const auto cv = model::kfold_cv(encoded, rankings, a.folds, mc, tc);

    const auto labels = model::build_labels(rankings, pairs, provenance);
    std::vector<model::PreferencePair> all;
    for (const auto& lp : labels.labels) {
      const auto ia = index.find(lp.left_id), ib = index.find(lp.right_id);
      if (ia == index.end() || ib == index.end())
        throw InvalidInput("pair (" + std::to_string(lp.left_id) + "," + std::to_string(lp.right_id) +
                           ") references an image outside the subset");
      all.push_back({ia->second, ib->second, lp.label});
    }
    const auto final_model = model::train(init, table, all, tc);
    const double train_acc = model::evaluate_accuracy(final_model.model, table, all);

    const fs::path model_path = a.data_dir / ("model-" + to_string(e) + ".bin");
    model::save_checkpoint(model_path, final_model.model);

    json folds = json::array();
    for (const auto& f : cv.folds)
      folds.push_back({{"train_ids", f.train_ids},
                       {"validation_ids", f.validation_ids},
                       {"train_pairs", f.train_pairs},
                       {"validation_pairs", f.validation_pairs},
                       {"dropped_ties", f.dropped_ties},
                       {"accuracy", f.accuracy},
                       {"validation_loss", f.validation_loss},
                       {"train_loss", f.train_loss}});
    json session_names = json::array();
    for (const auto& p : session_paths) session_names.push_back(p.filename().string());
    const json report{{"emotion", to_string(e)},
                      {"config",
                       {{"learning_rate", tc.learning_rate},
                        {"weight_decay", tc.weight_decay},
                        {"momentum", tc.momentum},
                        {"epochs", tc.epochs},
                        {"batch_size", tc.batch_size},
                        {"seed", tc.seed},
                        {"model_seed", mc.seed},
                        {"sigmoid_scale", mc.sigmoid_scale},
                        {"folds", a.folds}}},
                      {"sessions", session_names},
                      {"labels",
                       {{"pairs", labels.labels.size()},
                        {"dropped_ties", labels.dropped_ties},
                        {"abstentions", labels.abstentions},
                        {"provenance", labels.provenance}}},
                      {"folds", folds},
                      {"mean_accuracy", cv.mean_accuracy},
                      {"final", {{"train_loss", final_model.train_loss}, {"train_accuracy", train_acc}}}};
    const fs::path report_path = a.data_dir / ("train-" + to_string(e) + ".json");
    write_json(report_path, report);

    RunManifest m{"train-" + to_string(e), {}, a.seed, {}, {}, utc_timestamp(), {}};
    for (const auto& [k, v] : report["config"].items()) m.config[k] = v.dump();
    m.add_input(a.data_dir, subset_path);
    m.add_input(a.data_dir, pairs_path);
    for (const auto& p : session_paths) m.add_input(a.data_dir, p);
    m.add_output(a.data_dir, model_path);
    m.add_output(a.data_dir, report_path);
    m.finished = utc_timestamp();
    write_manifest(a.data_dir, m);
    std::cout << to_string(e) << ": " << a.folds << "-fold accuracy " << fixed(cv.mean_accuracy, 3)
              << ", final training accuracy " << fixed(train_acc, 3) << "\n";
  }
  return 0;
}

int optimize(const OptimizeArgs& a) {
  if (a.emotions.empty()) throw UsageError("pass --emotion or --all-emotions");
  if (a.model && a.emotions.size() > 1) throw UsageError("--model can only be combined with a single --emotion");
  if (a.budget < 1 || a.init < 1 || a.baseline < 1) throw UsageError("--budget, --init and --baseline must be positive");
  ensure_dir(a.data_dir);
  face::FaceSimulator sim;
  for (const Emotion e : a.emotions) {
    const std::string name = to_string(e);
    const fs::path model_path = a.model ? *a.model : a.data_dir / ("model-" + name + ".bin");
    require_file(model_path, "model");
    verify_input(model_path);
    const auto m = model::load_checkpoint(model_path);
    if (m.target() != e)
      throw InvalidInput(model_path.string() + " scores " + to_string(m.target()) + ", not " + name);

    bo::OptimizeOptions opt;
    opt.budget = a.budget;
    opt.init = a.init;
    opt.seed = a.seed;
    const auto objective = bo::hapi_objective(m, sim);
    bo::OptimizeResult result;
    try {
      result = bo::optimize(objective, sim.dof(), opt);
    } catch (const bo::AbortedRun& ex) {
      bo::write_trace_csv(a.data_dir / ("bo-" + name + "-" + std::to_string(a.seed) + ".partial.csv"), ex.trace);
      throw;
    }
    const double bo_latent = sim.latent_intensity(face::ActuatorVector(result.best), e);

    // Baseline: the same number of Sobol samples, judged by the true latent.
    const auto random = bo::random_search(bo::latent_objective(sim, e), sim.dof(), a.baseline, a.seed);
    const double random_latent = random.best_value;

    const std::string stem = "bo-" + name + "-" + std::to_string(a.seed);
    const fs::path trace_path = a.data_dir / (stem + ".csv");
    const fs::path summary_path = a.data_dir / (stem + ".json");
    bo::write_trace_csv(trace_path, result.trace);
    json kernel{{"lengthscales", result.kernel.lengthscales},
                {"signal_variance", result.kernel.signal_variance},
                {"noise_variance", result.kernel.noise_variance}};
    write_json(summary_path, json{{"emotion", name},
                                  {"seed", a.seed},
                                  {"budget", a.budget},
                                  {"init", a.init},
                                  {"model", model_path.filename().string()},
                                  {"best", {{"actuators", result.best},
                                            {"objective", result.best_value},
                                            {"latent", bo_latent}}},
                                  {"random_search", {{"samples", a.baseline}, {"best_latent", random_latent}}},
                                  {"kernel", kernel}});

    RunManifest man{"optimize-" + name + "-" + std::to_string(a.seed),
                    {{"budget", std::to_string(a.budget)},
                     {"init", std::to_string(a.init)},
                     {"baseline", std::to_string(a.baseline)}},
                    a.seed, {}, {}, utc_timestamp(), {}};
    man.add_input(a.data_dir, model_path);
    man.add_output(a.data_dir, trace_path);
    man.add_output(a.data_dir, summary_path);
    man.finished = utc_timestamp();
    write_manifest(a.data_dir, man);

    // best-{emotion}: the highest-objective incumbent over every run so far.
    json best;
    for (const auto& entry : fs::directory_iterator(a.data_dir)) {
      const std::string fname = entry.path().filename().string();
      if (fname.rfind("bo-" + name + "-", 0) != 0 || entry.path().extension() != ".json") continue;
      const json s = read_json(entry.path());
      const double obj = s.at("best").at("objective").get<double>();
      if (best.is_null() || obj > best["best"]["objective"].get<double>() ||
          (obj == best["best"]["objective"].get<double>() && s["seed"].get<std::uint64_t>() < best["seed"].get<std::uint64_t>()))
        best = s;
    }
    const face::ActuatorVector best_v(best["best"]["actuators"].get<std::vector<double>>());
    const fs::path best_png = a.data_dir / ("best-" + name + ".png");
    const fs::path best_json = a.data_dir / ("best-" + name + ".json");
    save_image(best_png, sim.render(best_v));
    write_json(best_json, json{{"emotion", name},
                               {"seed", best["seed"]},
                               {"actuators", best["best"]["actuators"]},
                               {"objective", best["best"]["objective"]},
                               {"latent", best["best"]["latent"]}});
    RunManifest bm{"best-" + name, {}, best["seed"].get<std::uint64_t>(), {}, {}, utc_timestamp(), {}};
    bm.add_output(a.data_dir, best_png);
    bm.add_output(a.data_dir, best_json);
    bm.finished = bm.started;
    write_manifest(a.data_dir, bm);

    std::cout << name << " seed " << a.seed << ": incumbent objective " << fixed(result.best_value)
              << ", latent " << fixed(bo_latent) << "; random search best latent " << fixed(random_latent) << "\n";
  }
  return 0;
}

int report(const ReportArgs& a) {
  std::vector<fs::path> files = a.runs;
  if (files.empty()) {
    if (!fs::is_directory(a.data_dir)) throw IoError("no such directory " + a.data_dir.string());
    for (const auto& entry : fs::directory_iterator(a.data_dir)) {
      const std::string name = entry.path().filename().string();
      if (entry.path().extension() != ".json") continue;
      if (name.rfind("train-", 0) == 0 || name.rfind("bo-", 0) == 0) files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  struct Row {
    std::optional<double> accuracy;
    std::vector<double> bo_latent, bo_objective, random_latent;
  };
  std::map<int, Row> rows;  // keyed by channel for a stable order
  for (const auto& f : files) {
    require_file(f, "run");
    const json j = read_json(f);
    const Emotion e = parse_emotion(j.at("emotion").get<std::string>());
    auto& row = rows[static_cast<int>(channel(e))];
    if (j.contains("mean_accuracy")) {
      row.accuracy = j["mean_accuracy"].get<double>();
    } else if (j.contains("best")) {
      row.bo_latent.push_back(j["best"]["latent"].get<double>());
      row.bo_objective.push_back(j["best"]["objective"].get<double>());
      row.random_latent.push_back(j["random_search"]["best_latent"].get<double>());
    } else {
      throw FormatError(f.string() + " is neither a training report nor a BO summary");
    }
  }
  if (rows.empty()) throw NoData("no train-*.json or bo-*.json files to report on");

  const fs::path out = a.out.empty() ? a.data_dir : a.out;
  ensure_dir(out);
  std::string csv = "emotion,cv_accuracy,bo_runs,median_bo_objective,median_bo_latent,median_random_latent\n";
  std::string md =
      "| emotion | CV accuracy | BO runs | median BO objective | median BO latent | median random-search latent |\n"
      "|---|---|---|---|---|---|\n";
  for (const auto& [k, r] : rows) {
    const std::string name = to_string(static_cast<Emotion>(k));
    const bool has_bo = !r.bo_latent.empty();
    const auto opt = [](bool ok, double v) { return ok ? fixed(v) : std::string(); };
    csv += name + "," + (r.accuracy ? fixed(*r.accuracy) : "") + "," + std::to_string(r.bo_latent.size()) + "," +
           opt(has_bo, median(r.bo_objective)) + "," + opt(has_bo, median(r.bo_latent)) + "," +
           opt(has_bo, median(r.random_latent)) + "\n";
    const auto cell = [](const std::string& s) { return s.empty() ? std::string("-") : s; };
    md += "| " + name + " | " + cell(r.accuracy ? fixed(*r.accuracy) : "") + " | " +
          std::to_string(r.bo_latent.size()) + " | " + cell(opt(has_bo, median(r.bo_objective))) + " | " +
          cell(opt(has_bo, median(r.bo_latent))) + " | " + cell(opt(has_bo, median(r.random_latent))) + " |\n";
  }
  write_text(out / "report.csv", csv);
  write_text(out / "report.md", md);
  std::cout << md;
  return 0;
}

int serve(const ServeArgs& a) {
  const fs::path pool = a.pool.empty() ? a.data_dir / "subset.jsonl" : a.pool;
  require_file(pool, "pool");
  return run_service(pool, a.data_dir, a.bind, a.static_dir);
}

}  // namespace prefrank::cli
