#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "prefrank/errors.hpp"

using namespace prefrank;
namespace fs = std::filesystem;

namespace {

fs::path default_data_dir() {
  if (const char* env = std::getenv("PREFRANK_DATA_DIR"); env && *env) return env;
  return "prefrank-data";
}

// --emotion / --all-emotions, resolved after parsing.
struct EmotionChoice {
  std::string name;
  bool all = false;

  void add(CLI::App* cmd) {
    auto* one = cmd->add_option("--emotion", name, "Target emotion (anger, disgust, fear, happiness, sadness, surprise)");
    auto* every = cmd->add_flag("--all-emotions", all, "Loop over all six target emotions");
    one->excludes(every);
  }

  std::vector<Emotion> resolve() const {
    if (all) return {kTargetEmotions.begin(), kTargetEmotions.end()};
    if (name.empty()) return {};
    try {
      const Emotion e = parse_emotion(name);
      if (e == Emotion::Neutral) throw cli::UsageError("neutral is not a target emotion");
      return {e};
    } catch (const std::invalid_argument& ex) {
      throw cli::UsageError(ex.what());
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise preference ranking and model-guided expression search on a simulated face"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or INI file mirroring the command line flags");
  fs::path data_dir = default_data_dir();
  app.add_option("--data-dir", data_dir, "Data root (default: $PREFRANK_DATA_DIR or ./prefrank-data)");

  cli::GenPoolArgs gp;
  auto* gen = app.add_subcommand("gen-pool", "Render a candidate pool");
  gen->add_option("--count", gp.count, "Number of candidates")->capture_default_str();
  gen->add_option("--seed", gp.seed)->capture_default_str();
  gen->add_option("--bo-fraction", gp.bo_fraction, "Share of candidates taken from BO runs on the latent")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gen->add_option("--out", gp.out, "Output directory (default: data dir)");

  cli::SelectArgs sa;
  auto* sel = app.add_subcommand("select", "Pick a diverse subset and enumerate its pairs");
  sel->add_option("--pool", sa.pool, "pool.jsonl (default: <data dir>/pool.jsonl)");
  sel->add_option("--k", sa.k, "Subset size")->capture_default_str();

  cli::AnnotateArgs an;
  EmotionChoice an_e;
  auto* ann = app.add_subcommand("annotate", "Rank the subset, by a person (web service) or by the latent oracle");
  ann->add_option("--mode", an.mode)->check(CLI::IsMember({"human", "synthetic"}))->capture_default_str();
  an_e.add(ann);
  ann->add_option("--annotator", an.annotator)->capture_default_str();
  ann->add_option("--seed", an.seed, "Shuffle seed of the session")->capture_default_str();
  ann->add_option("--schedule", an.schedule)->check(CLI::IsMember({"mergesort", "exhaustive"}))->capture_default_str();
  ann->add_option("--subset", an.subset, "subset.jsonl (default: <data dir>/subset.jsonl)");
  ann->add_flag("--resume", an.resume, "Continue an existing session file");
  ann->add_option("--bind", an.bind, "host:port for human mode")->capture_default_str();
  ann->add_option("--static", an.static_dir, "Directory served at / in human mode");

  cli::TrainArgs tr;
  EmotionChoice tr_e;
  auto* trn = app.add_subcommand("train", "Cross-validate and train a preference model per emotion");
  tr_e.add(trn);
  trn->add_option("--sessions", tr.sessions, "Session files (default: every session of the emotion)");
  trn->add_option("--subset", tr.subset);
  trn->add_option("--pairs", tr.pairs);
  trn->add_option("--folds", tr.folds)->check(CLI::Range(2, 1000))->capture_default_str();
  trn->add_option("--lr", tr.learning_rate)->capture_default_str();
  trn->add_option("--weight-decay", tr.weight_decay)->capture_default_str();
  trn->add_option("--momentum", tr.momentum)->capture_default_str();
  trn->add_option("--epochs", tr.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  trn->add_option("--batch-size", tr.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  trn->add_option("--sigmoid-scale", tr.sigmoid_scale)->check(CLI::PositiveNumber)->capture_default_str();
  trn->add_option("--seed", tr.seed)->capture_default_str();

  cli::OptimizeArgs op;
  EmotionChoice op_e;
  fs::path model_path;
  auto* opt = app.add_subcommand("optimize", "Search actuator space for the expression the model scores highest");
  op_e.add(opt);
  opt->add_option("--model", model_path, "Checkpoint (default: <data dir>/model-<emotion>.bin)");
  opt->add_option("--budget", op.budget, "Total objective evaluations")->capture_default_str();
  opt->add_option("--init", op.init, "Initial Sobol evaluations")->capture_default_str();
  opt->add_option("--baseline", op.baseline, "Random-search samples for the baseline")->capture_default_str();
  opt->add_option("--seed", op.seed)->capture_default_str();

  cli::ReportArgs rp;
  auto* rep = app.add_subcommand("report", "Tabulate CV accuracy and BO results against the random baseline");
  rep->add_option("--runs", rp.runs, "train-*.json / bo-*.json files (default: all in the data dir)");
  rep->add_option("--out", rp.out, "Output directory (default: data dir)");

  cli::ServeArgs sv;
  auto* srv = app.add_subcommand("serve", "Run the annotation HTTP service");
  srv->add_option("--pool", sv.pool, "Pool or subset JSONL (default: <data dir>/subset.jsonl)");
  srv->add_option("--bind", sv.bind)->capture_default_str();
  srv->add_option("--static", sv.static_dir, "Directory served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      if (gp.out.empty()) gp.out = data_dir;
      return cli::gen_pool(gp);
    }
    if (sel->parsed()) {
      if (sa.pool.empty()) sa.pool = data_dir / "pool.jsonl";
      return cli::select(sa);
    }
    if (ann->parsed()) {
      an.data_dir = data_dir;
      an.emotions = an_e.resolve();
      return cli::annotate(an);
    }
    if (trn->parsed()) {
      tr.data_dir = data_dir;
      tr.emotions = tr_e.resolve();
      return cli::train(tr);
    }
    if (opt->parsed()) {
      op.data_dir = data_dir;
      op.emotions = op_e.resolve();
      if (!model_path.empty()) op.model = model_path;
      return cli::optimize(op);
    }
    if (rep->parsed()) {
      rp.data_dir = data_dir;
      return cli::report(rp);
    }
    if (srv->parsed()) {
      sv.data_dir = data_dir;
      return cli::serve(sv);
    }
  } catch (const cli::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
