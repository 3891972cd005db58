#include "prefrank/pool.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include "json.hpp"

#include "prefrank/bayesopt.hpp"
#include "prefrank/errors.hpp"
#include "prefrank/hashing.hpp"
#include "prefrank/random.hpp"
#include "prefrank/sobol.hpp"

namespace prefrank::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

std::string pool_image_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "pool/%04d.png", id);
  return buf;
}

CandidatePool generate_pool(const face::FaceSimulator& sim, const PoolOptions& options) {
  const std::size_t dof = sim.dof();
  std::vector<std::vector<double>> points;
  points.reserve(options.count);

  const auto bo_total = static_cast<std::size_t>(
      std::floor(std::clamp(options.bo_fraction, 0.0, 1.0) * static_cast<double>(options.count)));
  if (bo_total > 0) {
    const std::size_t runs = kTargetEmotions.size();
    const auto per_run = static_cast<int>((bo_total + runs - 1) / runs);
    for (std::size_t r = 0; r < runs && points.size() < bo_total; ++r) {
      bo::OptimizeOptions opt;
      opt.budget = per_run;
      opt.init = std::min(options.bo_init, per_run);
      opt.seed = derive_seed(options.seed, 100 + r);
      opt.propose.candidates = options.bo_candidates;
      const auto result = bo::optimize(bo::latent_objective(sim, kTargetEmotions[r]), dof, opt);
      for (const auto& row : result.trace.rows) {
        if (points.size() == bo_total) break;
        points.push_back(row.x);
      }
    }
  }
  bo::SobolSequence filler(dof, derive_seed(options.seed, 200));
  while (points.size() < options.count) points.push_back(filler.next());

  CandidatePool pool;
  pool.entries.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    face::ActuatorVector v(std::move(points[i]));
    const FaceImage rendered = sim.render(v);
    FaceImage stored = from_gray8(rendered.width(), rendered.height(), to_gray8(rendered));
    pool.entries.push_back(PoolEntry{static_cast<int>(i), std::move(v), std::move(stored)});
  }
  return pool;
}

namespace {

void write_records(const fs::path& jsonl, const CandidatePool& pool, const fs::path& dir) {
  std::string text;
  for (const auto& e : pool.entries) {
    const std::string rel = pool_image_name(e.id);
    json rec;
    rec["id"] = e.id;
    rec["actuators"] = std::vector<double>(e.actuators.values().begin(), e.actuators.values().end());
    rec["image_path"] = rel;
    rec["sha256"] = sha256_file(dir / rel);
    text += rec.dump() + "\n";
  }
  write_bytes(jsonl, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

void write_pool(const fs::path& dir, const CandidatePool& pool, const std::string& jsonl_name) {
  std::error_code ec;
  fs::create_directories(dir / "pool", ec);
  if (ec) throw IoError("cannot create " + (dir / "pool").string() + ": " + ec.message());
  for (const auto& e : pool.entries) save_image(dir / pool_image_name(e.id), e.image);
  write_records(dir / jsonl_name, pool, dir);
}

void write_pool_records(const fs::path& jsonl, const CandidatePool& pool) {
  write_records(jsonl, pool, jsonl.parent_path());
}

CandidatePool read_pool(const fs::path& jsonl) {
  std::ifstream in(jsonl, std::ios::binary);
  if (!in) throw IoError("cannot read " + jsonl.string());
  const fs::path dir = jsonl.parent_path();
  CandidatePool pool;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = jsonl.string() + ":" + std::to_string(lineno);
    try {
      const json rec = json::parse(line);
      PoolEntry e;
      e.id = rec.at("id").get<int>();
      e.actuators = face::ActuatorVector(rec.at("actuators").get<std::vector<double>>());
      const fs::path image_path = dir / rec.at("image_path").get<std::string>();
      const auto bytes = read_bytes(image_path);
      const std::string expected = rec.at("sha256").get<std::string>();
      if (sha256_hex(bytes) != expected)
        throw FormatError(where + ": " + image_path.string() + " does not match its recorded sha256");
      e.image = decode_png(bytes);
      pool.entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw FormatError(where + ": " + ex.what());
    }
  }
  return pool;
}

}  // namespace prefrank::dataset
