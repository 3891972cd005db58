#include "prefrank/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "prefrank/errors.hpp"
#include "prefrank/hashing.hpp"
#include "prefrank/image.hpp"

namespace prefrank {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string relative_to(const fs::path& data_dir, const fs::path& file) {
  const fs::path rel = fs::proximate(file, data_dir);
  return rel.generic_string();
}

json to_json(const std::vector<Artifact>& list) {
  json out = json::array();
  for (const auto& a : list) out.push_back({{"path", a.path}, {"sha256", a.sha256}});
  return out;
}

std::vector<Artifact> artifacts(const json& j) {
  std::vector<Artifact> out;
  for (const auto& a : j) out.push_back({a.at("path").get<std::string>(), a.at("sha256").get<std::string>()});
  return out;
}

}  // namespace

void RunManifest::add_input(const fs::path& data_dir, const fs::path& file) {
  inputs.push_back({relative_to(data_dir, file), sha256_file(file)});
}

void RunManifest::add_output(const fs::path& data_dir, const fs::path& file) {
  outputs.push_back({relative_to(data_dir, file), sha256_file(file)});
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path manifest_path(const fs::path& data_dir, const std::string& stage) {
  return data_dir / ("manifest-" + stage + ".json");
}

void write_manifest(const fs::path& data_dir, const RunManifest& m) {
  json j;
  j["stage"] = m.stage;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["inputs"] = to_json(m.inputs);
  j["outputs"] = to_json(m.outputs);
  j["started"] = m.started;
  j["finished"] = m.finished;
  const std::string text = j.dump(2) + "\n";
  write_bytes(manifest_path(data_dir, m.stage),
              std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

RunManifest read_manifest(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    const json j = json::parse(bytes.begin(), bytes.end());
    RunManifest m;
    m.stage = j.at("stage").get<std::string>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.inputs = artifacts(j.at("inputs"));
    m.outputs = artifacts(j.at("outputs"));
    m.started = j.value("started", "");
    m.finished = j.value("finished", "");
    return m;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

bool verify_artifact(const fs::path& data_dir, const fs::path& file) {
  if (!fs::is_directory(data_dir)) return false;
  const std::string rel = relative_to(data_dir, file);
  bool found = false;
  std::string actual;
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("manifest-", 0) != 0 || entry.path().extension() != ".json") continue;
    const RunManifest m = read_manifest(entry.path());
    for (const auto& out : m.outputs) {
      if (out.path != rel) continue;
      if (actual.empty()) actual = sha256_file(file);
      if (actual != out.sha256)
        throw FormatError(rel + " does not match the hash recorded by stage '" + m.stage + "'");
      found = true;
    }
  }
  return found;
}

}  // namespace prefrank
