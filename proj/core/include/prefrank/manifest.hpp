#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace prefrank {

struct Artifact {
  std::string path;  // relative to the data directory
  std::string sha256;
};

// Written next to the outputs of every artifact-producing command as
// `manifest-{stage}.json`.
struct RunManifest {
  std::string stage;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::vector<Artifact> inputs;
  std::vector<Artifact> outputs;
  std::string started;   // ISO-8601 UTC
  std::string finished;

  void add_input(const std::filesystem::path& data_dir, const std::filesystem::path& file);
  void add_output(const std::filesystem::path& data_dir, const std::filesystem::path& file);
};

std::string utc_timestamp();
std::filesystem::path manifest_path(const std::filesystem::path& data_dir, const std::string& stage);

void write_manifest(const std::filesystem::path& data_dir, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

// Looks `file` up among the outputs recorded by the manifests in
// `data_dir` and checks its current hash. Returns false when no manifest
// records it; throws FormatError when a recorded hash no longer matches.
bool verify_artifact(const std::filesystem::path& data_dir, const std::filesystem::path& file);

}  // namespace prefrank
