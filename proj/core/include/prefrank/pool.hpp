#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "prefrank/dataset.hpp"
#include "prefrank/face_sim.hpp"

namespace prefrank::dataset {

struct PoolOptions {
  std::size_t count = 500;
  std::uint64_t seed = 0;
  // Share of the pool taken from BO runs on the latent intensity of each
  // target emotion; the rest are Sobol fillers.
  double bo_fraction = 0.5;
  int bo_init = 10;
  int bo_candidates = 512;
};

// Ids are dense from 0. Images are stored 8-bit, so they are quantized here
// to make the in-memory pool identical to the one read back from disk.
CandidatePool generate_pool(const face::FaceSimulator& sim, const PoolOptions& options);

// Writes `{dir}/pool/{id:04}.png` for every entry plus the JSONL manifest
// `{dir}/{jsonl_name}` with records {id, actuators, image_path, sha256}.
void write_pool(const std::filesystem::path& dir, const CandidatePool& pool,
                const std::string& jsonl_name = "pool.jsonl");

// Writes only the JSONL records; images must already be under `dir`.
void write_pool_records(const std::filesystem::path& jsonl, const CandidatePool& pool);

// Reads a pool/subset JSONL. Image paths resolve against the file's
// directory and every PNG is checked against its recorded sha256
// (FormatError on mismatch).
CandidatePool read_pool(const std::filesystem::path& jsonl);

std::string pool_image_name(int id);

}  // namespace prefrank::dataset
