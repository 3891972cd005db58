#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "prefrank/errors.hpp"
#include "prefrank/face_sim.hpp"
#include "prefrank/hashing.hpp"
#include "prefrank/image.hpp"
#include "prefrank/manifest.hpp"
#include "prefrank/pool.hpp"
#include "test_util.hpp"

using namespace prefrank;
using namespace prefrank::dataset;
using prefrank::testing::TempDir;

TEST(Pool, DenseIdsAndRenderedImages) {
  face::FaceSimulator sim;
  PoolOptions opt;
  opt.count = 24;
  opt.seed = 3;
  opt.bo_fraction = 0.25;
  opt.bo_candidates = 64;
  const auto pool = generate_pool(sim, opt);
  ASSERT_EQ(pool.size(), 24u);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& e = pool.entries[i];
    EXPECT_EQ(e.id, static_cast<int>(i));
    EXPECT_EQ(e.actuators.size(), face::kDefaultDof);
    // Stored images are 8-bit quantized renders.
    EXPECT_EQ(e.image, from_gray8(224, 224, to_gray8(sim.render(e.actuators))));
  }
  const auto again = generate_pool(sim, opt);
  for (std::size_t i = 0; i < pool.size(); ++i) EXPECT_EQ(again.entries[i].actuators, pool.entries[i].actuators);
}

TEST(Pool, WriteReadRoundTripAndHashCheck) {
  TempDir dir;
  face::FaceSimulator sim;
  PoolOptions opt;
  opt.count = 6;
  opt.bo_fraction = 0.0;
  const auto pool = generate_pool(sim, opt);
  write_pool(dir.path(), pool);
  EXPECT_TRUE(std::filesystem::exists(dir / pool_image_name(3)));
  const auto back = read_pool(dir / "pool.jsonl");
  ASSERT_EQ(back.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(back.entries[i].id, pool.entries[i].id);
    EXPECT_EQ(back.entries[i].actuators, pool.entries[i].actuators);
    EXPECT_EQ(back.entries[i].image, pool.entries[i].image);
  }
  // Rewrite one image with different content: the recorded hash no longer matches.
  save_image(dir / pool_image_name(2), FaceImage(224, 224, 0.5));
  EXPECT_THROW(read_pool(dir / "pool.jsonl"), FormatError);
}

TEST(Pool, SubsetRecordsShareImages) {
  TempDir dir;
  face::FaceSimulator sim;
  PoolOptions opt;
  opt.count = 8;
  opt.bo_fraction = 0.0;
  const auto pool = generate_pool(sim, opt);
  write_pool(dir.path(), pool);
  const auto subset = select_diverse(pool, 4);
  write_pool_records(dir / "subset.jsonl", subset);
  const auto back = read_pool(dir / "subset.jsonl");
  EXPECT_EQ(back.ids(), subset.ids());
}

TEST(Manifest, RoundTripAndVerification) {
  TempDir dir;
  std::filesystem::create_directories(dir / "sub");
  write_bytes(dir / "sub" / "a.txt", std::vector<std::uint8_t>{'a', 'b', 'c'});
  RunManifest m;
  m.stage = "unit";
  m.seed = 42;
  m.config = {{"k", "100"}, {"mode", "synthetic"}};
  m.started = utc_timestamp();
  m.add_output(dir.path(), dir / "sub" / "a.txt");
  m.finished = utc_timestamp();
  write_manifest(dir.path(), m);
  EXPECT_EQ(manifest_path(dir.path(), "unit"), dir / "manifest-unit.json");

  const auto back = read_manifest(manifest_path(dir.path(), "unit"));
  EXPECT_EQ(back.stage, "unit");
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.config, m.config);
  ASSERT_EQ(back.outputs.size(), 1u);
  EXPECT_EQ(back.outputs[0].path, "sub/a.txt");
  EXPECT_EQ(back.outputs[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(back.started.size(), 20u);  // YYYY-MM-DDTHH:MM:SSZ

  EXPECT_TRUE(verify_artifact(dir.path(), dir / "sub" / "a.txt"));
  write_bytes(dir / "other.txt", std::vector<std::uint8_t>{'x'});
  EXPECT_FALSE(verify_artifact(dir.path(), dir / "other.txt"));
  write_bytes(dir / "sub" / "a.txt", std::vector<std::uint8_t>{'a', 'b', 'd'});
  EXPECT_THROW(verify_artifact(dir.path(), dir / "sub" / "a.txt"), FormatError);

  std::ofstream(dir / "manifest-bad.json") << "{not json";
  EXPECT_THROW(read_manifest(dir / "manifest-bad.json"), FormatError);
}
