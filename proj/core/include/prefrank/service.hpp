#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace prefrank::service {

struct ServiceConfig {
  std::filesystem::path pool;      // pool or subset JSONL; its entries are the items to rank
  std::filesystem::path data_dir;  // sessions live in {data_dir}/sessions
  std::filesystem::path static_dir;  // optional: served at /
  int threads = 8;
};

// HTTP backend for pairwise annotation. Sessions are keyed
// "{annotator}-{emotion}" and are reopened from their JSONL log on first
// use, so a restarted server resumes every session where it stopped.
class AnnotateService {
 public:
  explicit AnnotateService(ServiceConfig config);
  ~AnnotateService();
  AnnotateService(const AnnotateService&) = delete;
  AnnotateService& operator=(const AnnotateService&) = delete;

  // Binds the listening socket; port 0 picks a free port. Returns the bound
  // port, or -1 on failure.
  int bind(const std::string& host, int port);
  // Serves until stop() is called. Requires a successful bind().
  bool run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace prefrank::service
