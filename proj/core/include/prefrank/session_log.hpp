#pragma once

#include <filesystem>
#include <string>

#include "prefrank/ranking.hpp"

namespace prefrank::ranking {

// `session-{annotator}-{emotion}.jsonl`
std::string session_file_name(const std::string& annotator_id, Emotion emotion);

// JSONL session file: one header record, one record per answer, and a
// final {"ranking": [...]} record once the sort completes. Every write is
// flushed with fsync before returning.
class SessionFile {
 public:
  // Creates the file and writes the header. Throws IoError if it exists.
  static SessionFile create(const std::filesystem::path& path, const SessionHeader& header);

  // Replays an existing file. A torn trailing record (no newline, never
  // acknowledged) is discarded and truncated away. Throws FormatError on
  // any other malformed content.
  static SessionFile open(const std::filesystem::path& path);

  const std::filesystem::path& path() const { return path_; }
  const SortSession& session() const { return session_; }

  // Applies the answer to the session, then appends it durably. Validation
  // errors propagate without touching the file. Writes the final ranking
  // record when the answer completes the sort.
  void submit(const ComparisonAnswer& answer, std::int64_t timestamp_ms);

 private:
  SessionFile(std::filesystem::path path, SortSession session)
      : path_(std::move(path)), session_(std::move(session)) {}

  std::filesystem::path path_;
  SortSession session_;
};

// Appends one line and fsyncs.
void durable_append(const std::filesystem::path& path, const std::string& line);

}  // namespace prefrank::ranking
