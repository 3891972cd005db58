#include "prefrank/session_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "prefrank/errors.hpp"

namespace prefrank::ranking {

using nlohmann::json;

std::string session_file_name(const std::string& annotator_id, Emotion emotion) {
  return "session-" + annotator_id + "-" + to_string(emotion) + ".jsonl";
}

void durable_append(const std::filesystem::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  const std::string data = line + "\n";
  std::size_t written = 0;
  while (written < data.size()) {
    const auto n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw IoError("write to " + path.string() + " failed: " + std::strerror(err));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    const int err = errno;
    ::close(fd);
    throw IoError("fsync of " + path.string() + " failed: " + std::strerror(err));
  }
  ::close(fd);
}

namespace {

json header_record(const SessionHeader& h) {
  return json{{"items", h.items},
              {"seed", h.seed},
              {"emotion", to_string(h.emotion)},
              {"annotator_id", h.annotator_id},
              {"schedule", to_string(h.schedule)}};
}

SessionHeader parse_header(const json& j) {
  SessionHeader h;
  h.items = j.at("items").get<std::vector<ItemId>>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.emotion = parse_emotion(j.at("emotion").get<std::string>());
  h.annotator_id = j.at("annotator_id").get<std::string>();
  h.schedule = parse_schedule(j.value("schedule", std::string("mergesort")));
  return h;
}

json answer_record(const LogEntry& e) {
  return json{{"query_id", e.query.query_id},
              {"left_id", e.query.left_id},
              {"right_id", e.query.right_id},
              {"winner", e.winner},
              {"timestamp", e.timestamp_ms}};
}

}  // namespace

SessionFile SessionFile::create(const std::filesystem::path& path, const SessionHeader& header) {
  if (std::filesystem::exists(path)) throw IoError(path.string() + " already exists");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  SortSession session(header);
  durable_append(path, header_record(header).dump());
  SessionFile file(path, std::move(session));
  if (file.session_.completed())
    durable_append(path, json{{"ranking", file.session_.result()->order}}.dump());
  return file;
}

SessionFile SessionFile::open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  // Drop a torn tail: bytes after the last newline were never acknowledged.
  const auto last_nl = content.rfind('\n');
  const std::size_t good = last_nl == std::string::npos ? 0 : last_nl + 1;
  if (good != content.size()) {
    std::filesystem::resize_file(path, good);
    content.resize(good);
  }

  std::istringstream lines(content);
  std::string line;
  std::optional<SessionHeader> header;
  std::vector<LogEntry> log;
  std::optional<std::vector<ItemId>> final_ranking;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
    try {
      if (!header) {
        header = parse_header(j);
      } else if (j.contains("ranking")) {
        final_ranking = j.at("ranking").get<std::vector<ItemId>>();
      } else {
        LogEntry e;
        e.query.query_id = j.at("query_id").get<std::int64_t>();
        e.query.left_id = j.at("left_id").get<ItemId>();
        e.query.right_id = j.at("right_id").get<ItemId>();
        e.query.emotion = header->emotion;
        e.winner = j.at("winner").get<ItemId>();
        e.timestamp_ms = j.value("timestamp", std::int64_t{0});
        log.push_back(e);
      }
    } catch (const json::exception& ex) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  if (!header) throw FormatError(path.string() + ": missing header record");
  SortSession session = SortSession::replay(*header, log);
  if (final_ranking) {
    if (!session.completed() || session.result()->order != *final_ranking)
      throw FormatError(path.string() + ": final ranking does not match the replayed log");
  } else if (session.completed()) {
    // Crashed between the last answer and the final record.
    durable_append(path, json{{"ranking", session.result()->order}}.dump());
  }
  return SessionFile(path, std::move(session));
}

void SessionFile::submit(const ComparisonAnswer& answer, std::int64_t timestamp_ms) {
  SortSession next = session_;
  next.submit(answer, timestamp_ms);
  durable_append(path_, answer_record(next.log().back()).dump());
  session_ = std::move(next);
  if (session_.completed())
    durable_append(path_, json{{"ranking", session_.result()->order}}.dump());
}

}  // namespace prefrank::ranking
