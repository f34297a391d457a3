#pragma once

#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "perfsampler/llm/gateway.hpp"

namespace perfsampler::llm {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Append-only JSON-lines log of chat calls. Appends are serialized; the
/// in-memory copy is kept so a finished run can be replayed without a file.
class TranscriptSink {
 public:
  TranscriptSink() = default;
  explicit TranscriptSink(std::string path) : path_(std::move(path)) {
    std::ofstream out(*path_, std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot open transcript '" + *path_ + "'");
  }

  void append(const ChatRequest& req, const ChatResponse& resp) {
    Json rec;
    rec["role_tag"] = std::string(to_string(req.role));
    rec["iteration"] = req.iteration;
    rec["model_id"] = req.model_id;
    rec["request_text"] = request_text(req);
    rec["response_text"] = resp.text;
    rec["usage"] = {{"prompt_tokens", resp.usage.prompt_tokens}, {"completion_tokens", resp.usage.completion_tokens}};
    rec["timestamp"] = utc_timestamp();
    std::lock_guard lock(mutex_);
    if (path_) {
      std::ofstream out(*path_, std::ios::app);
      out << rec.dump() << '\n';
      if (!out) throw Error(Errc::io_error, "transcript append failed for '" + *path_ + "'");
    }
    records_.push_back(std::move(rec));
  }

  std::vector<Json> records() const {
    std::lock_guard lock(mutex_);
    return records_;
  }

  const std::optional<std::string>& path() const { return path_; }

 private:
  std::optional<std::string> path_;
  mutable std::mutex mutex_;
  std::vector<Json> records_;
};

inline void transcript_log(const ChatRequest& req, const ChatResponse& resp, TranscriptSink& sink) {
  sink.append(req, resp);
}

inline std::vector<Json> read_transcript(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<Json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_json(line, path));
  }
  return out;
}

/// Each record becomes an entry keyed on its exact request text, so replay
/// answers every call the way the recorded run saw it.
inline MockScript transcript_to_mock(const std::vector<Json>& records) {
  MockScript script;
  for (const auto& r : records) {
    MockEntry e;
    e.role = role_from_string(r.at("role_tag").get<std::string>());
    e.iteration = r.at("iteration").get<int>();
    e.matcher = r.at("request_text").get<std::string>();
    e.response = r.at("response_text").get<std::string>();
    script.add(std::move(e));
  }
  return script;
}

}  // namespace perfsampler::llm
