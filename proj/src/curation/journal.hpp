#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "curation/state.hpp"

namespace tilecurate::curation {

/// ISO-8601 UTC, second precision.
std::string utc_timestamp();

/// Append-only NDJSON event log. Each line:
/// {"seq":n,"type":...,"timestamp":...,"payload":{...}}.
class Journal {
 public:
  /// Loads existing events. A final line without a terminating newline that
  /// fails to parse (an interrupted append) is dropped and truncated away.
  explicit Journal(std::filesystem::path path);

  const std::vector<Event>& events() const { return events_; }
  const std::filesystem::path& path() const { return path_; }
  /// Writes, flushes and syncs one event before returning.
  void append(const Event& event);

 private:
  std::filesystem::path path_;
  std::vector<Event> events_;
};

nlohmann::json to_json(const Event& event);
Event event_from_json(const nlohmann::json& j);

/// Single writer over a journal: each mutation is validated on a copy of the
/// state, made durable, then published.
class Curator {
 public:
  Curator(std::shared_ptr<const CurationContext> context, const std::filesystem::path& journal_path,
          std::function<std::string()> clock = utc_timestamp);

  LabelOutcome label(int cluster, const std::string& tissue, const std::string& reviewer, bool override_label);
  std::vector<std::int64_t> resolve(std::int64_t proposal, Decision decision, const std::string& reviewer);

  /// Consistent copy of the current state.
  CurationState snapshot() const;

 private:
  LabelOutcome mutate(const std::string& type, nlohmann::json payload);

  mutable std::mutex mutex_;
  Journal journal_;
  CurationState state_;
  std::function<std::string()> clock_;
};

}  // namespace tilecurate::curation
