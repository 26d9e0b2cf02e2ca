#include "curation/journal.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>

#include "common/error.hpp"

namespace tilecurate::curation {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json to_json(const Event& e) {
  return {{"seq", e.seq}, {"type", e.type}, {"timestamp", e.timestamp}, {"payload", e.payload}};
}

Event event_from_json(const nlohmann::json& j) {
  return {j.at("seq").get<std::uint64_t>(), j.at("type").get<std::string>(), j.at("timestamp").get<std::string>(),
          j.at("payload")};
}

Journal::Journal(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open journal " + path_.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0, good_end = 0, lineno = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string line = text.substr(pos, (terminated ? nl : text.size()) - pos);
    ++lineno;
    if (!line.empty()) {
      try {
        events_.push_back(event_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& ex) {
        if (terminated)
          throw Error(ErrorKind::State,
                      path_.string() + ":" + std::to_string(lineno) + ": corrupt journal record: " + ex.what());
        break;  // interrupted final append
      }
    }
    if (!terminated) {
      // A parseable but unterminated last record is kept; terminate it.
      std::ofstream fix(path_, std::ios::binary | std::ios::app);
      fix << '\n';
      return;
    }
    pos = nl + 1;
    good_end = pos;
  }
  if (good_end < text.size()) std::filesystem::resize_file(path_, good_end);
}

void Journal::append(const Event& event) {
  const std::string line = to_json(event).dump() + "\n";
  const int fd = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorKind::Io, "cannot open journal " + path_.string() + " for append");
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      ::close(fd);
      throw Error(ErrorKind::Io, "journal write failed: " + path_.string());
    }
    written += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error(ErrorKind::Io, "journal sync failed: " + path_.string());
  events_.push_back(event);
}

Curator::Curator(std::shared_ptr<const CurationContext> context, const std::filesystem::path& journal_path,
                 std::function<std::string()> clock)
    : journal_(journal_path), state_(replay(context, journal_.events())), clock_(std::move(clock)) {}

LabelOutcome Curator::mutate(const std::string& type, nlohmann::json payload) {
  std::lock_guard lock(mutex_);
  const Event e{state_.last_seq() + 1, type, clock_(), std::move(payload)};
  CurationState next = state_;
  LabelOutcome out = next.apply(e);
  journal_.append(e);
  state_ = std::move(next);
  return out;
}

LabelOutcome Curator::label(int cluster, const std::string& tissue, const std::string& reviewer, bool override_label) {
  return mutate("label", label_payload(cluster, tissue, reviewer, override_label));
}

std::vector<std::int64_t> Curator::resolve(std::int64_t proposal, Decision decision, const std::string& reviewer) {
  return mutate("resolve", resolve_payload(proposal, decision, reviewer)).created;
}

CurationState Curator::snapshot() const {
  std::lock_guard lock(mutex_);
  return state_;
}

}  // namespace tilecurate::curation
