#pragma once

#include <cstdint>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curation/classes.hpp"

namespace tilecurate::curation {

enum class LabelSource { Human, PropagatedPending, PropagatedAccepted };
enum class ProposalStatus { Pending, Accepted, Rejected };
enum class Decision { Accept, Reject };

std::string_view to_string(LabelSource source);
std::string_view to_string(ProposalStatus status);
std::string_view to_string(Decision decision);
Decision parse_decision(std::string_view text);
std::optional<ProposalStatus> parse_status(std::string_view text);

struct ClusterLabel {
  std::string tissue;
  LabelSource source = LabelSource::Human;
  std::string reviewer;
  std::string timestamp;
  std::optional<std::int64_t> proposal;  // set for propagated labels
  bool operator==(const ClusterLabel&) const = default;
};

struct Proposal {
  std::int64_t id = 0;
  int source = 0;
  int target = 0;
  std::string tissue;
  ProposalStatus status = ProposalStatus::Pending;
  std::string created_at;
  std::string resolved_by;
  std::string resolved_at;
  std::string note;  // "superseded" when closed by a later human label
  bool operator==(const Proposal&) const = default;
};

/// Immutable inputs the state is evaluated against.
struct CurationContext {
  ClassRegistry classes = ClassRegistry::standard();
  std::vector<std::vector<int>> neighbors;  // per cluster, proximity order
  std::vector<std::size_t> sampled;         // sampled tiles per cluster
  std::size_t cluster_count() const { return neighbors.size(); }
};

/// One journal record.
struct Event {
  std::uint64_t seq = 0;
  std::string type;  // "label" or "resolve"
  std::string timestamp;
  nlohmann::json payload;
};

struct LabelOutcome {
  std::vector<std::int64_t> created;     // new pending proposals, proximity order
  std::vector<std::int64_t> superseded;  // pending proposals closed by this label
};

/// Cluster labels and propagation proposals. Every operation validates before
/// mutating, so a thrown error leaves the state unchanged.
class CurationState {
 public:
  explicit CurationState(std::shared_ptr<const CurationContext> context);

  /// Human label. Creates pending proposals for neighbors with neither an
  /// active label nor a pending proposal. Relabeling a human-labeled cluster
  /// needs `override`; pending proposals targeting this cluster, or issued
  /// from it with a different class, are closed as superseded.
  LabelOutcome assign_cluster_label(int cluster, const std::string& tissue, const std::string& reviewer,
                                    bool override_label, const std::string& timestamp);

  /// Accepting labels the target (propagated-accepted) and proposes to its
  /// own neighbors under the same rule. Returns the proposals created.
  std::vector<std::int64_t> resolve_proposal(std::int64_t id, Decision decision, const std::string& reviewer,
                                             const std::string& timestamp);

  /// Applies one journal event; returns the proposals it created or superseded.
  LabelOutcome apply(const Event& event);

  /// Human or propagated-accepted label.
  const std::optional<ClusterLabel>& active_label(int cluster) const;
  /// Active label, or the pending proposal's class with source propagated-pending.
  std::optional<ClusterLabel> display_label(int cluster) const;
  const std::map<std::int64_t, Proposal>& proposals() const { return proposals_; }
  const Proposal& proposal(std::int64_t id) const;
  /// Sampled-tile counts summed over actively labeled clusters, for every registered class.
  std::map<std::string, std::size_t> tallies() const;
  const CurationContext& context() const { return *context_; }
  std::uint64_t last_seq() const { return last_seq_; }

  bool operator==(const CurationState& o) const {
    return labels_ == o.labels_ && proposals_ == o.proposals_ && next_proposal_ == o.next_proposal_ &&
           last_seq_ == o.last_seq_;
  }

 private:
  void check_cluster(int cluster) const;
  std::vector<std::int64_t> propose_from(int cluster, const std::string& tissue, const std::string& timestamp);
  std::optional<std::int64_t> pending_for(int cluster) const;

  std::shared_ptr<const CurationContext> context_;
  std::vector<std::optional<ClusterLabel>> labels_;
  std::map<std::int64_t, Proposal> proposals_;
  std::int64_t next_proposal_ = 1;
  std::uint64_t last_seq_ = 0;
};

CurationState replay(std::shared_ptr<const CurationContext> context, const std::vector<Event>& events);

nlohmann::json label_payload(int cluster, const std::string& tissue, const std::string& reviewer, bool override_label);
nlohmann::json resolve_payload(std::int64_t proposal, Decision decision, const std::string& reviewer);

}  // namespace tilecurate::curation
