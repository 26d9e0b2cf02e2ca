#include "curation/state.hpp"

#include "common/error.hpp"

namespace tilecurate::curation {

std::string_view to_string(LabelSource source) {
  switch (source) {
    case LabelSource::Human: return "human";
    case LabelSource::PropagatedPending: return "propagated-pending";
    case LabelSource::PropagatedAccepted: return "propagated-accepted";
  }
  return "unknown";
}

std::string_view to_string(ProposalStatus status) {
  switch (status) {
    case ProposalStatus::Pending: return "pending";
    case ProposalStatus::Accepted: return "accepted";
    case ProposalStatus::Rejected: return "rejected";
  }
  return "unknown";
}

std::string_view to_string(Decision decision) { return decision == Decision::Accept ? "accept" : "reject"; }

Decision parse_decision(std::string_view text) {
  if (text == "accept") return Decision::Accept;
  if (text == "reject") return Decision::Reject;
  throw Error(ErrorKind::Config, "decision must be 'accept' or 'reject', got '" + std::string(text) + "'");
}

std::optional<ProposalStatus> parse_status(std::string_view text) {
  if (text == "pending") return ProposalStatus::Pending;
  if (text == "accepted") return ProposalStatus::Accepted;
  if (text == "rejected") return ProposalStatus::Rejected;
  return std::nullopt;
}

CurationState::CurationState(std::shared_ptr<const CurationContext> context)
    : context_(std::move(context)), labels_(context_->cluster_count()) {}

void CurationState::check_cluster(int cluster) const {
  require(cluster >= 0 && static_cast<std::size_t>(cluster) < labels_.size(), ErrorKind::NotFound,
          "no cluster " + std::to_string(cluster));
}

const std::optional<ClusterLabel>& CurationState::active_label(int cluster) const {
  check_cluster(cluster);
  return labels_[static_cast<std::size_t>(cluster)];
}

std::optional<std::int64_t> CurationState::pending_for(int cluster) const {
  for (const auto& [id, p] : proposals_)
    if (p.target == cluster && p.status == ProposalStatus::Pending) return id;
  return std::nullopt;
}

std::optional<ClusterLabel> CurationState::display_label(int cluster) const {
  if (const auto& active = active_label(cluster)) return active;
  if (const auto id = pending_for(cluster)) {
    const Proposal& p = proposals_.at(*id);
    return ClusterLabel{p.tissue, LabelSource::PropagatedPending, "", p.created_at, p.id};
  }
  return std::nullopt;
}

const Proposal& CurationState::proposal(std::int64_t id) const {
  const auto it = proposals_.find(id);
  require(it != proposals_.end(), ErrorKind::NotFound, "no proposal " + std::to_string(id));
  return it->second;
}

std::vector<std::int64_t> CurationState::propose_from(int cluster, const std::string& tissue,
                                                      const std::string& timestamp) {
  std::vector<std::int64_t> created;
  for (int target : context_->neighbors[static_cast<std::size_t>(cluster)]) {
    if (labels_[static_cast<std::size_t>(target)] || pending_for(target)) continue;
    Proposal p;
    p.id = next_proposal_++;
    p.source = cluster;
    p.target = target;
    p.tissue = tissue;
    p.created_at = timestamp;
    proposals_.emplace(p.id, p);
    created.push_back(p.id);
  }
  return created;
}

LabelOutcome CurationState::assign_cluster_label(int cluster, const std::string& tissue,
                                                 const std::string& reviewer, bool override_label,
                                                 const std::string& timestamp) {
  check_cluster(cluster);
  require(context_->classes.contains(tissue), ErrorKind::Config,
          "unknown class '" + tissue + "'; registered classes: " + context_->classes.listing());
  auto& slot = labels_[static_cast<std::size_t>(cluster)];
  if (slot && slot->source == LabelSource::Human && !override_label)
    throw Error(ErrorKind::Conflict, "cluster " + std::to_string(cluster) + " is already labeled " + slot->tissue +
                                         " by " + slot->reviewer + "; pass override to relabel");
  LabelOutcome out;
  for (auto& [id, p] : proposals_) {
    if (p.status != ProposalStatus::Pending) continue;
    if (p.target == cluster || (p.source == cluster && p.tissue != tissue)) {
      p.status = ProposalStatus::Rejected;
      p.resolved_by = reviewer;
      p.resolved_at = timestamp;
      p.note = "superseded";
      out.superseded.push_back(id);
    }
  }
  slot = ClusterLabel{tissue, LabelSource::Human, reviewer, timestamp, std::nullopt};
  out.created = propose_from(cluster, tissue, timestamp);
  return out;
}

std::vector<std::int64_t> CurationState::resolve_proposal(std::int64_t id, Decision decision,
                                                          const std::string& reviewer, const std::string& timestamp) {
  const auto it = proposals_.find(id);
  require(it != proposals_.end(), ErrorKind::NotFound, "no proposal " + std::to_string(id));
  Proposal& p = it->second;
  if (p.status != ProposalStatus::Pending)
    throw Error(ErrorKind::Conflict, "proposal " + std::to_string(id) + " was already " +
                                         std::string(to_string(p.status)) + " by " + p.resolved_by);
  auto& target = labels_[static_cast<std::size_t>(p.target)];
  if (decision == Decision::Accept && target)
    throw Error(ErrorKind::Conflict, "cluster " + std::to_string(p.target) + " is already labeled " + target->tissue);
  p.resolved_by = reviewer;
  p.resolved_at = timestamp;
  if (decision == Decision::Reject) {
    p.status = ProposalStatus::Rejected;
    return {};
  }
  p.status = ProposalStatus::Accepted;
  target = ClusterLabel{p.tissue, LabelSource::PropagatedAccepted, reviewer, timestamp, p.id};
  return propose_from(p.target, p.tissue, timestamp);
}

std::map<std::string, std::size_t> CurationState::tallies() const {
  std::map<std::string, std::size_t> out;
  for (const auto& name : context_->classes.names()) out[name] = 0;
  for (std::size_t c = 0; c < labels_.size(); ++c)
    if (labels_[c]) out[labels_[c]->tissue] += c < context_->sampled.size() ? context_->sampled[c] : 0;
  return out;
}

LabelOutcome CurationState::apply(const Event& e) {
  require(e.seq == last_seq_ + 1, ErrorKind::State,
          "journal sequence gap: expected " + std::to_string(last_seq_ + 1) + ", found " + std::to_string(e.seq));
  LabelOutcome out;
  try {
    const auto& p = e.payload;
    if (e.type == "label") {
      out = assign_cluster_label(p.at("cluster").get<int>(), p.at("class").get<std::string>(),
                           p.at("reviewer").get<std::string>(), p.value("override", false), e.timestamp);
    } else if (e.type == "resolve") {
      out.created = resolve_proposal(p.at("proposal").get<std::int64_t>(), parse_decision(p.at("decision").get<std::string>()),
                       p.at("reviewer").get<std::string>(), e.timestamp);
    } else {
      throw Error(ErrorKind::State, "unknown journal event type '" + e.type + "'");
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::State, "malformed journal event " + std::to_string(e.seq) + ": " + ex.what());
  }
  last_seq_ = e.seq;
  return out;
}

CurationState replay(std::shared_ptr<const CurationContext> context, const std::vector<Event>& events) {
  CurationState state(std::move(context));
  for (const auto& e : events) state.apply(e);
  return state;
}

nlohmann::json label_payload(int cluster, const std::string& tissue, const std::string& reviewer, bool override_label) {
  return {{"cluster", cluster}, {"class", tissue}, {"reviewer", reviewer}, {"override", override_label}};
}

nlohmann::json resolve_payload(std::int64_t proposal, Decision decision, const std::string& reviewer) {
  return {{"proposal", proposal}, {"decision", std::string(to_string(decision))}, {"reviewer", reviewer}};
}

}  // namespace tilecurate::curation
