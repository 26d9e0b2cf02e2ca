#include "service/review.hpp"

#include <httplib.h>

#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace tilecurate::service {

using nlohmann::json;

std::shared_ptr<const curation::CurationContext> make_context(const cluster::ClusterModel& model,
                                                              const std::vector<cluster::SampledTile>& samples,
                                                              curation::ClassRegistry classes) {
  auto ctx = std::make_shared<curation::CurationContext>();
  ctx->classes = std::move(classes);
  ctx->neighbors = model.neighbors;
  ctx->sampled.assign(model.neighbors.size(), 0);
  for (const auto& s : samples) {
    require(s.cluster >= 0 && static_cast<std::size_t>(s.cluster) < ctx->sampled.size(), ErrorKind::State,
            "sample " + s.tile_id + " references unknown cluster " + std::to_string(s.cluster));
    ++ctx->sampled[static_cast<std::size_t>(s.cluster)];
  }
  return ctx;
}

namespace {

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Contract: return 400;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::Conflict:
    case ErrorKind::State:
    case ErrorKind::Locked: return 409;
    default: return 500;
  }
}

Response json_response(int status, const json& body) { return {status, "application/json", body.dump() + "\n"}; }

Response error_response(const Error& e, json extra = json::object()) {
  extra["error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
  return json_response(http_status(e.kind()), extra);
}

json label_json(const std::optional<curation::ClusterLabel>& label) {
  if (!label) return nullptr;
  json j = {{"class", label->tissue},
            {"source", std::string(curation::to_string(label->source))},
            {"reviewer", label->reviewer},
            {"timestamp", label->timestamp}};
  j["proposal"] = label->proposal ? json(*label->proposal) : json(nullptr);
  return j;
}

json parse_body(const std::string& body) {
  try {
    json j = json::parse(body);
    require(j.is_object(), ErrorKind::Config, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("malformed JSON body: ") + e.what());
  }
}

std::string string_field(const json& j, const char* name, bool required = true) {
  if (!j.contains(name)) {
    require(!required, ErrorKind::Config, std::string("missing field '") + name + "'");
    return "";
  }
  require(j[name].is_string(), ErrorKind::Config, std::string("field '") + name + "' must be a string");
  return j[name].get<std::string>();
}

long long parse_index(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size() && v >= 0) return v;
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorKind::Config, std::string("invalid ") + what + " '" + text + "'");
}

}  // namespace

ReviewService::ReviewService(ReviewData data, const std::filesystem::path& journal_path,
                             std::function<std::string()> clock)
    : data_(std::move(data)), curator_(data_.context, journal_path, std::move(clock)) {
  const int k = static_cast<int>(data_.model.neighbors.size());
  members_.resize(static_cast<std::size_t>(k));
  sampled_.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) members_[static_cast<std::size_t>(c)] = data_.model.members(c);
  for (const auto& s : data_.samples) sampled_[static_cast<std::size_t>(s.cluster)].insert(s.tile_id);
  for (std::size_t i = 0; i < data_.tiles.size(); ++i) tile_index_[data_.tiles[i].tile_id] = i;
}

int ReviewService::parse_cluster(const std::string& text) const {
  const long long c = parse_index(text, "cluster id");
  require(c < static_cast<long long>(members_.size()), ErrorKind::NotFound, "no cluster " + text);
  return static_cast<int>(c);
}

json ReviewService::summary(int cluster, const curation::CurationState& state) const {
  const auto& members = members_[static_cast<std::size_t>(cluster)];
  std::vector<std::size_t> bins;
  json reps = json::array();
  for (auto i : members) {
    const auto b = static_cast<std::size_t>(data_.model.bin[i]);
    if (bins.size() <= b) bins.resize(b + 1, 0);
    if (bins[b]++ == 0) reps.push_back(data_.model.tile_ids[i]);
  }
  return {{"id", cluster},
          {"size", members.size()},
          {"sampled", sampled_[static_cast<std::size_t>(cluster)].size()},
          {"bins", bins},
          {"label", label_json(state.display_label(cluster))},
          {"neighbors", data_.model.neighbors[static_cast<std::size_t>(cluster)]},
          {"representatives", reps}};
}

json ReviewService::proposal_json(const curation::Proposal& p) const {
  return {{"id", p.id},
          {"source", p.source},
          {"target", p.target},
          {"class", p.tissue},
          {"status", std::string(curation::to_string(p.status))},
          {"created_at", p.created_at},
          {"resolved_by", p.resolved_by},
          {"resolved_at", p.resolved_at},
          {"note", p.note}};
}

Response ReviewService::list_clusters(const std::map<std::string, std::string>& query) const {
  try {
    const auto state = curator_.snapshot();
    const auto filter = query.count("filter") ? query.at("filter") : std::string("all");
    require(filter == "all" || filter == "labeled" || filter == "unlabeled", ErrorKind::Config,
            "filter must be all, labeled or unlabeled");
    const std::string tissue = query.count("class") ? query.at("class") : "";
    if (!tissue.empty())
      require(data_.context->classes.contains(tissue), ErrorKind::Config,
              "unknown class '" + tissue + "'; registered classes: " + data_.context->classes.listing());
    json out = json::array();
    for (int c = 0; c < static_cast<int>(members_.size()); ++c) {
      const auto& label = state.active_label(c);
      if (filter == "labeled" && !label) continue;
      if (filter == "unlabeled" && label) continue;
      if (!tissue.empty() && (!label || label->tissue != tissue)) continue;
      out.push_back(summary(c, state));
    }
    return json_response(200, {{"clusters", out}});
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response ReviewService::cluster_tiles(const std::string& cluster, const std::map<std::string, std::string>& query) const {
  try {
    const int c = parse_cluster(cluster);
    const long long page = query.count("page") ? parse_index(query.at("page"), "page") : 0;
    const long long bin = query.count("bin") ? parse_index(query.at("bin"), "bin") : -1;
    std::vector<std::size_t> chosen;
    for (auto i : members_[static_cast<std::size_t>(c)])
      if (bin < 0 || data_.model.bin[i] == bin) chosen.push_back(i);
    json tiles = json::array();
    const std::size_t start = static_cast<std::size_t>(page) * kPageSize;
    for (std::size_t j = start; j < std::min(chosen.size(), start + kPageSize); ++j) {
      const auto i = chosen[j];
      const auto& id = data_.model.tile_ids[i];
      tiles.push_back({{"id", id},
                       {"bin", data_.model.bin[i]},
                       {"normalized_distance", data_.model.normalized[i]},
                       {"sampled", sampled_[static_cast<std::size_t>(c)].count(id) > 0},
                       {"image", "/tiles/" + id + "/image"}});
    }
    json out = {{"cluster", c}, {"page", page}, {"page_size", kPageSize}, {"total", chosen.size()}, {"tiles", tiles}};
    out["bin"] = bin < 0 ? json(nullptr) : json(bin);
    return json_response(200, out);
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response ReviewService::submit_label(const std::string& cluster, const std::string& body) {
  int c = -1;
  try {
    c = parse_cluster(cluster);
    const json req = parse_body(body);
    const std::string tissue = string_field(req, "class");
    const std::string reviewer = string_field(req, "reviewer", false);
    const bool override_label = req.value("override", false);
    const auto outcome = curator_.label(c, tissue, reviewer, override_label);
    const auto state = curator_.snapshot();
    json created = json::array();
    for (auto id : outcome.created) created.push_back(proposal_json(state.proposal(id)));
    return json_response(200, {{"cluster", summary(c, state)}, {"proposals", created}, {"superseded", outcome.superseded}});
  } catch (const Error& e) {
    json extra = json::object();
    if (e.kind() == ErrorKind::Conflict && c >= 0) extra["existing"] = label_json(curator_.snapshot().active_label(c));
    return error_response(e, extra);
  } catch (const json::exception& e) {
    return error_response(Error(ErrorKind::Config, std::string("bad field type: ") + e.what()));
  }
}

Response ReviewService::list_proposals(const std::map<std::string, std::string>& query) const {
  try {
    std::optional<curation::ProposalStatus> status;
    if (query.count("status") && !query.at("status").empty()) {
      status = curation::parse_status(query.at("status"));
      require(status.has_value(), ErrorKind::Config, "status must be pending, accepted or rejected");
    }
    const auto state = curator_.snapshot();
    json out = json::array();
    for (const auto& [id, p] : state.proposals())
      if (!status || p.status == *status) out.push_back(proposal_json(p));
    return json_response(200, {{"proposals", out}});
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response ReviewService::resolve_proposal(const std::string& proposal, const std::string& body) {
  std::int64_t id = -1;
  try {
    id = parse_index(proposal, "proposal id");
    const json req = parse_body(body);
    const auto decision = curation::parse_decision(string_field(req, "decision"));
    const std::string reviewer = string_field(req, "reviewer", false);
    const auto created = curator_.resolve(id, decision, reviewer);
    const auto state = curator_.snapshot();
    json made = json::array();
    for (auto p : created) made.push_back(proposal_json(state.proposal(p)));
    return json_response(200, {{"proposal", proposal_json(state.proposal(id))}, {"created", made}});
  } catch (const Error& e) {
    json extra = json::object();
    if (e.kind() == ErrorKind::Conflict) {
      const auto state = curator_.snapshot();
      if (state.proposals().count(id)) extra["proposal"] = proposal_json(state.proposal(id));
    }
    return error_response(e, extra);
  }
}

json ReviewService::progress_json() const {
  const auto tallies = curator_.snapshot().tallies();
  json classes = json::array();
  for (const auto& name : data_.context->classes.names()) {
    const auto t = tallies.at(name);
    classes.push_back({{"class", name},
                       {"tally", t},
                       {"cap", data_.cap},
                       {"fraction", static_cast<double>(t) / static_cast<double>(data_.cap)}});
  }
  return {{"cap", data_.cap}, {"classes", classes}};
}

Response ReviewService::progress() const { return json_response(200, progress_json()); }

Response ReviewService::scatter() const {
  json points = json::array();
  std::map<std::string, int> cluster_of;
  for (std::size_t i = 0; i < data_.model.tile_ids.size(); ++i) cluster_of[data_.model.tile_ids[i]] = data_.model.assignment[i];
  for (std::size_t r = 0; r < data_.projected.rows; ++r) {
    const auto& id = data_.projected.tile_ids[r];
    const auto it = cluster_of.find(id);
    points.push_back({{"tile_id", id},
                      {"x", data_.projected.row(r)[0]},
                      {"y", data_.projected.row(r)[1]},
                      {"cluster", it == cluster_of.end() ? json(nullptr) : json(it->second)}});
  }
  return json_response(200, {{"points", points}});
}

Response ReviewService::tile_image(const std::string& tile_id) const {
  const auto it = tile_index_.find(tile_id);
  if (it == tile_index_.end()) return error_response(Error(ErrorKind::NotFound, "no tile " + tile_id));
  const auto path = data_.root / data_.tiles[it->second].path;
  std::ifstream in(path, std::ios::binary);
  if (!in) return error_response(Error(ErrorKind::Io, "tile image missing: " + path.string()));
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return {200, "image/png", bytes.str()};
}

struct ReviewServer::Impl {
  explicit Impl(ReviewService& svc) : service(svc) {}
  ReviewService& service;
  httplib::Server server;
};

namespace {

std::map<std::string, std::string> query_of(const httplib::Request& req) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : req.params) out[k] = v;
  return out;
}

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

}  // namespace

ReviewServer::ReviewServer(ReviewService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& s = impl_->server;
  auto& svc = impl_->service;
  s.Get("/clusters", [&svc](const auto& req, auto& res) { send(res, svc.list_clusters(query_of(req))); });
  s.Get(R"(/clusters/([^/]+)/tiles)",
        [&svc](const auto& req, auto& res) { send(res, svc.cluster_tiles(req.matches[1], query_of(req))); });
  s.Post(R"(/clusters/([^/]+)/label)",
         [&svc](const auto& req, auto& res) { send(res, svc.submit_label(req.matches[1], req.body)); });
  s.Get("/proposals", [&svc](const auto& req, auto& res) { send(res, svc.list_proposals(query_of(req))); });
  s.Post(R"(/proposals/([^/]+)/resolve)",
         [&svc](const auto& req, auto& res) { send(res, svc.resolve_proposal(req.matches[1], req.body)); });
  s.Get("/progress", [&svc](const auto&, auto& res) { send(res, svc.progress()); });
  s.Get("/scatter", [&svc](const auto&, auto& res) { send(res, svc.scatter()); });
  s.Get(R"(/tiles/([^/]+)/image)", [&svc](const auto& req, auto& res) { send(res, svc.tile_image(req.matches[1])); });
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    require(bound > 0, ErrorKind::Io, "cannot bind " + host);
    return bound;
  }
  require(impl_->server.bind_to_port(host, port), ErrorKind::Io,
          "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ReviewServer::listen() { impl_->server.listen_after_bind(); }

void ReviewServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace tilecurate::service
