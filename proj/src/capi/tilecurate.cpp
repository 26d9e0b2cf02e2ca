#define TILECURATE_BUILDING
#include "tilecurate/tilecurate.h"

#include <atomic>
#include <cstring>
#include <json.hpp>
#include <mutex>
#include <string>

#include "common/error.hpp"
#include "pipeline/project.hpp"

using namespace tilecurate;

struct tc_project {
  pipeline::Project project;
  std::mutex serve_mutex;
  service::ReviewServer* server = nullptr;
  bool stop_requested = false;
};

namespace {

thread_local std::string last_error;

tc_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return TC_ERR_CONFIG;
    case ErrorKind::MissingStage: return TC_ERR_MISSING_STAGE;
    case ErrorKind::Locked: return TC_ERR_LOCKED;
    case ErrorKind::Contract: return TC_ERR_INVALID_ARGUMENT;
    case ErrorKind::Conflict: return TC_ERR_CONFLICT;
    case ErrorKind::NotFound: return TC_ERR_NOT_FOUND;
    default: return TC_ERROR;
  }
}

template <typename F>
tc_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return TC_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    last_error = e.what();
    return TC_ERROR;
  } catch (...) {
    last_error = "unknown error";
    return TC_ERROR;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require_arg(const void* p, const char* what) {
  require(p != nullptr, ErrorKind::Contract, std::string(what) + " must not be NULL");
}

tc_status from_response(const service::Response& r, char** response) {
  if (response) *response = dup_string(r.body);
  if (r.status < 400) return TC_OK;
  try {
    last_error = nlohmann::json::parse(r.body).at("error").at("message").get<std::string>();
  } catch (...) {
    last_error = r.body;
  }
  switch (r.status) {
    case 400: return TC_ERR_INVALID_ARGUMENT;
    case 404: return TC_ERR_NOT_FOUND;
    case 409: return TC_ERR_CONFLICT;
    default: return TC_ERROR;
  }
}

pipeline::Stage stage_arg(const char* name) {
  require_arg(name, "stage");
  const auto stage = pipeline::parse_stage(name);
  require(stage.has_value(), ErrorKind::Contract, std::string("unknown stage '") + name + "'");
  return *stage;
}

}  // namespace

extern "C" {

const char* tc_version(void) { return "0.1.0"; }

const char* tc_status_string(tc_status status) {
  switch (status) {
    case TC_OK: return "ok";
    case TC_ERROR: return "error";
    case TC_ERR_CONFIG: return "configuration error";
    case TC_ERR_MISSING_STAGE: return "missing upstream stage";
    case TC_ERR_LOCKED: return "project locked";
    case TC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case TC_ERR_CONFLICT: return "conflict";
    case TC_ERR_NOT_FOUND: return "not found";
  }
  return "unknown status";
}

const char* tc_last_error(void) { return last_error.c_str(); }

tc_status tc_project_open(const char* root, const char* config_path, tc_project** out) {
  return guarded([&] {
    require_arg(root, "root");
    require_arg(out, "out");
    *out = nullptr;
    auto project = pipeline::Project::open(root, config_path ? config_path : "");
    *out = new tc_project{std::move(project), {}, nullptr, false};
  });
}

void tc_project_close(tc_project* project) { delete project; }

tc_status tc_project_set_seed(tc_project* project, uint64_t seed) {
  return guarded([&] {
    require_arg(project, "project");
    project->project.config().set_seed(seed);
  });
}

tc_status tc_project_set_workers(tc_project* project, int workers) {
  return guarded([&] {
    require_arg(project, "project");
    project->project.config().set_workers(workers);
  });
}

tc_status tc_run_stage(tc_project* project, const char* stage, tc_progress_fn progress, void* user, int* ran) {
  return guarded([&] {
    require_arg(project, "project");
    const auto s = stage_arg(stage);
    pipeline::StageProgress report;
    if (progress)
      report = [&](std::string_view name, std::size_t done, std::size_t total) {
        const std::string n(name);
        progress(n.c_str(), done, total, user);
      };
    const auto result = project->project.run(s, report);
    if (ran) *ran = result == pipeline::RunResult::Ran ? 1 : 0;
  });
}

int tc_stage_current(tc_project* project, const char* stage) {
  int current = 0;
  guarded([&] {
    require_arg(project, "project");
    current = project->project.is_current(stage_arg(stage)) ? 1 : 0;
  });
  return current;
}

tc_status tc_label(tc_project* project, int cluster, const char* tissue_class, const char* reviewer,
                   int override_label, char** response) {
  service::Response r;
  const tc_status st = guarded([&] {
    require_arg(project, "project");
    require_arg(tissue_class, "tissue_class");
    require_arg(reviewer, "reviewer");
    r = project->project.label(cluster, tissue_class, reviewer, override_label != 0);
  });
  return st == TC_OK ? from_response(r, response) : st;
}

tc_status tc_resolve(tc_project* project, int64_t proposal, const char* decision, const char* reviewer,
                     char** response) {
  service::Response r;
  const tc_status st = guarded([&] {
    require_arg(project, "project");
    require_arg(decision, "decision");
    require_arg(reviewer, "reviewer");
    r = project->project.resolve(proposal, decision, reviewer);
  });
  return st == TC_OK ? from_response(r, response) : st;
}

tc_status tc_progress_json(tc_project* project, char** response) {
  service::Response r;
  const tc_status st = guarded([&] {
    require_arg(project, "project");
    r = project->project.progress();
  });
  return st == TC_OK ? from_response(r, response) : st;
}

tc_status tc_serve(tc_project* project, const char* host, int port, tc_ready_fn ready, void* user) {
  return guarded([&] {
    require_arg(project, "project");
    const auto& cfg = project->project.config();
    const std::string bind_host = host ? host : cfg.host;
    const int bind_port = port < 0 ? cfg.port : port;
    {
      std::lock_guard lock(project->serve_mutex);
      project->stop_requested = false;
    }
    service::ReviewServer* handle = nullptr;
    project->project.serve(
        bind_host, bind_port,
        [&](int bound) {
          bool stop_now;
          {
            std::lock_guard lock(project->serve_mutex);
            project->server = handle;
            stop_now = project->stop_requested;
          }
          if (ready) ready(bound, user);
          if (stop_now) handle->stop();
        },
        &handle);
    std::lock_guard lock(project->serve_mutex);
    project->server = nullptr;
  });
}

void tc_serve_stop(tc_project* project) {
  if (!project) return;
  std::lock_guard lock(project->serve_mutex);
  project->stop_requested = true;
  if (project->server) project->server->stop();
}

void tc_string_free(char* s) { std::free(s); }

}  // extern "C"
