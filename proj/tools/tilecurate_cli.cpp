// Command-line front end; talks to the library only through the C API.
#include <pthread.h>
#include <signal.h>

#include <CLI11.hpp>
#include <cstdio>
#include <cstring>
#include <optional>
#include <string>
#include <thread>

#include "tilecurate/tilecurate.h"

namespace {

const char* const kStages[] = {"extract", "train-ae",      "embed",      "reduce",   "cluster",
                               "sample",  "assemble",      "export-qupath", "render-map", "eval-seg"};

int exit_code(tc_status st) {
  switch (st) {
    case TC_OK: return 0;
    case TC_ERR_CONFIG:
    case TC_ERR_INVALID_ARGUMENT: return 2;
    case TC_ERR_MISSING_STAGE: return 3;
    case TC_ERR_LOCKED: return 4;
    default: return 1;
  }
}

int fail(tc_status st) {
  std::fprintf(stderr, "tilecurate: %s: %s\n", tc_status_string(st), tc_last_error());
  return exit_code(st);
}

void print_progress(const char* stage, size_t done, size_t total, void*) {
  std::fprintf(stderr, "stage=%s done=%zu total=%zu\n", stage, done, total);
}

struct Project {
  tc_project* handle = nullptr;
  ~Project() { tc_project_close(handle); }
};

// Prints a JSON response body; error bodies go to stderr.
int finish_json(tc_status st, char* body) {
  if (body) {
    const std::size_t len = std::strlen(body);
    std::fprintf(st == TC_OK ? stdout : stderr, len && body[len - 1] == '\n' ? "%s" : "%s\n", body);
    tc_string_free(body);
  }
  return st == TC_OK ? 0 : fail(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-automated histopathology tile curation"};
  app.require_subcommand(1);
  std::string project_dir = ".";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  app.add_option("--project", project_dir, "Project directory")->capture_default_str();
  app.add_option("--config", config_path, "Config file (default: <project>/tilecurate.conf)");
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--workers", workers, "Override the worker count")->check(CLI::PositiveNumber);

  for (const char* name : kStages) app.add_subcommand(name, std::string("Run the ") + name + " stage");

  auto* serve = app.add_subcommand("serve", "Serve the review API");
  std::optional<std::string> host;
  std::optional<int> port;
  serve->add_option("--host", host, "Listen address (default from config)");
  serve->add_option("--port", port, "Listen port (default from config)")->check(CLI::Range(0, 65535));

  auto* label = app.add_subcommand("label", "Label a cluster");
  int cluster = 0;
  std::string tissue, reviewer = "cli";
  bool override_label = false;
  label->add_option("cluster", cluster, "Cluster id")->required();
  label->add_option("class", tissue, "Tissue class")->required();
  label->add_option("--reviewer", reviewer)->capture_default_str();
  label->add_flag("--override", override_label, "Replace an existing human label");

  auto* resolve = app.add_subcommand("resolve", "Accept or reject a propagation proposal");
  std::int64_t proposal = 0;
  std::string decision;
  resolve->add_option("proposal", proposal, "Proposal id")->required();
  resolve->add_option("decision", decision, "accept or reject")->required()->check(CLI::IsMember({"accept", "reject"}));
  resolve->add_option("--reviewer", reviewer)->capture_default_str();

  auto* progress = app.add_subcommand("progress", "Print per-class label tallies as JSON");

  CLI11_PARSE(app, argc, argv);

  // Signals are handled by a dedicated thread so the server can be stopped cleanly.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  if (serve->parsed()) pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Project p;
  tc_status st = tc_project_open(project_dir.c_str(), config_path.empty() ? nullptr : config_path.c_str(), &p.handle);
  if (st != TC_OK) return fail(st);
  if (seed && (st = tc_project_set_seed(p.handle, *seed)) != TC_OK) return fail(st);
  if (workers && (st = tc_project_set_workers(p.handle, *workers)) != TC_OK) return fail(st);

  if (serve->parsed()) {
    std::thread([&] {
      int sig = 0;
      sigwait(&signals, &sig);
      tc_serve_stop(p.handle);
    }).detach();
    st = tc_serve(p.handle, host ? host->c_str() : nullptr, port.value_or(-1),
                  [](int bound, void*) {
                    std::printf("listening on port %d\n", bound);
                    std::fflush(stdout);
                  },
                  nullptr);
    return st == TC_OK ? 0 : fail(st);
  }
  if (label->parsed()) {
    char* body = nullptr;
    st = tc_label(p.handle, cluster, tissue.c_str(), reviewer.c_str(), override_label ? 1 : 0, &body);
    return finish_json(st, body);
  }
  if (resolve->parsed()) {
    char* body = nullptr;
    st = tc_resolve(p.handle, proposal, decision.c_str(), reviewer.c_str(), &body);
    return finish_json(st, body);
  }
  if (progress->parsed()) {
    char* body = nullptr;
    st = tc_progress_json(p.handle, &body);
    return finish_json(st, body);
  }
  for (const char* name : kStages) {
    if (!app.got_subcommand(name)) continue;
    int ran = 0;
    st = tc_run_stage(p.handle, name, print_progress, nullptr, &ran);
    if (st != TC_OK) return fail(st);
    std::printf("%s: %s\n", name, ran ? "done" : "up to date");
    return 0;
  }
  return 1;
}
