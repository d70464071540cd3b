#include <httplib.h>

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "storyloop/config.hpp"
#include "storyloop/error.hpp"
#include "storyloop/eval.hpp"
#include "storyloop/fsutil.hpp"
#include "storyloop/llm_gateway.hpp"
#include "storyloop/memory_pool.hpp"
#include "storyloop/prompts.hpp"
#include "storyloop/prototype_design.hpp"
#include "storyloop/session.hpp"
#include "storyloop/session_http.hpp"

namespace fs = std::filesystem;
using namespace storyloop;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

struct ProviderStack {
  std::unique_ptr<llm::Provider> base;
  std::unique_ptr<llm::Provider> top;
  llm::Provider& get() { return top ? *top : *base; }
};

ProviderStack make_provider(const std::string& kind, const config::ServiceConfig& cfg) {
  ProviderStack stack;
  if (kind == "replay") {
    stack.base = std::make_unique<llm::ReplayProvider>(cfg.fixture_dir);
    return stack;
  }
  auto opts = cfg.provider;
  if (const char* key = std::getenv(cfg.api_key_env.c_str())) opts.api_key = key;
  if (opts.api_key.empty()) std::cerr << "warning: " << cfg.api_key_env << " is not set\n";
  stack.base = std::make_unique<llm::HttpProvider>(opts);
  if (kind == "record") {
    fs::create_directories(cfg.fixture_dir);
    stack.top = std::make_unique<llm::RecordingProvider>(*stack.base, cfg.fixture_dir);
  }
  return stack;
}

config::ServiceConfig load(const std::string& path) {
  return path.empty() ? config::default_config() : config::load_config(path);
}

std::vector<int> parse_ks(const std::string& s) {
  std::vector<int> ks;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      ks.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw Error(Errc::InvalidArgument, "bad k value '" + part + "'");
    }
    if (ks.back() < 1) throw Error(Errc::InvalidArgument, "k values must be >= 1");
  }
  if (ks.empty()) throw Error(Errc::InvalidArgument, "no k values");
  return ks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive scenario-driven web prototype generator"};
  app.require_subcommand(1);

  std::string config_path, workspace, provider_kind = "live", fixtures, host = "127.0.0.1", ui_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the session HTTP API");
  serve->add_option("--config", config_path, "JSON config file");
  serve->add_option("--workspace", workspace, "Workspace root (overrides the config)");
  serve->add_option("--provider", provider_kind, "live | replay | record")
      ->check(CLI::IsMember({"live", "replay", "record"}));
  serve->add_option("--fixtures", fixtures, "Fixture directory for replay/record");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--ui-dir", ui_dir, "Static client assets served at /");

  std::string tasks_path, out_path = "report.csv", run_dir = "runs", ks_text = "1", test_cmd;
  int samples = 1, jobs = 1;
  auto* eval = app.add_subcommand("eval", "Batch evaluation with all scenarios confirmed");
  eval->add_option("--config", config_path, "JSON config file");
  eval->add_option("--tasks", tasks_path, "CSV with id,name,description")->required();
  eval->add_option("--provider", provider_kind, "live | replay | record")
      ->check(CLI::IsMember({"live", "replay", "record"}));
  eval->add_option("--fixtures", fixtures, "Fixture directory for replay/record");
  eval->add_option("--samples", samples, "Samples per task (n)");
  eval->add_option("--k", ks_text, "Comma-separated k values");
  eval->add_option("--jobs", jobs, "Concurrent samples");
  eval->add_option("--out", out_path, "Report CSV");
  eval->add_option("--run-dir", run_dir, "Artifact directory");
  eval->add_option("--test-cmd-template", test_cmd, "Shell command; {dir} is the generated project");

  std::string store;
  auto* dump = app.add_subcommand("pool-dump", "Print the memory pool as CSV");
  dump->add_option("--workspace", workspace, "Workspace root");
  dump->add_option("--store", store, "Store file (default <workspace>/memory_pool.store)");

  std::string in_path, out_dir;
  auto* extract = app.add_subcommand("extract", "Split a saved completion into the three project files");
  extract->add_option("--in", in_path, "Completion text")->required();
  extract->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      auto cfg = load(config_path);
      if (!workspace.empty()) cfg.workspace = workspace;
      if (!fixtures.empty()) cfg.fixture_dir = fixtures;
      auto provider = make_provider(provider_kind, cfg);
      const auto prompts = prompts::PromptTemplates::load(cfg.prompt_dir);
      fs::create_directories(cfg.workspace);
      memory::MemoryPool pool(cfg.workspace / "memory_pool.store");
      llm::GatewayOptions gopts;
      gopts.max_in_flight = cfg.max_in_flight;
      llm::Gateway gateway(provider.get(), cfg.prices, SystemClock::instance(), gopts);
      session::ServiceOptions so;
      so.workspace = cfg.workspace;
      so.generation = cfg.generation;
      so.similarity_threshold = cfg.similarity_threshold;
      so.max_scenarios = cfg.max_scenarios;
      so.max_repairs = cfg.max_repairs;
      so.phase_estimates_s = cfg.phase_estimates_s;
      session::SessionService svc(so, gateway, prompts, pool);

      httplib::Server server;
      session::ApiOptions api;
      if (!ui_dir.empty()) api.static_dir = ui_dir;
      session::register_routes(server, svc, api);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << host << ":" << port << " (provider " << provider.get().name()
                << ", workspace " << cfg.workspace.string() << ")\n";
      if (!server.listen(host, port)) {
        std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
        return 1;
      }
      return 0;
    }

    if (*eval) {
      auto cfg = load(config_path);
      if (!fixtures.empty()) cfg.fixture_dir = fixtures;
      const auto ks = parse_ks(ks_text);
      const auto tasks = eval::load_tasks(tasks_path);
      auto provider = make_provider(provider_kind, cfg);
      const auto prompts = prompts::PromptTemplates::load(cfg.prompt_dir);
      eval::BatchEnv env{provider.get(), cfg.prices, cfg.generation, prompts};
      env.similarity_threshold = cfg.similarity_threshold;
      env.max_scenarios = cfg.max_scenarios;
      env.max_repairs = cfg.max_repairs;
      env.simulated_clock = provider_kind == "replay";
      eval::BatchOptions opts;
      opts.samples = samples;
      opts.jobs = jobs;
      opts.run_dir = run_dir;
      if (!test_cmd.empty()) opts.test_cmd_template = test_cmd;
      const auto records = eval::run_batch(tasks, env, opts);
      std::ostringstream report;
      eval::write_report(report, records, ks, env.tokenizer_name);
      fsutil::write_file_atomic(out_path, report.str());
      for (const auto& r : records) {
        std::cerr << r.task.id << ": " << r.n - r.failed_samples() << "/" << r.n << " samples completed";
        if (r.c) std::cerr << ", " << *r.c << " passed";
        std::cerr << "\n";
        for (const auto& s : r.samples)
          if (!s.ok) std::cerr << "  sample " << s.sample << ": " << s.error << "\n";
      }
      std::cerr << "report written to " << out_path << "\n";
      return 0;
    }

    if (*dump) {
      fs::path path = store.empty() ? fs::path(workspace.empty() ? "workspace" : workspace) / "memory_pool.store"
                                    : fs::path(store);
      memory::MemoryPool pool(path);
      pool.write_csv(std::cout);
      return 0;
    }

    if (*extract) {
      const auto files = prototype::extract_files(fsutil::read_file(in_path));
      fs::create_directories(out_dir);
      for (auto name : prototype::ProjectFiles::kNames) fsutil::write_file_atomic(fs::path(out_dir) / name, files[name]);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
