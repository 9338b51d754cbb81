#include "mitra/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"
#include "mitra/config.hpp"
#include "mitra/error.hpp"
#include "mitra/fixtures.hpp"
#include "mitra/service.hpp"

namespace mitra {

namespace {

std::atomic<bool> g_shutdown{false};

extern "C" void on_signal(int) { g_shutdown.store(true); }

struct GlobalOptions {
  std::string config_path;
  std::optional<std::size_t> k_retrieve;
  std::optional<std::size_t> k_final;
  bool stub_models = false;
};

ServiceConfig resolve_config(const GlobalOptions& g) {
  std::string path = g.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("MITRA_CONFIG"); env && *env) path = env;
  }
  ServiceConfig config = path.empty() ? config_from_json(nlohmann::json::object(), {}) : load_config(path);
  if (g.k_retrieve) config.k_retrieve = *g.k_retrieve;
  if (g.k_final) {
    config.k_final = *g.k_final;
    config.reranker.k_final = *g.k_final;
  }
  if (g.stub_models) config.force_stub_models();
  config.validate();
  return config;
}

int cmd_gen_fixtures(const std::string& out_dir, std::uint64_t seed, std::size_t analyses,
                     std::ostream& out) {
  FixtureOptions options;
  options.seed = seed;
  options.analyses = analyses;
  const auto fixtures = generate_fixtures(options);
  const auto paths = write_fixtures(fixtures, out_dir);
  std::size_t set1 = 0;
  for (const auto& q : fixtures.gold) set1 += q.set_label == QuerySet::Set1 ? 1 : 0;
  out << "wrote " << fixtures.analyses.size() << " analyses, " << fixtures.documents.size()
      << " documents, " << fixtures.gold.size() << " gold queries (" << set1 << " Set1, "
      << fixtures.gold.size() - set1 << " Set2) to " << out_dir << "\n"
      << "config: " << paths.config.string() << "\n";
  return 0;
}

int cmd_ingest(const ServiceConfig& config, const std::string& file, std::ostream& out) {
  CorpusStore store;
  if (std::filesystem::exists(config.corpus_path)) store = load_corpus(config.corpus_path);
  const auto summary = ingest_file(store, file);
  if (config.corpus_path.has_parent_path()) {
    std::filesystem::create_directories(config.corpus_path.parent_path());
  }
  save_corpus(store, config.corpus_path);
  out << "ingested " << summary.analyses << " analyses, " << summary.documents << " documents ("
      << summary.chunks << " chunks), skipped " << summary.stale << " stale; corpus now has "
      << store.analyses().size() << " analyses and " << store.chunk_count() << " chunks\n";
  return 0;
}

int cmd_build_index(const ServiceConfig& config, std::ostream& out) {
  const auto store = load_corpus(config.corpus_path);
  const auto models = make_models(config, make_transport(config));
  const auto set = build_tiered_indexes(store, *models.embedder);
  save_tiered_indexes(set, config.index_dir);
  std::size_t entries = 0;
  for (const auto& [id, index] : set.fulltext) entries += index.size();
  out << "built abstracts index (" << set.abstracts.size() << " entries) and " << set.fulltext.size()
      << " full-text indexes (" << entries << " entries) in " << config.index_dir.string() << "\n";
  return 0;
}

int cmd_serve(const ServiceConfig& config, const std::string& listen_override,
              const std::string& port_file, std::ostream& out) {
  const auto [host, port] = parse_listen_address(listen_override.empty() ? config.listen : listen_override);
  Service service(config, load_knowledge_base(config), make_models(config, make_transport(config)));
  HttpServer server(service);
  const int bound = server.bind(host, port);
  if (!port_file.empty()) {
    std::ofstream(port_file) << bound << '\n';
  }
  out << "listening on " << host << ":" << bound << std::endl;

  g_shutdown.store(false);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread runner([&] { server.run(); });
  server.wait_until_ready();
  while (!g_shutdown.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  runner.join();
  std::signal(SIGINT, SIG_DFL);
  std::signal(SIGTERM, SIG_DFL);
  out << "shut down\n";
  return 0;
}

int cmd_eval(const ServiceConfig& config, const std::string& gold_file, const std::string& report_path,
             std::ostream& out) {
  auto kb = load_knowledge_base(config);
  const auto models = make_models(config, make_transport(config));
  const RagPipeline pipeline(pipeline_config(config), models);
  const auto gold = load_gold(gold_file);
  EvalOptions options;
  options.bm25_depth = config.k_final;
  const auto report = run_eval(*kb, build_bm25_indexes(kb->corpus, config.bm25), gold, pipeline, options);
  out << report.format_tables();
  std::ofstream json_out(report_path, std::ios::trunc);
  if (!json_out) throw Error(ErrorCode::IoError, "cannot write " + report_path);
  json_out << report.to_json().dump(2) << '\n';
  out << "\nreport written to " << report_path << "\n";
  return 0;
}

int cmd_query(const std::string& server_url, std::string session, const std::string& text, bool accept,
              bool reject, bool do_reset, std::ostream& out, std::ostream& err) {
  const Url url = parse_url(server_url);
  httplib::Client client(url.host, url.port);
  client.set_read_timeout(std::chrono::seconds(300));

  auto post = [&](const std::string& path, const nlohmann::json& body) {
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::TransportUnavailable, "cannot reach " + url.origin());
    auto j = nlohmann::json::parse(res->body);
    if (j.value("kind", "") == "error") {
      throw Error(ErrorCode::UsageError, j.value("error_code", "") + ": " + j.value("message", ""));
    }
    return j;
  };

  if (session == "new") {
    session = post("/v1/sessions", nlohmann::json::object()).at("session_id").get<std::string>();
    out << "session " << session << "\n";
  }
  const std::string base = "/v1/sessions/" + session;
  if (do_reset) out << post(base + "/reset", nlohmann::json::object()).dump(2) << "\n";
  if (accept || reject) out << post(base + "/confirm", {{"accept", accept}}).dump(2) << "\n";
  if (!text.empty()) out << post(base + "/query", {{"text", text}}).dump(2) << "\n";
  if (text.empty() && !accept && !reject && !do_reset && session.empty()) {
    err << "error: nothing to do\n";
    return 2;
  }
  return 0;
}

}  // namespace

void request_cli_shutdown() { g_shutdown.store(true); }

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"mitra: two-tier retrieval-augmented question answering over internal documents", "mitra"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON config file (falls back to $MITRA_CONFIG)");
  app.add_option("--k-retrieve", g.k_retrieve, "first-stage candidates passed to the reranker");
  app.add_option("--k-final", g.k_final, "passages kept after reranking");
  app.add_flag("--stub-models", g.stub_models, "use the deterministic stub embedder, reranker and generator");

  std::string fixtures_dir = "fixtures";
  std::uint64_t fixtures_seed = 7;
  std::size_t fixtures_analyses = 12;
  auto* gen = app.add_subcommand("gen-fixtures", "write a synthetic corpus, synonym table, gold sets and config");
  gen->add_option("--out", fixtures_dir, "output directory")->capture_default_str();
  gen->add_option("--seed", fixtures_seed, "generator seed")->capture_default_str();
  gen->add_option("--analyses", fixtures_analyses, "number of analyses (1-12)")->capture_default_str();

  std::string ingest_path;
  auto* ingest = app.add_subcommand("ingest", "add analyses and documents from a JSON-lines file to the corpus");
  ingest->add_option("corpus-file", ingest_path, "ingestion file")->required();

  auto* build = app.add_subcommand("build-index", "embed the corpus into the abstracts and full-text indexes");

  std::string listen;
  std::string port_file;
  auto* serve = app.add_subcommand("serve", "run the HTTP session service");
  serve->add_option("--listen", listen, "host:port (port 0 picks a free port)");
  serve->add_option("--port-file", port_file, "write the bound port to this file");

  std::string gold_path;
  std::string report_path = "eval_report.json";
  auto* eval = app.add_subcommand("eval", "compare dense retrieval against BM25 on a gold query file");
  eval->add_option("gold-file", gold_path, "gold queries (JSON lines)")->required();
  eval->add_option("--report", report_path, "where to write the JSON report")->capture_default_str();

  std::string server_url = "http://127.0.0.1:8080";
  std::string session_id;
  std::string text;
  bool accept = false;
  bool reject = false;
  bool do_reset = false;
  auto* query = app.add_subcommand("query", "thin client for a running service");
  query->add_option("--server", server_url, "service base URL")->capture_default_str();
  query->add_option("--session", session_id, "session id, or 'new' to create one")->required();
  query->add_option("--text", text, "question to ask");
  query->add_flag("--accept", accept, "accept the proposed analysis");
  query->add_flag("--reject", reject, "reject the proposed analysis");
  query->add_flag("--reset", do_reset, "start over in this session");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::RequiredError& e) {
    if (argc <= 1) {
      err << app.help();
    } else {
      err << "error: " << e.what() << "\n";
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen) return cmd_gen_fixtures(fixtures_dir, fixtures_seed, fixtures_analyses, out);
    if (*query) {
      if (accept && reject) {
        err << "error: --accept and --reject are exclusive\n";
        return 2;
      }
      return cmd_query(server_url, session_id, text, accept, reject, do_reset, out, err);
    }
    const auto config = resolve_config(g);
    if (*ingest) return cmd_ingest(config, ingest_path, out);
    if (*build) return cmd_build_index(config, out);
    if (*serve) return cmd_serve(config, listen, port_file, out);
    if (*eval) return cmd_eval(config, gold_path, report_path, out);
  } catch (const Error& e) {
    err << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace mitra
