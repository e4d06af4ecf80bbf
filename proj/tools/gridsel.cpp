// Copyright 2026 The gridsel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// gridsel: storage node daemon, catalog and history maintenance, replica
// selection and scenario runs.

#include <csignal>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gridsel/broker.hpp"
#include "gridsel/catalog.hpp"
#include "gridsel/history.hpp"
#include "gridsel/infosvc.hpp"
#include "gridsel/schema.hpp"
#include "gridsel/sim.hpp"
#include "gridsel/text.hpp"

namespace {

using namespace gridsel;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::chrono::milliseconds seconds(double s) {
  if (!(s > 0)) throw std::invalid_argument("timeout must be positive");
  return std::chrono::milliseconds(std::llround(s * 1000));
}

// ---------------------------------------------------------------------------

struct ServeArgs {
  std::string config;
  std::string listen;
  std::size_t workers = 8;
};

int serve(const ServeArgs& a) {
  auto cfg = infosvc::load_config(a.config);
  if (!a.listen.empty()) {
    const auto ep = catalog::Endpoint::parse(a.listen);
    cfg.listen_host = ep.host;
    cfg.listen_port = ep.port;
  }
  const std::string host = cfg.listen_host;
  const std::uint16_t port = cfg.listen_port;

  // Workers inherit the mask, so only sigwait sees these.
  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

  infosvc::InfoService service(std::move(cfg));
  infosvc::ServerOptions opts;
  opts.workers = a.workers;
  infosvc::Server server(service, opts);
  server.start(host, port);
  std::cout << "serving " << service.config().hostname << " on " << host << ":" << server.port()
            << std::endl;
  int sig = 0;
  sigwait(&sigs, &sig);
  server.stop();
  std::cout << "stopped after " << service.queries_served() << " queries" << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------

struct QueryArgs {
  std::string endpoint;
  std::vector<std::string> attributes;
  std::string from;
  double timeout = 2;
};

int query(const QueryArgs& a) {
  const auto ep = catalog::Endpoint::parse(a.endpoint);
  infosvc::QueryRequest q;
  q.attributes = a.attributes;
  q.all = q.attributes.empty() || (q.attributes.size() == 1 && q.attributes[0] == "*");
  if (q.all) q.attributes.clear();
  q.from = a.from;
  const std::string reply =
      net::exchange(ep.host, ep.port, infosvc::format_request(q), seconds(a.timeout));
  std::cout << infosvc::response_body(reply);
  return 0;
}

// ---------------------------------------------------------------------------

struct CatalogArgs {
  std::string file;
  std::string logical;
  std::string hostname;
  std::string infoservice;
  std::string path;
  std::string protocol;
};

int catalog_add(const CatalogArgs& a) {
  catalog::Catalog c{std::filesystem::path(a.file)};
  const catalog::ReplicaLocation loc{a.hostname, catalog::Endpoint::parse(a.infoservice), a.path,
                                     a.protocol};
  if (!c.add(a.logical, loc)) {
    std::cerr << "already registered: " << a.logical << " on " << a.hostname << ":" << a.path
              << "\n";
    return 1;
  }
  return 0;
}

int catalog_rm(const CatalogArgs& a) {
  catalog::Catalog c{std::filesystem::path(a.file)};
  if (!c.remove(a.logical, {a.hostname, {}, a.path, ""})) {
    std::cerr << "not registered: " << a.logical << " on " << a.hostname << ":" << a.path << "\n";
    return 1;
  }
  return 0;
}

int catalog_ls(const CatalogArgs& a) {
  const catalog::Catalog c{std::filesystem::path(a.file)};
  const auto names = a.logical.empty() ? c.logical_names() : std::vector<std::string>{a.logical};
  for (const auto& name : names) {
    for (const auto& loc : c.lookup(name)) {
      std::cout << name << "\t" << loc.hostname << "\t" << loc.infoservice.str() << "\t"
                << loc.path << "\t" << loc.protocol << "\n";
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct HistoryArgs {
  std::string log;
  std::string direction;
  std::string peer;
  double bytes = 0;
  double duration = 1;
  double timestamp = -1;
  std::int64_t load = 0;
};

int history_record(const HistoryArgs& a) {
  const auto dir = history::parse_direction(a.direction);
  if (!dir) throw std::invalid_argument("direction must be read or write");
  const double ts = a.timestamp >= 0 ? a.timestamp : static_cast<double>(std::time(nullptr));
  const history::TransferSample s{*dir, a.peer, a.bytes, a.duration, ts};
  if (auto why = history::check(s)) throw std::invalid_argument(*why);
  history::append_sample(a.log, s);
  return 0;
}

void print_summary(std::string_view label, const history::BandwidthSummary& s) {
  std::cout << label << ": " << s.count << " transfers";
  if (s.count > 0) {
    std::cout << ", max " << format_shortest(*s.max) << ", min " << format_shortest(*s.min)
              << ", avg " << format_shortest(*s.mean) << ", stddev "
              << format_shortest(*s.stddev) << " B/s";
  }
  std::cout << "\n";
}

int history_show(const HistoryArgs& a) {
  history::HistoryStore store;
  store.load_file(a.log);
  using history::Direction;
  if (a.peer.empty()) {
    print_summary("read", store.summarize(Direction::kRead));
    print_summary("write", store.summarize(Direction::kWrite));
    for (const auto& p : store.peers()) {
      std::cout << p;
      for (Direction d : {Direction::kRead, Direction::kWrite}) {
        if (auto last = store.last(p, d)) {
          std::cout << "\tlast " << history::to_string(d) << " " << format_shortest(last->bandwidth)
                    << " B/s (" << last->url << ")";
        }
      }
      std::cout << "\n";
    }
    return 0;
  }
  print_summary("read", store.summarize(a.peer, Direction::kRead));
  print_summary("write", store.summarize(a.peer, Direction::kWrite));
  for (Direction d : {Direction::kRead, Direction::kWrite}) {
    const auto p = store.predict(a.peer, d, a.load);
    std::cout << "predicted " << history::to_string(d) << " at load " << a.load << ": "
              << (p ? format_shortest(*p) + " B/s" : std::string("undefined")) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SelectArgs {
  std::string logical;
  std::string ad;
  std::string catalog;
  bool json = false;
  bool no_failover = false;
  bool no_transfer = false;
  double timeout = 2;
  std::size_t fan_out = 16;
};

int select(const SelectArgs& a) {
  const auto request = broker::make_request(a.logical, read_file(a.ad), seconds(a.timeout));
  const catalog::Catalog cat{std::filesystem::path(a.catalog)};
  broker::WireTransport wire;
  broker::Broker b(cat, wire, {a.fan_out, !a.no_failover});
  broker::SimulatedTransfer agent;
  const auto s = b.select(request, a.no_transfer ? nullptr : &agent);
  if (a.json) {
    std::cout << broker::to_json(s) << "\n";
  } else {
    const auto& r = s.result;
    for (const auto& e : r.ranked) {
      const auto& loc = r.candidates[e.candidate].location;
      std::cout << "match\t" << loc.hostname << "\t" << loc.path << "\trank "
                << format_shortest(e.rank) << "\n";
    }
    for (const auto& x : r.excluded) {
      std::cout << "excluded\t" << r.candidates[x.candidate].location.hostname << "\t" << x.reason
                << "\n";
    }
    if (const auto c = r.chosen()) {
      std::cout << "chosen\t" << c->hostname << "\t" << c->path << "\n";
    } else {
      std::cout << "no matching replica\n";
    }
    if (s.transfer) {
      std::cout << "transfer (simulated)\t" << s.transfer->replica.hostname << "\t"
                << format_shortest(s.transfer->result.bytes) << " bytes\t"
                << format_shortest(s.transfer->result.seconds) << " s\n";
    } else if (!s.transfer_error.empty() && s.result.chosen()) {
      std::cout << "transfer failed: " << s.transfer_error << "\n";
    }
  }
  return s.result.chosen() ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct SimArgs {
  std::string scenario;
  bool wire = false;
  bool dump = false;
  std::int64_t seed = -1;
  std::size_t nodes = 10;
  std::size_t requests = 100;
  std::size_t files = 5;
  double failure_rate = 0.1;
  double timeout = 2;
};

int simulate(const SimArgs& a) {
  sim::Scenario s;
  if (a.seed >= 0) {
    sim::RandomOptions o;
    o.nodes = a.nodes;
    o.requests = a.requests;
    o.files = a.files;
    o.failure_rate = a.failure_rate;
    o.timeout = seconds(a.timeout);
    s = sim::random_scenario(static_cast<std::uint64_t>(a.seed), o);
  } else if (!a.scenario.empty()) {
    s = sim::load_scenario(a.scenario);
  } else {
    s = sim::reference_scenario();
  }
  if (a.dump) {
    std::cout << sim::format_scenario(s);
    return 0;
  }
  sim::RunOptions o;
  o.wire = a.wire;
  const auto report = sim::run(s, o);
  std::cout << sim::format_report(report);
  return report.ok() ? 0 : 1;
}

// ---------------------------------------------------------------------------

int check_ldif(const std::string& path) {
  const auto sets = schema::record_sets_from_ldif(read_file(path));
  int bad = 0;
  for (const auto& s : sets) {
    const auto v = schema::validate(s);
    std::cout << s.dn.str() << ": " << (v.empty() ? "ok" : "invalid") << "\n";
    for (const auto& x : v) std::cout << "  " << x.attribute << ": " << x.reason << "\n";
    bad += v.empty() ? 0 : 1;
  }
  return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replica selection for data grids"};
  app.require_subcommand(1);
  int rc = 0;

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run a storage node information service");
  serve_cmd->add_option("--config", serve_args.config, "Node config file")->required();
  serve_cmd->add_option("--listen", serve_args.listen, "host:port, overrides the config");
  serve_cmd->add_option("--workers", serve_args.workers, "Worker threads")->check(CLI::PositiveNumber);
  serve_cmd->callback([&] { rc = serve(serve_args); });

  QueryArgs query_args;
  auto* query_cmd = app.add_subcommand("query", "Ask an information service for attributes");
  query_cmd->add_option("endpoint", query_args.endpoint, "host:port")->required();
  query_cmd->add_option("attributes", query_args.attributes, "Attribute names; none means all");
  query_cmd->add_option("--from", query_args.from, "Requester hostname");
  query_cmd->add_option("--timeout", query_args.timeout, "Seconds");
  query_cmd->callback([&] { rc = query(query_args); });

  CatalogArgs cat_args;
  auto* cat_cmd = app.add_subcommand("catalog", "Maintain a replica catalog file");
  cat_cmd->require_subcommand(1);
  cat_cmd->add_option("--file", cat_args.file, "Catalog file")->required();
  auto* cat_add = cat_cmd->add_subcommand("add", "Register a replica");
  cat_add->add_option("logical", cat_args.logical)->required();
  cat_add->add_option("hostname", cat_args.hostname)->required();
  cat_add->add_option("infoservice", cat_args.infoservice, "host:port")->required();
  cat_add->add_option("path", cat_args.path)->required();
  cat_add->add_option("--protocol", cat_args.protocol, "Access protocol tag");
  cat_add->callback([&] { rc = catalog_add(cat_args); });
  auto* cat_rm = cat_cmd->add_subcommand("rm", "Unregister a replica");
  cat_rm->add_option("logical", cat_args.logical)->required();
  cat_rm->add_option("hostname", cat_args.hostname)->required();
  cat_rm->add_option("path", cat_args.path)->required();
  cat_rm->callback([&] { rc = catalog_rm(cat_args); });
  auto* cat_ls = cat_cmd->add_subcommand("ls", "List replicas");
  cat_ls->add_option("logical", cat_args.logical, "Only this logical file");
  cat_ls->callback([&] { rc = catalog_ls(cat_args); });

  HistoryArgs hist_args;
  auto* hist_cmd = app.add_subcommand("history", "Transfer history logs");
  hist_cmd->require_subcommand(1);
  hist_cmd->add_option("--log", hist_args.log, "History log file")->required();
  auto* hist_rec = hist_cmd->add_subcommand("record", "Append one transfer");
  hist_rec->add_option("direction", hist_args.direction, "read or write")->required();
  hist_rec->add_option("peer", hist_args.peer, "Peer URL or hostname")->required();
  hist_rec->add_option("bytes", hist_args.bytes)->required();
  hist_rec->add_option("duration", hist_args.duration, "Seconds")->required();
  hist_rec->add_option("--time", hist_args.timestamp, "Unix time, default now");
  hist_rec->callback([&] { rc = history_record(hist_args); });
  auto* hist_show = hist_cmd->add_subcommand("show", "Summaries and predictions");
  hist_show->add_option("--peer", hist_args.peer, "Restrict to one peer");
  hist_show->add_option("--load", hist_args.load, "Concurrent transfers for prediction");
  hist_show->callback([&] { rc = history_show(hist_args); });

  SelectArgs sel_args;
  auto* sel_cmd = app.add_subcommand("select", "Choose a replica for a logical file");
  sel_cmd->add_option("logical", sel_args.logical)->required();
  sel_cmd->add_option("--ad", sel_args.ad, "Request ClassAd file")->required();
  sel_cmd->add_option("--catalog", sel_args.catalog, "Catalog file")->required();
  sel_cmd->add_flag("--json", sel_args.json, "Full selection as JSON");
  sel_cmd->add_flag("--no-failover", sel_args.no_failover, "Try only the best replica");
  sel_cmd->add_flag("--no-transfer", sel_args.no_transfer, "Stop after ranking");
  sel_cmd->add_option("--timeout", sel_args.timeout, "Seconds per node query");
  sel_cmd->add_option("--fan-out", sel_args.fan_out, "Concurrent node queries")
      ->check(CLI::PositiveNumber);
  sel_cmd->callback([&] { rc = select(sel_args); });

  SimArgs sim_args;
  auto* sim_cmd = app.add_subcommand("sim", "Run a scenario and check it against the oracle");
  sim_cmd->add_option("--scenario", sim_args.scenario, "Scenario file");
  sim_cmd->add_flag("--wire", sim_args.wire, "Serve nodes over localhost TCP");
  sim_cmd->add_flag("--dump", sim_args.dump, "Print the scenario instead of running it");
  sim_cmd->add_option("--random", sim_args.seed, "Generate a scenario from this seed")
      ->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--nodes", sim_args.nodes);
  sim_cmd->add_option("--requests", sim_args.requests);
  sim_cmd->add_option("--files", sim_args.files);
  sim_cmd->add_option("--failure-rate", sim_args.failure_rate)->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--timeout", sim_args.timeout, "Seconds per node query");
  sim_cmd->callback([&] { rc = simulate(sim_args); });

  std::string ldif_path;
  auto* ldif_cmd = app.add_subcommand("ldif", "Validate an LDIF file of storage records");
  ldif_cmd->add_option("file", ldif_path)->required();
  ldif_cmd->callback([&] { rc = check_ldif(ldif_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "gridsel: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
