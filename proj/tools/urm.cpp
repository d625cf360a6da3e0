#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "urm/cli/workspace.hpp"
#include "urm/common/error.hpp"
#include "urm/metrics/metrics.hpp"
#include "urm/netsim/simulator.hpp"

namespace fs = std::filesystem;
using namespace urm;

namespace {

enum Exit : int { kOk = 0, kVerifyFailed = 1, kUsage = 2, kRejectedWrite = 3 };

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Reads print a header, the rows and a count; a read no agreement allows
// has an empty header and no rows.
void print_rows(const enforcement::ResultSet& rs, bool read) {
  if (!read) {
    std::cout << "affected: " << rs.affected << "\n";
    return;
  }
  for (std::size_t i = 0; i < rs.columns.size(); ++i) std::cout << (i ? "," : "") << rs.columns[i];
  std::cout << "\n";
  for (const auto& row : rs.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) std::cout << (i ? "," : "") << esa::render_literal(row[i]);
    std::cout << "\n";
  }
  std::cout << "(" << rs.rows.size() << " rows)\n";
}

void print_record(const audit::AuditRecord& r) {
  std::cout << "DATA seq " << r.seq << " block " << r.block << " hash " << r.query_hash.hex() << "\n"
            << "stored: " << r.query << "\n";
}

// --- sweep ---

struct Sweep {
  std::vector<double> rates;
  std::vector<std::uint32_t> nodes;
};

// Values are a comma list; `a:b:step` expands to a..b inclusive.
void add_values(std::vector<double>& out, const std::string& token) {
  const auto parts = CLI::detail::split(token, ':');
  try {
    if (parts.size() == 1) {
      out.push_back(std::stod(parts[0]));
      return;
    }
    if (parts.size() == 3) {
      const double lo = std::stod(parts[0]), hi = std::stod(parts[1]), step = std::stod(parts[2]);
      if (step <= 0 || hi < lo) throw ConfigError("bad range " + token);
      for (int k = 0; lo + k * step <= hi + 1e-9; ++k) out.push_back(lo + k * step);
      return;
    }
  } catch (const std::invalid_argument&) {
  }
  throw ConfigError("bad sweep value '" + token + "'");
}

// "rates=100:1200:100,nodes=4,16": a token with '=' starts a new key.
Sweep parse_sweep(const std::string& spec) {
  std::map<std::string, std::vector<double>> values;
  std::string key;
  for (const auto& token : CLI::detail::split(spec, ',')) {
    std::string v = token;
    if (const auto eq = token.find('='); eq != std::string::npos) {
      key = token.substr(0, eq);
      if (key != "rates" && key != "nodes") throw ConfigError("unknown sweep key '" + key + "'");
      v = token.substr(eq + 1);
    }
    if (key.empty()) throw ConfigError("sweep values must follow rates= or nodes=");
    add_values(values[key], v);
  }
  Sweep s;
  s.rates = values["rates"];
  for (double n : values["nodes"]) {
    if (n < 1 || n != static_cast<std::uint32_t>(n)) throw ConfigError("node counts must be positive integers");
    s.nodes.push_back(static_cast<std::uint32_t>(n));
  }
  return s;
}

std::string scenario_name(const netsim::SimConfig& cfg) {
  std::ostringstream s;
  s << "n" << cfg.validators << "_r" << cfg.input_rate;
  return s.str();
}

struct RunOutcome {
  std::optional<metrics::MetricsReport> report;
  std::string error;
};

RunOutcome run_one(const netsim::SimConfig& cfg, const std::optional<fs::path>& trace_path) {
  RunOutcome out;
  const auto trace = netsim::run_simulation(cfg);
  if (trace_path) {
    std::ofstream f(*trace_path);
    netsim::export_trace_csv(f, trace);
    if (!f) throw Error("cannot write " + trace_path->string());
  }
  try {
    out.report = metrics::compute_metrics(trace, scenario_name(cfg));
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

struct SimOptions {
  std::string config;
  std::string out;
  std::string sweep;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
  bool traces = false;
};

int cmd_sim(const SimOptions& o) {
  auto base = netsim::load_config(o.config);
  if (o.seed) base.seed = *o.seed;
  netsim::validate_config(base);

  std::vector<netsim::SimConfig> runs;
  if (o.sweep.empty()) {
    runs.push_back(base);
  } else {
    const auto s = parse_sweep(o.sweep);
    const auto nodes = s.nodes.empty() ? std::vector<std::uint32_t>{base.validators} : s.nodes;
    const auto rates = s.rates.empty() ? std::vector<double>{base.input_rate} : s.rates;
    for (auto n : nodes) {
      for (double r : rates) {
        auto cfg = n == base.validators ? base : netsim::with_validators(base, n);
        cfg.input_rate = r;
        netsim::validate_config(cfg);
        runs.push_back(cfg);
      }
    }
  }

  const fs::path out_dir = o.out;
  fs::create_directories(out_dir);
  const bool single = o.sweep.empty();
  if (!single && o.traces) fs::create_directories(out_dir / "traces");
  auto trace_path = [&](const netsim::SimConfig& cfg) -> std::optional<fs::path> {
    if (single) return out_dir / "trace.csv";
    if (o.traces) return out_dir / "traces" / (scenario_name(cfg) + ".csv");
    return std::nullopt;
  };

  std::vector<RunOutcome> outcomes(runs.size());
  std::vector<std::string> failures(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < runs.size();) {
      try {
        outcomes[i] = run_one(runs[i], trace_path(runs[i]));
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(o.jobs ? o.jobs : std::thread::hardware_concurrency(),
                                                         static_cast<unsigned>(runs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!failures[i].empty()) throw Error(scenario_name(runs[i]) + ": " + failures[i]);
  }

  std::vector<metrics::MetricsReport> reports;
  auto summary = nlohmann::ordered_json::array();
  int status = kOk;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (outcomes[i].report) {
      reports.push_back(*outcomes[i].report);
      summary.push_back(metrics::summary_json(*outcomes[i].report));
      const auto& r = *outcomes[i].report;
      std::cout << r.scenario << ": tps " << r.tps_avg << ", latency " << r.latency_avg.count() * 1000.0
                << " ms, uncommitted " << r.uncommitted << "\n";
    } else {
      std::cerr << scenario_name(runs[i]) << ": no metrics: " << outcomes[i].error << "\n";
      summary.push_back({{"scenario", scenario_name(runs[i])}, {"error", outcomes[i].error}});
      status = kVerifyFailed;
    }
  }
  if (!reports.empty()) metrics::export_csv(out_dir / "metrics.csv", reports);
  nlohmann::ordered_json doc;
  doc["config"] = netsim::config_to_json(base);
  doc["runs"] = summary;
  std::ofstream(out_dir / "summary.json") << doc.dump(2) << "\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Executable sharing agreements over a replicated ledger"};
  app.require_subcommand(1);
  std::string ws_dir = ".";

  auto* init = app.add_subcommand("init", "Create a workspace from CSV tables");
  std::vector<std::string> tables;
  std::string provider = "provider";
  init->add_option("-w,--workspace", ws_dir, "Workspace directory");
  init->add_option("-t,--table", tables, "NAME=FILE or FILE (name from the file stem); first column owns the row")
      ->required();
  init->add_option("--provider", provider, "Data provider name");

  auto* deploy = app.add_subcommand("deploy", "Deploy an agreement (ESAD)");
  std::string esa_file;
  deploy->add_option("-w,--workspace", ws_dir, "Workspace directory");
  deploy->add_option("file", esa_file, "Agreement source file")->required();

  auto* revoke = app.add_subcommand("revoke", "Revoke an agreement in force (ESAR)");
  std::string hash;
  revoke->add_option("-w,--workspace", ws_dir, "Workspace directory");
  revoke->add_option("hash", hash, "Agreement hash")->required();

  auto* query = app.add_subcommand("query", "Rewrite, run and log a query");
  std::string requester, purpose, text;
  query->add_option("-w,--workspace", ws_dir, "Workspace directory");
  query->add_option("--requester", requester, "Requesting consumer")->required();
  query->add_option("--purpose", purpose, "Declared purpose")->required();
  query->add_option("query", text, "Query text")->required();

  auto* audit_cmd = app.add_subcommand("audit", "Verify the audit log against the side chain");
  bool audit_json = false;
  audit_cmd->add_option("-w,--workspace", ws_dir, "Workspace directory");
  audit_cmd->add_flag("--json", audit_json, "Print the full verdict as JSON");

  auto* reveal = app.add_subcommand("reveal", "Show a consumer's agreements and their history");
  std::string consumer;
  reveal->add_option("-w,--workspace", ws_dir, "Workspace directory");
  reveal->add_option("consumer", consumer, "Consumer name")->required();

  auto* sim = app.add_subcommand("sim", "Consensus simulation");
  sim->require_subcommand(1);
  auto* sim_run = sim->add_subcommand("run", "Run one scenario or a sweep");
  SimOptions sim_opts;
  sim_run->add_option("--config", sim_opts.config, "SimConfig JSON file")->required();
  sim_run->add_option("--out", sim_opts.out, "Output directory")->required();
  sim_run->add_option("--sweep", sim_opts.sweep, "e.g. rates=100:1200:100,nodes=4,16");
  sim_run->add_option("--seed", sim_opts.seed, "Override the config seed");
  sim_run->add_option("-j,--jobs", sim_opts.jobs, "Parallel runs in a sweep (default: hardware threads)");
  sim_run->add_flag("--traces", sim_opts.traces, "Also write one trace CSV per sweep run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*init) {
      std::vector<enforcement::Table> loaded;
      for (const auto& t : tables) {
        const auto eq = t.find('=');
        const std::string name = eq == std::string::npos ? fs::path(t).stem().string() : t.substr(0, eq);
        const std::string file = eq == std::string::npos ? t : t.substr(eq + 1);
        try {
          loaded.push_back(enforcement::load_csv_file(file, name));
        } catch (const std::exception& e) {
          throw ConfigError(file + ": " + e.what());
        }
      }
      cli::Workspace::create(ws_dir, loaded, provider);
      std::cout << "workspace " << ws_dir << " with " << loaded.size() << " table(s)\n";
      return kOk;
    }
    if (*sim_run) return cmd_sim(sim_opts);

    auto ws = cli::Workspace::open(ws_dir);
    if (*deploy) {
      const auto r = ws.deploy(read_text(esa_file));
      ws.save();
      std::cout << "ESAD seq " << r.seq << " hash " << r.hash.hex() << "\n";
      return kOk;
    }
    if (*revoke) {
      Digest h;
      try {
        h = Digest::from_hex(hash);
      } catch (const std::exception&) {
        throw ConfigError("not an agreement hash: " + hash);
      }
      const auto r = ws.revoke(h);
      ws.save();
      std::cout << "ESAR seq " << r.seq << " hash " << r.hash.hex() << "\n";
      for (const auto& rec : r.enforced) print_record(rec);
      return kOk;
    }
    if (*query) {
      const auto r = ws.query(requester, purpose, text);
      ws.save();
      if (!r.executed) {
        std::cerr << "write rejected: no agreement in force allows any of its columns\n";
        return kRejectedWrite;
      }
      print_record(*r.record);
      print_rows(r.rows, std::holds_alternative<enforcement::Select>(enforcement::parse_query(text)));
      return kOk;
    }
    if (*audit_cmd) {
      const auto v = ws.audit();
      if (audit_json) {
        std::cout << audit::verdict_json(v).dump(2) << "\n";
      } else {
        std::size_t bad = 0;
        for (const auto& r : v.records) {
          if (r.ok()) continue;
          ++bad;
          std::cout << "record seq " << r.seq << ": " << r.reason << "\n";
        }
        for (auto seq : v.unlogged) std::cout << "DataTx seq " << seq << " has no audit record\n";
        if (!v.chain_problem.empty()) std::cout << "side chain: " << v.chain_problem << "\n";
        std::cout << (v.ok ? "PASS" : "FAIL") << ": " << v.records.size() << " record(s), " << bad << " failing, "
                  << v.unlogged.size() << " unlogged\n";
      }
      return v.ok ? kOk : kVerifyFailed;
    }
    if (*reveal) {
      auto out = nlohmann::ordered_json::array();
      for (const auto& d : ws.reveal(consumer)) {
        nlohmann::ordered_json j;
        j["hash"] = d.hash.hex();
        j["agreement"] = esa::render_esa(d.agreement);
        j["text"] = esa::render_natural_language(d.agreement);
        auto events = nlohmann::ordered_json::array();
        for (const auto& e : d.events) events.push_back({{"seq", e.seq}, {"type", e.type}, {"time_ms", e.time_ms}});
        j["events"] = events;
        out.push_back(j);
      }
      std::cout << out.dump(2) << "\n";
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
