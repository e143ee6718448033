#include "gpd/serialize.hpp"

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gpd/scheduler.hpp"

namespace gpd {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

json require(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw std::runtime_error(what + ": missing key '" + key + "'");
  return j.at(key);
}

Vec to_vec(const json& j) { return j.get<Vec>(); }
IntVec to_int_vec(const json& j) { return j.get<IntVec>(); }

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

NetworkSpec network_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  if (require(j, "schema_version", "network").get<int>() != 1)
    throw std::runtime_error("network: unsupported schema_version");
  NetworkSpec net;
  net.link_count = require(j, "links", "network").get<int>();
  for (const auto& js : require(j, "states", "network")) {
    StateConfig st;
    for (const auto& jm : require(js, "modes", "network state")) {
      AllocationMode mode;
      mode.departures = to_int_vec(require(jm, "departures", "mode"));
      mode.power = require(jm, "power", "mode").get<double>();
      st.modes.push_back(std::move(mode));
    }
    const auto& jr = require(js, "routing", "network state");
    st.routing.n = net.link_count;
    for (const auto& row : jr)
      for (const auto& v : row) st.routing.entries.push_back(v.get<int>());
    if (st.routing.entries.size() !=
        static_cast<std::size_t>(net.link_count) * net.link_count)
      throw std::runtime_error("network: routing matrix shape mismatch");
    net.states.push_back(std::move(st));
  }
  if (j.contains("pi_true")) net.pi_true = to_vec(j.at("pi_true"));
  if (j.contains("interference_edges")) {
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j.at("interference_edges"))
      edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    net.interference_edges = std::move(edges);
  }
  return net;
}

std::string network_to_json_text(const NetworkSpec& net) {
  json j;
  j["schema_version"] = 1;
  j["links"] = net.link_count;
  json states = json::array();
  for (const auto& st : net.states) {
    json js;
    json modes = json::array();
    for (const auto& mode : st.modes)
      modes.push_back(json{{"departures", mode.departures}, {"power", mode.power}});
    js["modes"] = std::move(modes);
    json routing = json::array();
    for (int i = 0; i < net.link_count; ++i) {
      json row = json::array();
      for (int c = 0; c < net.link_count; ++c) row.push_back(st.routing.at(i, c));
      routing.push_back(std::move(row));
    }
    js["routing"] = std::move(routing);
    states.push_back(std::move(js));
  }
  j["states"] = std::move(states);
  if (net.pi_true) j["pi_true"] = *net.pi_true;
  if (net.interference_edges) {
    json edges = json::array();
    for (const auto& [a, b] : *net.interference_edges) edges.push_back(json::array({a, b}));
    j["interference_edges"] = std::move(edges);
  }
  return j.dump(2) + "\n";
}

NetworkSpec load_network(const std::string& path) {
  return network_from_json_text(read_file(path));
}

void save_network(const NetworkSpec& net, const std::string& path) {
  write_file(path, network_to_json_text(net));
}

namespace {

ArrivalModel arrivals_from_json(const json& j, const std::string& base_dir) {
  ArrivalModel m;
  const std::string kind = require(j, "kind", "arrivals").get<std::string>();
  if (kind == "deterministic-rate")
    m.kind = ArrivalKind::deterministic_rate;
  else if (kind == "iid-bernoulli-batch")
    m.kind = ArrivalKind::iid_bernoulli_batch;
  else if (kind == "drifting-rate")
    m.kind = ArrivalKind::drifting_rate;
  else if (kind == "replay")
    m.kind = ArrivalKind::replay;
  else
    throw std::runtime_error("arrivals: unknown kind '" + kind + "'");
  if (j.contains("a_max")) m.a_max = j.at("a_max").get<std::int64_t>();
  if (j.contains("rates")) m.rates = to_vec(j.at("rates"));
  if (m.kind == ArrivalKind::drifting_rate) {
    m.initial_rates = to_vec(require(j, "initial_rates", "arrivals"));
    if (j.contains("tau_d")) m.tau_d = j.at("tau_d").get<double>();
  }
  if (m.kind == ArrivalKind::replay) {
    const std::string trace =
        (std::filesystem::path(base_dir) / require(j, "trace", "arrivals").get<std::string>())
            .string();
    if (m.rates.empty()) {
      // Link count comes from the trace; rates default to its column means.
      m.trace = load_arrival_trace(trace, -1);
      m.rates.assign(m.trace.front().size(), 0.0);
      for (const auto& row : m.trace)
        for (std::size_t i = 0; i < row.size(); ++i) m.rates[i] += static_cast<double>(row[i]);
      for (auto& r : m.rates) r /= static_cast<double>(m.trace.size());
    } else {
      m.trace = load_arrival_trace(trace, static_cast<int>(m.rates.size()));
    }
  }
  return m;
}

json arrivals_to_json(const ArrivalModel& m) {
  json j;
  j["kind"] = to_string(m.kind);
  j["rates"] = m.rates;
  j["a_max"] = m.a_max;
  if (m.kind == ArrivalKind::drifting_rate) {
    j["initial_rates"] = m.initial_rates;
    j["tau_d"] = m.tau_d;
  }
  if (m.kind == ArrivalKind::replay) j["trace"] = "arrivals.csv";
  return j;
}

StateModel states_from_json(const json& j) {
  StateModel m;
  const std::string kind = require(j, "kind", "states").get<std::string>();
  if (kind == "iid-categorical") {
    m.kind = StateKind::iid_categorical;
    m.distribution = to_vec(require(j, "distribution", "states"));
  } else if (kind == "markov-chain") {
    m.kind = StateKind::markov_chain;
    for (const auto& row : require(j, "transition", "states")) m.transition.push_back(to_vec(row));
  } else {
    throw std::runtime_error("states: unknown kind '" + kind + "'");
  }
  return m;
}

json states_to_json(const StateModel& m) {
  json j;
  if (m.kind == StateKind::iid_categorical) {
    j["kind"] = "iid-categorical";
    j["distribution"] = m.distribution;
  } else {
    j["kind"] = "markov-chain";
    j["transition"] = m.transition;
  }
  return j;
}

ProblemSpec problem_from_json(const json& j) {
  ProblemSpec p;
  const std::string cost = require(j, "cost", "problem").get<std::string>();
  if (cost == "average-power")
    p.cost = CostKind::average_power;
  else if (cost == "zero")
    p.cost = CostKind::zero;
  else
    throw std::runtime_error("problem: unknown cost '" + cost + "'");
  p.rate_stability = false;
  for (const auto& c : require(j, "constraints", "problem")) {
    const std::string kind = c.get<std::string>();
    if (kind == "rate-stability")
      p.rate_stability = true;
    else if (kind == "power-budget")
      p.power_budget = to_vec(require(j, "power_budget", "problem"));
    else
      throw std::runtime_error("problem: unknown constraint '" + kind + "'");
  }
  if (j.contains("alpha")) p.penalty.alpha = j.at("alpha").get<double>();
  p.penalty.beta = require(j, "beta", "problem").get<double>();
  p.penalty.epsilon = require(j, "epsilon", "problem").get<double>();
  if (j.contains("z_max")) p.penalty.z_max = j.at("z_max").get<double>();
  else p.penalty.z_max = 0.0;  // resolved by the caller via default_z_max
  return p;
}

json problem_to_json(const ProblemSpec& p) {
  json j;
  j["cost"] = p.cost == CostKind::average_power ? "average-power" : "zero";
  json cons = json::array();
  if (p.rate_stability) cons.push_back("rate-stability");
  if (p.power_budget) {
    cons.push_back("power-budget");
    j["power_budget"] = *p.power_budget;
  }
  j["constraints"] = std::move(cons);
  j["alpha"] = p.penalty.alpha;
  j["beta"] = p.penalty.beta;
  j["epsilon"] = p.penalty.epsilon;
  j["z_max"] = p.penalty.z_max;
  return j;
}

json run_config_to_json(const RunConfig& c, bool include_out) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["network"] = json::parse(network_to_json_text(c.network));
  j["arrivals"] = arrivals_to_json(c.arrivals);
  j["states"] = states_to_json(c.states);
  j["problem"] = problem_to_json(c.problem);
  j["slots"] = c.slots;
  j["seed"] = c.seed;
  if (include_out) j["out"] = c.out_dir;
  j["report_cadence"] = c.report_cadence;
  j["oracle"] = c.oracle;
  j["gradient_mode"] = c.gradient_mode == GradientMode::queue ? "queue" : "analytic";
  j["assert_gradients"] = c.assert_gradients;
  return j;
}

}  // namespace

RunConfig run_config_from_json_text(const std::string& text, const std::string& base_dir) {
  const json j = json::parse(text);
  if (require(j, "schema_version", "config").get<int>() != kConfigSchemaVersion)
    throw std::runtime_error("config: unsupported schema_version");
  RunConfig c;
  const json jn = require(j, "network", "config");
  if (jn.contains("file")) {
    const auto path = std::filesystem::path(base_dir) / jn.at("file").get<std::string>();
    c.network = load_network(path.string());
  } else {
    c.network = network_from_json_text(jn.dump());
  }
  c.arrivals = arrivals_from_json(require(j, "arrivals", "config"), base_dir);
  c.states = states_from_json(require(j, "states", "config"));
  c.problem = problem_from_json(require(j, "problem", "config"));
  if (c.problem.penalty.z_max <= 0.0)
    c.problem.penalty.z_max = default_z_max(c.network, c.arrivals);
  c.slots = require(j, "slots", "config").get<std::int64_t>();
  c.seed = require(j, "seed", "config").get<std::uint64_t>();
  if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
  if (j.contains("report_cadence")) c.report_cadence = j.at("report_cadence").get<std::int64_t>();
  if (j.contains("oracle")) c.oracle = j.at("oracle").get<bool>();
  if (j.contains("gradient_mode")) {
    const std::string g = j.at("gradient_mode").get<std::string>();
    if (g == "queue")
      c.gradient_mode = GradientMode::queue;
    else if (g == "analytic")
      c.gradient_mode = GradientMode::analytic;
    else
      throw std::runtime_error("config: unknown gradient_mode '" + g + "'");
  } else {
    const bool queue_ok = c.problem.rate_stability && !c.problem.power_budget;
    c.gradient_mode = queue_ok ? GradientMode::queue : GradientMode::analytic;
  }
  if (j.contains("assert_gradients")) c.assert_gradients = j.at("assert_gradients").get<bool>();
  return c;
}

std::string run_config_to_json_text(const RunConfig& config) {
  return run_config_to_json(config, true).dump(2) + "\n";
}

RunConfig load_run_config(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path().string();
  return run_config_from_json_text(read_file(path), dir.empty() ? "." : dir);
}

void save_run_config(const RunConfig& config, const std::string& path) {
  write_file(path, run_config_to_json_text(config));
}

std::string config_hash(const RunConfig& config) {
  const std::string canonical = run_config_to_json(config, false).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 0; i < 16; ++i) buf[15 - i] = hex[(h >> (4 * i)) & 0xF];
  buf[16] = '\0';
  return std::string(buf);
}

std::vector<IntVec> load_arrival_trace(const std::string& path, int links) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open arrival trace " + path);
  std::vector<IntVec> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("t,", 0) == 0) continue;  // header
    IntVec row;
    std::size_t pos = 0;
    bool first = true;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      const std::string cell = line.substr(pos, comma - pos);
      std::int64_t v = 0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc())
        throw std::runtime_error("arrival trace " + path + ": parse error at row " +
                                 std::to_string(line_no));
      if (!first) row.push_back(v);  // first column is t
      first = false;
      pos = comma + 1;
      if (comma == line.size()) break;
    }
    if (links >= 0 && static_cast<int>(row.size()) != links)
      throw std::runtime_error("arrival trace " + path + ": row " + std::to_string(line_no) +
                               " has " + std::to_string(row.size()) + " entries, expected " +
                               std::to_string(links));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("arrival trace " + path + ": no data rows");
  return rows;
}

// --- Simulation checkpointing -----------------------------------------------

struct CheckpointCodec {
  static json encode(const Simulation& sim) {
    const EmpiricalState& e = sim.emp_;
    json j;
    j["schema_version"] = 1;
    j["t"] = e.t;
    j["mode_counts"] = e.mode_counts;
    j["state_counts"] = e.state_counts;
    j["u_eps_counts"] = e.u_eps_counts;
    j["u_zmax_counts"] = e.u_zmax_counts;
    j["z_rec"] = e.z_rec;
    j["x_rec"] = e.x_rec;
    j["queue"] = e.queue.q;
    j["arrivals_total"] = e.arrivals.total;
    j["occupancy_total"] = e.occupancy.total;
    j["service_nominal_cum"] = e.service_nominal_cum;
    j["departures_eff_cum"] = e.departures_eff_cum;
    j["power_rows_cum"] = e.power_rows_cum;
    j["cost_cum"] = e.cost_cum;
    j["previous_state"] = sim.previous_state_;
    j["arrival_rng"] = sim.arrival_rng_.state();
    j["state_rng"] = sim.state_rng_.state();
    return j;
  }

  static void decode(Simulation& sim, const json& j) {
    if (require(j, "schema_version", "checkpoint").get<int>() != 1)
      throw std::runtime_error("checkpoint: unsupported schema_version");
    EmpiricalState& e = sim.emp_;
    e.t = j.at("t").get<std::int64_t>();
    e.mode_counts = j.at("mode_counts").get<std::vector<IntVec>>();
    e.state_counts = to_int_vec(j.at("state_counts"));
    e.u_eps_counts = to_int_vec(j.at("u_eps_counts"));
    e.u_zmax_counts = to_int_vec(j.at("u_zmax_counts"));
    e.z_rec = to_vec(j.at("z_rec"));
    e.x_rec = j.at("x_rec").get<std::vector<Vec>>();
    e.queue.q = to_int_vec(j.at("queue"));
    e.arrivals.total = to_vec(j.at("arrivals_total"));
    e.arrivals.t = e.t;
    e.occupancy.total = to_vec(j.at("occupancy_total"));
    e.occupancy.t = e.t;
    e.service_nominal_cum = to_int_vec(j.at("service_nominal_cum"));
    e.departures_eff_cum = to_int_vec(j.at("departures_eff_cum"));
    e.power_rows_cum = to_vec(j.at("power_rows_cum"));
    e.cost_cum = j.at("cost_cum").get<double>();
    sim.previous_state_ = j.at("previous_state").get<int>();
    sim.arrival_rng_.set_state(j.at("arrival_rng").get<std::uint64_t>());
    sim.state_rng_.set_state(j.at("state_rng").get<std::uint64_t>());
  }
};

void Simulation::save_checkpoint(const std::string& path) const {
  write_file(path, CheckpointCodec::encode(*this).dump(2) + "\n");
}

void Simulation::load_checkpoint(const std::string& path) {
  CheckpointCodec::decode(*this, json::parse(read_file(path)));
}

}  // namespace gpd
