#include "gpd/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gpd/serialize.hpp"

namespace gpd {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  const ValidationReport report = validate_spec(network);
  if (!report.ok()) {
    std::string msg = "config: invalid network spec:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw std::invalid_argument(msg);
  }
  problem.validate(network);
  arrivals.validate();
  states.validate();
  if (arrivals.link_count() != network.link_count)
    throw std::invalid_argument("config: arrival rates length != link count");
  if (states.state_count() != network.state_count())
    throw std::invalid_argument("config: state model size != state count");
  if (slots < 1) throw std::invalid_argument("config: slots must be >= 1");
  if (report_cadence < 1) throw std::invalid_argument("config: report_cadence must be >= 1");
}

double default_z_max(const NetworkSpec& net, const ArrivalModel& arrivals) {
  double max_power = 0.0;
  for (const auto& st : net.states)
    for (const auto& mode : st.modes) max_power = std::max(max_power, mode.power);
  return 2.0 * (static_cast<double>(arrivals.a_max) * net.link_count + max_power);
}

NetworkSpec gen_network(const GenNetworkOptions& options) {
  if (options.links < 1) throw std::invalid_argument("gen_network: links must be >= 1");
  if (options.links > kMaxEnumerationLinks)
    throw std::invalid_argument("gen_network: links exceed the enumeration bound");
  if (options.radius < 0 && options.density < 0)
    throw std::invalid_argument("gen_network: set a radius or a conflict density");

  SplitMix64 rng = derive_stream(options.seed, 0);
  const int n = options.links;
  constexpr double kLinkLength = 0.25;

  std::vector<std::pair<double, double>> tx(n), rx(n);
  for (int i = 0; i < n; ++i) {
    tx[i] = {rng.next_double(), rng.next_double()};
    const double angle = rng.next_double() * 2.0 * 3.14159265358979323846;
    rx[i] = {tx[i].first + kLinkLength * std::cos(angle),
             tx[i].second + kLinkLength * std::sin(angle)};
  }

  InterferenceGraph graph;
  graph.n = n;
  auto dist = [](std::pair<double, double> a, std::pair<double, double> b) {
    const double dx = a.first - b.first, dy = a.second - b.second;
    return std::sqrt(dx * dx + dy * dy);
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      bool conflict = false;
      if (options.radius >= 0) {
        conflict = dist(tx[i], rx[j]) <= options.radius || dist(tx[j], rx[i]) <= options.radius;
      } else {
        conflict = rng.next_double() < options.density;
      }
      if (conflict) graph.edges.emplace_back(i, j);
    }
  }

  NetworkSpec net;
  net.link_count = n;
  StateConfig st;
  st.modes = enumerate_modes(graph);
  st.routing = RoutingMatrix::identity(n);
  net.states.push_back(std::move(st));
  net.pi_true = Vec{1.0};
  net.interference_edges = graph.edges;

  bool any_service = false;
  for (const auto& mode : net.states[0].modes)
    for (auto d : mode.departures) any_service |= d > 0;
  if (!any_service) throw std::runtime_error("gen_network: degenerate graph, no nonzero mode");
  return net;
}

UncertainParams true_params(const RunConfig& config) {
  UncertainParams y;
  y.pi = config.states.stationary();
  y.a = config.arrivals.rates;
  return y;
}

namespace {

std::string int_vec_csv(const IntVec& v) {
  std::string s;
  for (auto x : v) {
    s += ',';
    s += std::to_string(x);
  }
  return s;
}

std::string vec_csv(const Vec& v) {
  std::string s;
  for (double x : v) {
    s += ',';
    s += format_double(x);
  }
  return s;
}

std::string metrics_header(int constraints, int links) {
  std::string h = "t,state,mode,f,p,g,max_queue";
  for (int i = 1; i <= constraints; ++i) h += ",h_" + std::to_string(i);
  for (int i = 1; i <= links; ++i) h += ",dep_rate_" + std::to_string(i);
  return h;
}

std::string arrivals_header(int links) {
  std::string h = "t";
  for (int i = 1; i <= links; ++i) h += ",a_" + std::to_string(i);
  return h;
}

}  // namespace

RunSummary simulate(const RunConfig& config) {
  config.validate();
  if (config.out_dir.empty()) throw std::invalid_argument("simulate: output directory not set");
  fs::create_directories(config.out_dir);
  const fs::path dir(config.out_dir);

  SimOptions options;
  options.gradient_mode = config.gradient_mode;
  options.assert_gradients = config.assert_gradients;
  Simulation sim(config.network, config.problem, config.arrivals, config.states, config.seed,
                 options);

  std::ofstream metrics(dir / "metrics.csv", std::ios::binary);
  std::ofstream arrivals_csv(dir / "arrivals.csv", std::ios::binary);
  if (!metrics || !arrivals_csv)
    throw std::runtime_error("simulate: cannot open output files in " + config.out_dir);
  const int rows = config.problem.constraint_count(config.network);
  metrics << metrics_header(rows, config.network.link_count) << '\n';
  arrivals_csv << arrivals_header(config.network.link_count) << '\n';

  RunSummary summary;
  summary.slots = config.slots;
  summary.config_hash = config_hash(config);

  SlotRecord rec;
  for (std::int64_t t = 1; t <= config.slots; ++t) {
    try {
      rec = sim.step();
    } catch (const std::exception& e) {
      metrics << "#ERROR," << e.what() << '\n';
      metrics.flush();
      arrivals_csv.flush();
      throw;
    }
    arrivals_csv << rec.t << int_vec_csv(rec.arrivals) << '\n';
    summary.max_queue_over_run = std::max(summary.max_queue_over_run, rec.max_queue);
    if (t % config.report_cadence == 0 || t == config.slots) {
      metrics << rec.t << ',' << rec.state << ',' << rec.mode << ',' << format_double(rec.f)
              << ',' << format_double(rec.p) << ',' << format_double(rec.g) << ','
              << rec.max_queue << vec_csv(rec.h) << vec_csv(rec.dep_rate) << '\n';
    }
  }

  summary.f_final = rec.f;
  summary.p_final = rec.p;
  summary.g_final = rec.g;
  summary.h_final = rec.h;
  summary.z_final = rec.z;
  summary.dep_rate_final = rec.dep_rate;
  summary.a_emp_final = sim.empirical().a_emp();
  summary.pi_emp_final = sim.empirical().pi_emp();
  summary.oracle_enabled = config.oracle;

  if (config.oracle) {
    const UncertainParams y_emp = sim.empirical_params();
    const SolverResult oracle = solve_pen_fw(y_emp, config.problem, config.network);
    summary.oracle_f = oracle.f_at_x_star;
    summary.oracle_g = oracle.g_star;
    summary.oracle_fw_gap = oracle.fw_gap;
    summary.oracle_iters = oracle.iterations;
    summary.cost_gap_rel =
        std::abs(summary.f_final - oracle.f_at_x_star) / std::max(std::abs(oracle.f_at_x_star), 1e-6);
  }

  // summary.json is path free so identical runs are byte identical anywhere.
  std::ofstream sj(dir / "summary.json", std::ios::binary);
  sj << "{\n";
  sj << "  \"schema_version\": 1,\n";
  sj << "  \"config_hash\": \"" << summary.config_hash << "\",\n";
  sj << "  \"slots\": " << summary.slots << ",\n";
  sj << "  \"f_final\": " << format_double(summary.f_final) << ",\n";
  sj << "  \"p_final\": " << format_double(summary.p_final) << ",\n";
  sj << "  \"g_final\": " << format_double(summary.g_final) << ",\n";
  sj << "  \"max_queue_over_run\": " << summary.max_queue_over_run << ",\n";
  auto emit_vec = [&sj](const char* key, const Vec& v, bool trailing_comma) {
    sj << "  \"" << key << "\": [";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) sj << ", ";
      sj << format_double(v[i]);
    }
    sj << (trailing_comma ? "],\n" : "]\n");
  };
  emit_vec("h_final", summary.h_final, true);
  emit_vec("z_final", summary.z_final, true);
  emit_vec("dep_rate_final", summary.dep_rate_final, true);
  emit_vec("a_emp_final", summary.a_emp_final, true);
  emit_vec("pi_emp_final", summary.pi_emp_final, true);
  sj << "  \"oracle\": {\n";
  sj << "    \"enabled\": " << (summary.oracle_enabled ? "true" : "false");
  if (summary.oracle_enabled) {
    sj << ",\n";
    sj << "    \"f\": " << format_double(summary.oracle_f) << ",\n";
    sj << "    \"g\": " << format_double(summary.oracle_g) << ",\n";
    sj << "    \"fw_gap\": " << format_double(summary.oracle_fw_gap) << ",\n";
    sj << "    \"iterations\": " << summary.oracle_iters << ",\n";
    sj << "    \"cost_gap_rel\": " << format_double(summary.cost_gap_rel) << "\n";
  } else {
    sj << "\n";
  }
  sj << "  }\n";
  sj << "}\n";
  return summary;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) comma = line.size();
    cells.push_back(line.substr(pos, comma - pos));
    if (comma == line.size()) break;
    pos = comma + 1;
  }
  return cells;
}

double parse_double(const std::string& s, const std::string& what, std::size_t row) {
  try {
    return std::stod(s);
  } catch (...) {
    throw std::runtime_error(what + ": parse error at row " + std::to_string(row));
  }
}

std::int64_t parse_int(const std::string& s, const std::string& what, std::size_t row) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc())
    throw std::runtime_error(what + ": parse error at row " + std::to_string(row));
  return v;
}

}  // namespace

void report(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const fs::path metrics_path = dir / "metrics.csv";
  const fs::path arrivals_path = dir / "arrivals.csv";
  const fs::path summary_path = dir / "summary.json";
  if (!fs::exists(metrics_path))
    throw std::runtime_error("report: no metrics.csv in " + run_dir);

  // Oracle reference from the summary, when the run had one.
  bool oracle_on = false;
  double oracle_f = 0.0;
  if (fs::exists(summary_path)) {
    std::ifstream sj(summary_path);
    std::string text((std::istreambuf_iterator<char>(sj)), std::istreambuf_iterator<char>());
    const auto pos = text.find("\"enabled\": true");
    oracle_on = pos != std::string::npos;
    if (oracle_on) {
      const auto fpos = text.find("\"f\": ", pos);
      if (fpos != std::string::npos) oracle_f = std::stod(text.substr(fpos + 5));
    }
  }

  // Pass 1 over metrics: locate columns, find the final slot.
  std::ifstream metrics(metrics_path);
  std::string line;
  if (!std::getline(metrics, line)) throw std::runtime_error("report: metrics.csv is empty");
  const auto header = split_csv(line);
  int col_f = -1, col_g = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "f") col_f = static_cast<int>(i);
    if (header[i] == "g") col_g = static_cast<int>(i);
  }
  if (col_f < 0 || col_g < 0) throw std::runtime_error("report: metrics.csv header mismatch");

  struct CostRow {
    std::int64_t t;
    double f, g;
  };
  std::vector<CostRow> rows;
  std::size_t row_no = 1;
  while (std::getline(metrics, line)) {
    ++row_no;
    if (line.empty()) continue;
    if (line.rfind("#ERROR", 0) == 0)
      throw std::runtime_error("report: metrics.csv carries an error marker at row " +
                               std::to_string(row_no));
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw std::runtime_error("report: metrics.csv: parse error at row " + std::to_string(row_no));
    rows.push_back({parse_int(cells[0], "report: metrics.csv", row_no),
                    parse_double(cells[col_f], "report: metrics.csv", row_no),
                    parse_double(cells[col_g], "report: metrics.csv", row_no)});
  }
  if (rows.empty()) throw std::runtime_error("report: metrics.csv has no data rows");
  const std::int64_t horizon = rows.back().t;
  const std::int64_t stride = (horizon + 9999) / 10000;

  {
    std::ofstream out(dir / "report_cost.csv", std::ios::binary);
    out << "# oracle: " << (oracle_on ? "on" : "off") << '\n';
    out << "t,f,g" << (oracle_on ? ",oracle_f" : "") << '\n';
    for (const auto& r : rows) {
      if (r.t % stride != 0 && r.t != horizon) continue;
      out << r.t << ',' << format_double(r.f) << ',' << format_double(r.g);
      if (oracle_on) out << ',' << format_double(oracle_f);
      out << '\n';
    }
  }

  // Windowed arrival-rate estimates over each stride of slots.
  if (fs::exists(arrivals_path)) {
    std::ifstream arr(arrivals_path);
    if (!std::getline(arr, line)) throw std::runtime_error("report: arrivals.csv is empty");
    const std::size_t links = split_csv(line).size() - 1;
    std::ofstream out(dir / "report_sources.csv", std::ios::binary);
    out << "# window: " << stride << " slots\n";
    out << "t";
    for (std::size_t i = 1; i <= links; ++i) out << ",rate_" << i;
    out << '\n';
    Vec window_sum(links, 0.0);
    std::int64_t window_count = 0;
    row_no = 1;
    std::int64_t t = 0;
    while (std::getline(arr, line)) {
      ++row_no;
      if (line.empty()) continue;
      const auto cells = split_csv(line);
      if (cells.size() != links + 1)
        throw std::runtime_error("report: arrivals.csv: parse error at row " + std::to_string(row_no));
      t = parse_int(cells[0], "report: arrivals.csv", row_no);
      for (std::size_t i = 0; i < links; ++i)
        window_sum[i] += parse_double(cells[i + 1], "report: arrivals.csv", row_no);
      ++window_count;
      if (t % stride == 0 || t == horizon) {
        out << t;
        for (std::size_t i = 0; i < links; ++i)
          out << ',' << format_double(window_sum[i] / static_cast<double>(window_count));
        out << '\n';
        window_sum.assign(links, 0.0);
        window_count = 0;
      }
    }
  }
}

RunConfig make_canonical_pow_config(std::int64_t slots, bool drifting, std::uint64_t seed) {
  GenNetworkOptions gen;
  gen.links = 7;
  gen.radius = 0.4;
  gen.seed = 12;
  RunConfig config;
  config.network = gen_network(gen);

  const UncertainParams y_true{Vec{1.0}, Vec(7, 0.0)};
  const double theta = max_uniform_throughput(y_true, config.network);

  config.arrivals.kind = drifting ? ArrivalKind::drifting_rate : ArrivalKind::iid_bernoulli_batch;
  config.arrivals.rates.assign(7, 0.7 * theta);
  config.arrivals.a_max = 1;
  if (drifting) {
    config.arrivals.initial_rates.assign(7, 0.8 * 0.7 * theta);
    config.arrivals.tau_d = 1e4;
  }
  config.states.kind = StateKind::iid_categorical;
  config.states.distribution = Vec{1.0};
  config.problem.cost = CostKind::average_power;
  config.problem.rate_stability = true;
  config.problem.penalty.alpha = 2.0;
  config.problem.penalty.beta = 5e3;
  config.problem.penalty.epsilon = 1e-3;
  config.problem.penalty.z_max = default_z_max(config.network, config.arrivals);
  config.slots = slots;
  config.seed = seed;
  config.oracle = true;
  config.gradient_mode = GradientMode::queue;
  return config;
}

}  // namespace gpd
