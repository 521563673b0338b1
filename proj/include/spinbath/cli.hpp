#pragma once

// Run orchestration behind the command-line front end: configuration,
// per-command table construction, cross-layer comparison and parallel
// parameter sweeps. Kept header-side so the test suite can drive runs
// in-process.

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "spinbath/correlations.hpp"
#include "spinbath/errors.hpp"
#include "spinbath/hierarchy.hpp"
#include "spinbath/io.hpp"
#include "spinbath/liouville.hpp"
#include "spinbath/meanfield.hpp"
#include "spinbath/qops.hpp"
#include "spinbath/states.hpp"
#include "spinbath/version.hpp"

namespace spinbath::cli {

using nlohmann::ordered_json;

struct RunConfig {
  std::string command = "meanfield";
  liouville::SystemParams params{};        // volume stays 1 in the CLI
  ode::IntegratorConfig integrator{};
  double t_final = 10.0;
  int samples = 201;
  std::vector<double> sample_times;        // overrides the uniform grid when set
  std::string init = "near_excited:0.001";
  std::string output;                      // empty writes CSV to stdout
  std::string format = "csv";
  long seed = 0;                           // echoed into metadata
  bool dissipation = true;
  std::string mode = "full";               // correlations: full | linear_response
  std::string sweep_over = "meanfield";
  std::vector<int> sweep_n = {1, 20, 40};
  std::vector<double> sweep_nbar = {0.0};
  std::vector<double> sweep_gamma = {1.0};
  std::string output_dir = "sweep";
  int n_max = kDefaultNMax;
};

inline const std::set<std::string>& known_commands() {
  static const std::set<std::string> c = {"exact",      "dicke",   "meanfield",
                                          "closedform", "stationary", "compare",
                                          "correlations", "sweep"};
  return c;
}

struct ParsedInit {
  // all_excited / near_excited carry pure-state amplitudes a|e> + b|g>;
  // a custom file may supply either a Bloch vector or a density matrix.
  cplx a{1.0, 0.0};
  cplx b{0.0, 0.0};
  std::optional<meanfield::BlochState> bloch;
  std::optional<cmat> matrix;
};

inline cmat json_to_matrix(const nlohmann::json& rows) {
  const size_t d = rows.size();
  cmat m(d, d);
  for (size_t r = 0; r < d; ++r) {
    if (rows[r].size() != d) throw std::invalid_argument("custom init: matrix is not square");
    for (size_t c = 0; c < d; ++c)
      m(r, c) = cplx(rows[r][c][0].get<double>(), rows[r][c][1].get<double>());
  }
  return m;
}

inline ParsedInit parse_init(const std::string& spec) {
  ParsedInit out;
  if (spec == "all_excited") {
    out.bloch = meanfield::all_excited();
    return out;
  }
  if (spec.rfind("near_excited:", 0) == 0) {
    double eps = 0.0;
    try {
      eps = std::stod(spec.substr(13));
    } catch (const std::exception&) {
      throw std::invalid_argument("init: cannot parse epsilon in '" + spec + "'");
    }
    if (eps <= 0.0 || eps >= 1.0) throw std::invalid_argument("init: epsilon must lie in (0, 1)");
    out.a = std::sqrt(1.0 - eps);
    out.b = std::sqrt(eps);
    out.bloch = meanfield::near_excited(eps);
    return out;
  }
  if (spec.rfind("custom:", 0) == 0) {
    const std::string path = spec.substr(7);
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("init: cannot open custom file " + path);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const std::exception& e) {
      throw std::invalid_argument("init: bad JSON in " + path + ": " + e.what());
    }
    if (doc.contains("bloch")) {
      meanfield::BlochState s;
      s.s0 = doc["bloch"].value("s0", 0.0);
      s.s_plus = cplx(doc["bloch"].value("re_sp", 0.0), doc["bloch"].value("im_sp", 0.0));
      if (!s.physical()) throw std::invalid_argument("init: custom Bloch state is unphysical");
      out.bloch = s;
    }
    if (doc.contains("rho")) out.matrix = json_to_matrix(doc["rho"]);
    if (!out.bloch && !out.matrix)
      throw std::invalid_argument("init: custom file needs a 'bloch' or 'rho' entry");
    return out;
  }
  throw std::invalid_argument("init: expected all_excited, near_excited:<eps> or custom:<file>, "
                              "got '" + spec + "'");
}

inline void validate(const RunConfig& c) {
  if (!known_commands().count(c.command))
    throw std::invalid_argument("unknown command '" + c.command + "'");
  c.params.validate();
  c.integrator.validate();
  if (c.command != "stationary") {
    if (c.t_final <= 0.0) throw std::invalid_argument("t_final must be > 0");
    if (c.samples < 2) throw std::invalid_argument("samples must be >= 2");
    parse_init(c.init);
  }
  if (c.format != "csv" && c.format != "json")
    throw std::invalid_argument("format must be csv or json");
  if (c.mode != "full" && c.mode != "linear_response")
    throw std::invalid_argument("mode must be full or linear_response");
  if (c.command == "sweep") {
    if (c.sweep_over != "meanfield" && c.sweep_over != "exact" && c.sweep_over != "dicke")
      throw std::invalid_argument("sweep --over must be meanfield, exact or dicke");
    if (c.sweep_n.empty() || c.sweep_nbar.empty() || c.sweep_gamma.empty())
      throw std::invalid_argument("sweep grids must be nonempty");
    if (c.output_dir.empty()) throw std::invalid_argument("sweep needs an output directory");
  }
  if (!c.sample_times.empty()) {
    for (size_t i = 0; i < c.sample_times.size(); ++i) {
      if (c.sample_times[i] < 0.0 || c.sample_times[i] > c.t_final)
        throw std::invalid_argument("sample times must lie in [0, t_final]");
      if (i > 0 && c.sample_times[i] <= c.sample_times[i - 1])
        throw std::invalid_argument("sample times must be ascending");
    }
  }
}

inline ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["command"] = c.command;
  j["N"] = c.params.n_particles;
  j["omega0"] = c.params.omega0;
  j["gamma"] = c.params.gamma;
  j["nbar"] = c.params.nbar;
  j["volume"] = c.params.volume;
  j["method"] = c.integrator.method == ode::Method::rk4_fixed ? "rk4" : "rk45";
  j["step"] = c.integrator.step;
  j["rtol"] = c.integrator.rtol;
  j["atol"] = c.integrator.atol;
  j["max_steps"] = c.integrator.max_steps;
  j["t_final"] = c.t_final;
  j["samples"] = c.samples;
  j["sample_times"] = c.sample_times;
  j["init"] = c.init;
  j["output"] = c.output;
  j["format"] = c.format;
  j["seed"] = c.seed;
  j["dissipation"] = c.dissipation;
  j["mode"] = c.mode;
  j["sweep_over"] = c.sweep_over;
  j["sweep_N"] = c.sweep_n;
  j["sweep_nbar"] = c.sweep_nbar;
  j["sweep_gamma"] = c.sweep_gamma;
  j["output_dir"] = c.output_dir;
  j["n_max"] = c.n_max;
  return j;
}

inline RunConfig from_json(const nlohmann::json& j) {
  RunConfig c;
  c.command = j.value("command", c.command);
  c.params.n_particles = j.value("N", c.params.n_particles);
  c.params.omega0 = j.value("omega0", c.params.omega0);
  c.params.gamma = j.value("gamma", c.params.gamma);
  c.params.nbar = j.value("nbar", c.params.nbar);
  c.params.volume = j.value("volume", c.params.volume);
  const std::string method = j.value("method", std::string("rk45"));
  if (method == "rk4")
    c.integrator.method = ode::Method::rk4_fixed;
  else if (method == "rk45")
    c.integrator.method = ode::Method::rk45_adaptive;
  else
    throw std::invalid_argument("config: method must be rk4 or rk45");
  c.integrator.step = j.value("step", c.integrator.step);
  c.integrator.rtol = j.value("rtol", c.integrator.rtol);
  c.integrator.atol = j.value("atol", c.integrator.atol);
  c.integrator.max_steps = j.value("max_steps", c.integrator.max_steps);
  c.t_final = j.value("t_final", c.t_final);
  c.samples = j.value("samples", c.samples);
  c.sample_times = j.value("sample_times", c.sample_times);
  c.init = j.value("init", c.init);
  c.output = j.value("output", c.output);
  c.format = j.value("format", c.format);
  c.seed = j.value("seed", c.seed);
  c.dissipation = j.value("dissipation", c.dissipation);
  c.mode = j.value("mode", c.mode);
  c.sweep_over = j.value("sweep_over", c.sweep_over);
  c.sweep_n = j.value("sweep_N", c.sweep_n);
  c.sweep_nbar = j.value("sweep_nbar", c.sweep_nbar);
  c.sweep_gamma = j.value("sweep_gamma", c.sweep_gamma);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.n_max = j.value("n_max", c.n_max);
  return c;
}

namespace detail {

inline std::vector<double> sample_grid(const RunConfig& c) {
  if (!c.sample_times.empty()) return c.sample_times;
  return ode::linspace(0.0, c.t_final, c.samples);
}

inline void emit(const io::Table& table, const RunConfig& c, const ordered_json& extra_meta) {
  if (c.output.empty()) {
    io::write_csv(table, std::cout);
    return;
  }
  if (c.format == "json") {
    ordered_json meta;
    meta["version"] = kVersion;
    meta["config"] = to_json(c);
    for (auto it = extra_meta.begin(); it != extra_meta.end(); ++it) meta[it.key()] = it.value();
    io::emit_json(table, meta, c.output);
  } else {
    io::emit_csv(table, c.output);
  }
}

inline io::Table meanfield_table(const meanfield::MeanFieldTrajectory& traj) {
  io::Table t;
  t.columns = {"t", "s0", "re_sp", "im_sp", "rho_ee", "R2"};
  for (const auto& s : traj.samples)
    t.rows.push_back({s.t, s.state.s0, s.state.s_plus.real(), s.state.s_plus.imag(), s.rho_ee,
                      s.r_squared});
  return t;
}

// Per-particle Bloch series from a collective evolution.
inline io::Table collective_table(const liouville::Evolution& evo, const cmat& s0_op,
                                  const cmat& sp_op, int n) {
  io::Table t;
  t.columns = {"t", "s0", "re_sp", "im_sp", "rho_ee", "R2"};
  for (size_t i = 0; i < evo.states.size(); ++i) {
    const double s0 = qops::expectation(evo.states[i], s0_op).real() / n;
    const cplx sp = qops::expectation(evo.states[i], sp_op) / static_cast<double>(n);
    const double r2 = s0 * s0 + 4.0 * std::norm(sp);
    t.rows.push_back({evo.times[i], s0, sp.real(), sp.imag(),
                      liouville::excited_probability(s0), r2});
  }
  return t;
}

struct ExactRun {
  liouville::Evolution evolution;
  io::Table table;
};

inline ExactRun run_full_space(const RunConfig& c, const ParsedInit& init,
                               const std::vector<double>& times) {
  const int n = c.params.n_particles;
  const liouville::LindbladModel model = liouville::build_model_full(c.params, c.n_max);
  cmat rho0;
  if (init.matrix) {
    rho0 = *init.matrix;
  } else {
    rho0 = states::product_state(states::qubit_pure(init.a, init.b), n);
  }
  ExactRun run;
  run.evolution = liouville::evolve(model, DensityMatrix::checked(rho0, 1e-8), c.t_final,
                                    c.integrator, times);
  run.table = collective_table(run.evolution,
                               qops::collective(qops::Collective::S_0, n, c.n_max),
                               qops::collective(qops::Collective::S_plus, n, c.n_max), n);
  return run;
}

inline ExactRun run_dicke(const RunConfig& c, const ParsedInit& init,
                          const std::vector<double>& times) {
  const int n = c.params.n_particles;
  const liouville::DickeLadder ladder = liouville::dicke_ladder(n);
  const liouville::LindbladModel model = liouville::build_model_dicke(c.params);
  cmat rho0;
  if (init.matrix) {
    rho0 = *init.matrix;
  } else {
    rho0 = states::dicke_coherent(n, init.a, init.b);
  }
  ExactRun run;
  run.evolution = liouville::evolve(model, DensityMatrix::checked(rho0, 1e-8), c.t_final,
                                    c.integrator, times);
  run.table = collective_table(run.evolution, ladder.s_0, ladder.s_plus, n);
  return run;
}

inline void run_meanfield(const RunConfig& c) {
  const ParsedInit init = parse_init(c.init);
  if (!init.bloch) throw std::invalid_argument("meanfield: init must provide a Bloch state");
  const auto mp = meanfield::MeanFieldParams::from(c.params);
  const auto times = sample_grid(c);
  const auto traj =
      meanfield::evolve_meanfield(*init.bloch, mp, c.t_final, c.integrator, times, c.dissipation);
  emit(meanfield_table(traj), c, {});
}

inline void run_closedform(const RunConfig& c) {
  const ParsedInit init = parse_init(c.init);
  if (!init.bloch) throw std::invalid_argument("closedform: init must provide a Bloch state");
  const auto mp = meanfield::MeanFieldParams::from(c.params);
  io::Table t;
  t.columns = {"t", "s0", "re_sp", "im_sp", "rho_ee", "R2"};
  for (double time : sample_grid(c)) {
    const meanfield::BlochState s = meanfield::closed_form_no_dissipation(time, *init.bloch, mp);
    t.rows.push_back({time, s.s0, s.s_plus.real(), s.s_plus.imag(), 0.5 * (1.0 + s.s0),
                      meanfield::constant_of_motion(s)});
  }
  emit(t, c, {});
}

inline void run_exact(const RunConfig& c) {
  emit(run_full_space(c, parse_init(c.init), sample_grid(c)).table, c, {});
}

inline void run_dicke_cmd(const RunConfig& c) {
  emit(run_dicke(c, parse_init(c.init), sample_grid(c)).table, c, {});
}

inline void run_stationary(const RunConfig& c) {
  const meanfield::BlochState st = meanfield::stationary(c.params);
  const double rho_ee = 0.5 * (1.0 + st.s0);
  std::cout << "stationary: <sigma_0> = " << io::format_double(st.s0)
            << ", <sigma_+> = 0, rho_ee = " << io::format_double(rho_ee) << "\n";
  if (!c.output.empty()) {
    io::Table t;
    t.columns = {"nbar", "s0", "re_sp", "im_sp", "rho_ee"};
    t.rows.push_back({c.params.nbar, st.s0, 0.0, 0.0, rho_ee});
    emit(t, c, {});
  }
}

inline void run_compare(const RunConfig& c) {
  const ParsedInit init = parse_init(c.init);
  if (!init.bloch) throw std::invalid_argument("compare: init must provide a Bloch state");
  const auto times = sample_grid(c);
  const int n = c.params.n_particles;

  std::vector<std::string> columns = {"t"};
  std::vector<std::vector<double>> series;

  std::optional<std::vector<double>> exact;
  if (n <= c.n_max) {
    const ExactRun run = run_full_space(c, init, times);
    exact.emplace();
    for (const auto& row : run.table.rows) exact->push_back(row[4]);
    columns.push_back("rho_ee_exact");
    series.push_back(*exact);
  }

  {
    const ExactRun run = run_dicke(c, init, times);
    std::vector<double> v;
    for (const auto& row : run.table.rows) v.push_back(row[4]);
    columns.push_back("rho_ee_dicke");
    series.push_back(std::move(v));
  }

  const auto mp = meanfield::MeanFieldParams::from(c.params);
  {
    const auto traj = meanfield::evolve_meanfield(*init.bloch, mp, c.t_final, c.integrator, times,
                                                  c.dissipation);
    std::vector<double> v;
    for (const auto& s : traj.samples) v.push_back(s.rho_ee);
    columns.push_back("rho_ee_meanfield");
    series.push_back(std::move(v));
  }

  // Analytic column: the N = 1 linear solution when dissipation is on, the
  // tanh/sech closed form when it is off (skipped at its equilibrium pole).
  std::optional<std::vector<double>> analytic;
  if (c.dissipation && n == 1) {
    analytic.emplace();
    for (double time : times)
      analytic->push_back(0.5 * (1.0 + meanfield::n1_solution(time, *init.bloch, c.params).s0));
  } else if (!c.dissipation) {
    try {
      std::vector<double> v;
      for (double time : times)
        v.push_back(0.5 *
                    (1.0 + meanfield::closed_form_no_dissipation(time, *init.bloch, mp).s0));
      analytic = std::move(v);
    } catch (const std::invalid_argument&) {
      // equilibrium point: no closed-form column
    }
  }
  if (analytic) {
    columns.push_back("rho_ee_analytic");
    series.push_back(*analytic);
  }

  io::Table t;
  t.columns = columns;
  for (size_t i = 0; i < times.size(); ++i) {
    std::vector<double> row = {times[i]};
    for (const auto& s : series) row.push_back(s[i]);
    t.rows.push_back(std::move(row));
  }

  ordered_json summary;
  const std::vector<double>* reference = exact ? &*exact : &series[0];
  const std::string ref_name = exact ? "exact" : "dicke";
  for (size_t s = 0; s < series.size(); ++s) {
    const std::string& name = columns[s + 1];
    if (name == "rho_ee_" + ref_name) continue;
    double dev = 0.0;
    for (size_t i = 0; i < times.size(); ++i)
      dev = std::max(dev, std::abs(series[s][i] - (*reference)[i]));
    const std::string key = "max|" + ref_name + " - " + name.substr(7) + "|";
    summary[key] = dev;
    std::cout << "compare: " << key << " = " << io::format_double(dev) << "\n";
  }
  ordered_json extra;
  extra["summary"] = summary;
  emit(t, c, extra);
}

inline void run_correlations(const RunConfig& c) {
  const ParsedInit init = parse_init(c.init);
  cmat rho1;
  if (init.matrix && init.matrix->rows() == 2) {
    rho1 = *init.matrix;
  } else if (init.bloch) {
    rho1 = correlations::bloch_reconstruct(
        Eigen::Vector3d(2.0 * init.bloch->s_plus.real(), 2.0 * init.bloch->s_plus.imag(),
                        init.bloch->s0));
  } else {
    throw std::invalid_argument("correlations: init must provide a single-particle state");
  }
  const cmat init2 = qops::kron(rho1, rho1);
  const auto mode = c.mode == "full" ? correlations::ClosureMode::full
                                     : correlations::ClosureMode::linear_response;
  const auto traj = correlations::evolve_pair_closure(DensityMatrix::checked(init2, 1e-8),
                                                      c.params, c.t_final, c.integrator,
                                                      sample_grid(c), mode);
  for (const std::string& w : traj.warnings) std::cerr << "warning: " << w << "\n";

  io::Table t;
  t.columns = {"t",      "s0",     "re_sp",  "im_sp",  "rho_ee", "R2",
               "chi_xx", "chi_xy", "chi_xz", "chi_yx", "chi_yy", "chi_yz",
               "chi_zx", "chi_zy", "chi_zz", "min_eig", "trace_err"};
  for (const auto& s : traj.samples) {
    const Eigen::Vector3d v = correlations::bloch_decompose(s.rho1);
    const double s0 = v(2);
    const cplx sp(0.5 * v(0), 0.5 * v(1));
    std::vector<double> row = {s.t,        s0,       sp.real(), sp.imag(),
                               0.5 * (1.0 + s0), s0 * s0 + 4.0 * std::norm(sp)};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) row.push_back(s.chi(i, j));
    row.push_back(s.min_eigenvalue);
    row.push_back(s.trace_error);
    t.rows.push_back(std::move(row));
  }
  ordered_json extra;
  extra["warnings"] = traj.warnings;
  emit(t, c, extra);
}

inline std::string cell_name(int n, double nbar, double gamma) {
  std::ostringstream os;
  os << "cell_N" << n << "_nbar" << io::format_double(nbar) << "_gamma"
     << io::format_double(gamma);
  return os.str();
}

inline int sweep_thread_cap() {
  if (const char* env = std::getenv("SPINBATH_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

inline void run_single(const RunConfig& c);  // forward

inline void run_sweep(const RunConfig& c) {
  namespace fs = std::filesystem;
  fs::create_directories(c.output_dir);

  struct Cell {
    RunConfig config;
    int n;
    double nbar, gamma;
    std::string file;
  };
  std::vector<Cell> cells;
  for (int n : c.sweep_n)
    for (double nbar : c.sweep_nbar)
      for (double gamma : c.sweep_gamma) {
        Cell cell;
        cell.config = c;
        cell.config.command = c.sweep_over;
        cell.config.params.n_particles = n;
        cell.config.params.nbar = nbar;
        cell.config.params.gamma = gamma;
        cell.n = n;
        cell.nbar = nbar;
        cell.gamma = gamma;
        cell.file = cell_name(n, nbar, gamma) + "." + c.format;
        cell.config.output = (fs::path(c.output_dir) / cell.file).string();
        cells.push_back(std::move(cell));
      }

  const int workers = std::min<int>(sweep_thread_cap(), static_cast<int>(cells.size()));
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        run_single(cells[i].config);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  ordered_json index;
  index["meta"] = ordered_json{{"version", kVersion}, {"config", to_json(c)}};
  index["cells"] = ordered_json::array();
  for (const Cell& cell : cells)
    index["cells"].push_back(ordered_json{
        {"N", cell.n}, {"nbar", cell.nbar}, {"gamma", cell.gamma}, {"file", cell.file}});
  std::ofstream out(std::filesystem::path(c.output_dir) / "index.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sweep index");
  out << index.dump(2) << '\n';
}

inline void run_single(const RunConfig& c) {
  if (c.command == "meanfield") return run_meanfield(c);
  if (c.command == "closedform") return run_closedform(c);
  if (c.command == "exact") return run_exact(c);
  if (c.command == "dicke") return run_dicke_cmd(c);
  if (c.command == "stationary") return run_stationary(c);
  if (c.command == "compare") return run_compare(c);
  if (c.command == "correlations") return run_correlations(c);
  if (c.command == "sweep") return run_sweep(c);
  throw std::invalid_argument("unknown command '" + c.command + "'");
}

}  // namespace detail

// Validates and executes one run. Throws std::invalid_argument for bad
// configurations and spinbath::numerical_error for numerical aborts; the
// binary maps those to exit codes 2 and 3.
inline void run(const RunConfig& config) {
  validate(config);
  detail::run_single(config);
}

// Exception-to-exit-code wrapper used by the binary and by tests.
inline int run_with_exit_code(const RunConfig& config) {
  try {
    run(config);
    return 0;
  } catch (const numerical_error& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace spinbath::cli
