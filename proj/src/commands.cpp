#include "commands.hpp"

#include "config.hpp"
#include "tiltwork/tiltwork.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <variant>

namespace tiltwork::cli {
namespace {

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::string command;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  /// Set when the numbers are printed but the run still counts as a failure.
  bool numerical_failure = false;
};

std::string format_number(double v) {
  if (v == 0) v = 0;  // drop the sign of -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

void write_csv(const Table& t, std::ostream& os) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
    os << '\n';
  }
}

void write_json(const Table& t, std::ostream& os) {
  nlohmann::ordered_json doc;
  doc["command"] = t.command;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj;
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Cell& c = row[i];
      if (const auto* d = std::get_if<double>(&c)) {
        // Rounded through the 12-digit text so both formats agree.
        if (std::isfinite(*d)) {
          obj[t.columns[i]] = std::stod(format_number(*d));
        } else {
          obj[t.columns[i]] = format_number(*d);
        }
      } else if (const auto* n = std::get_if<long long>(&c)) {
        obj[t.columns[i]] = *n;
      } else {
        obj[t.columns[i]] = std::get<std::string>(c);
      }
    }
    doc["rows"].push_back(std::move(obj));
  }
  os << doc.dump(2) << '\n';
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Interior: return "interior";
    case SolveStatus::Extreme: return "extreme";
    case SolveStatus::AboveZeroForce: return "above_zero_force";
  }
  return "unknown";
}

struct Options {
  std::string config_path;
  std::string grid_spec = "-10:0:21";
  std::string output_path;
  std::string schedule_spec;
  bool json = false;
  double tol = 0;
  double delta = 0;
  double s = 0;
  double delta1 = 0;
  double delta2 = 0;
  double lambda = 0;
  double length = 0;
  int bounds = 0;
  bool allocation = false;
  bool integral_route = false;
  int n = 0;
  int grid_points = 0;
  int max_iter = 100000;

  // Set by the parser so commands can tell which optional flags were given.
  std::function<bool(const std::string&)> given;

  double solver_tol(double fallback) const { return given("--tol") ? tol : fallback; }
};

// ---------------------------------------------------------------------------
// Problem assembly

const VectorXd& require_source(const ProblemConfig& cfg) {
  if (!cfg.source_probs) throw ConfigError("source_probs", "required by this command");
  return *cfg.source_probs;
}

const MatrixXd& require_distortion(const ProblemConfig& cfg) {
  if (!cfg.distortion) throw ConfigError("distortion", "required by this command");
  return *cfg.distortion;
}

RdProblem<double> fixed_q_problem(const ProblemConfig& cfg) {
  const VectorXd& p = require_source(cfg);
  const MatrixXd& d = require_distortion(cfg);
  if (!cfg.coding_probs) throw ConfigError("coding_probs", "required by this command");
  return RdProblem<double>(p, *cfg.coding_probs, d);
}

oracle::BlahutArimotoResult<double> run_ba(const ProblemConfig& cfg, double s, int max_iter) {
  auto ba = oracle::blahut_arimoto(require_source(cfg), require_distortion(cfg), s, 1e-12, max_iter);
  if (!ba.converged) {
    throw Error(ErrorCode::NoConvergence,
                "Blahut-Arimoto did not converge at s = " + format_number(s));
  }
  return ba;
}

// Finds the slope whose Blahut-Arimoto point has distortion `target`.
oracle::BlahutArimotoResult<double> ba_for_distortion(const ProblemConfig& cfg, double target,
                                                      int max_iter, double& slope) {
  const VectorXd& p = require_source(cfg);
  const MatrixXd& d = require_distortion(cfg);
  const double dmin = p.dot(d.rowwise().minCoeff());
  if (target <= dmin + kValueTol) {
    throw Error(ErrorCode::DistortionTooLow,
                "target must exceed the minimum distortion " + format_number(dmin) +
                    " when Q is optimised");
  }
  slope = 0;
  auto at_zero = run_ba(cfg, 0, max_iter);
  if (target >= at_zero.distortion - kValueTol) return at_zero;
  double lo = -1;
  double hi = 0;
  auto ba_lo = run_ba(cfg, lo, max_iter);
  while (ba_lo.distortion > target) {
    hi = lo;
    lo *= 2;
    if (lo < -1e8) throw Error(ErrorCode::NoConvergence, "slope bracket diverged");
    ba_lo = run_ba(cfg, lo, max_iter);
  }
  auto best = ba_lo;
  for (int iter = 0; iter < 200 && hi - lo > 1e-12 * std::max(1.0, -lo); ++iter) {
    const double mid = 0.5 * (lo + hi);
    auto ba = run_ba(cfg, mid, max_iter);
    if (ba.distortion > target) {
      hi = mid;
    } else {
      lo = mid;
      best = std::move(ba);
    }
  }
  slope = lo;
  return best;
}

std::vector<double> uniform_partition(double end, int steps) {
  std::vector<double> out(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) out[static_cast<std::size_t>(i)] = end * i / steps;
  out.back() = end;
  return out;
}

void add_means(Table& t, std::vector<Cell>& row, const RdProblem<double>& problem,
               const VectorXd& means, const std::string& prefix) {
  for (Eigen::Index x = 0; x < means.size(); ++x) {
    t.columns.push_back(prefix + std::to_string(problem.source_index()[static_cast<std::size_t>(x)]));
    row.emplace_back(means[x]);
  }
}

// ---------------------------------------------------------------------------
// Commands

Table cmd_rd_curve(const ProblemConfig& cfg, const Options& o) {
  std::vector<double> grid = parse_grid(o.grid_spec);
  for (double s : grid) {
    if (!std::isfinite(s) || s > 0) throw Error(ErrorCode::InvalidArgument, "grid values must be finite and <= 0");
  }
  std::sort(grid.begin(), grid.end(), std::greater<>());

  Table t{"rd curve", {"s", "distortion", "rate_nats", "mmse"}, {}, false};
  bool header_done = false;
  auto emit = [&](const RdProblem<double>& problem, const RdPoint<double>& pt) {
    if (!header_done) {
      for (Eigen::Index x = 0; x < pt.per_symbol_mean.size(); ++x) {
        t.columns.push_back("mean_x" + std::to_string(problem.source_index()[static_cast<std::size_t>(x)]));
      }
      header_done = true;
    }
    std::vector<Cell> row{pt.s, pt.distortion, pt.rate, pt.mmse};
    for (Eigen::Index x = 0; x < pt.per_symbol_mean.size(); ++x) row.emplace_back(pt.per_symbol_mean[x]);
    t.rows.push_back(std::move(row));
  };

  if (cfg.coding_probs) {
    const auto problem = fixed_q_problem(cfg);
    for (const auto& pt : rd_curve(problem, grid)) emit(problem, pt);
  } else {
    for (double s : grid) {
      const auto ba = run_ba(cfg, s, o.max_iter);
      const RdProblem<double> problem(*cfg.source_probs, ba.q_star, *cfg.distortion);
      emit(problem, distortion_at_force(problem, s));
    }
  }
  return t;
}

Table cmd_rd_point(const ProblemConfig& cfg, const Options& o) {
  const bool by_delta = o.given("--delta");
  const bool by_s = o.given("--s");
  if (by_delta == by_s) throw Error(ErrorCode::InvalidArgument, "give exactly one of --delta or --s");
  if (by_s && !(o.s <= 0)) throw Error(ErrorCode::InvalidArgument, "--s must be <= 0");
  const double tol = o.solver_tol(kSolverTol);

  std::optional<RdProblem<double>> problem;
  if (cfg.coding_probs) {
    problem.emplace(fixed_q_problem(cfg));
  } else {
    double slope = o.s;
    const auto ba = by_s ? run_ba(cfg, o.s, o.max_iter) : ba_for_distortion(cfg, o.delta, o.max_iter, slope);
    problem.emplace(*cfg.source_probs, ba.q_star, *cfg.distortion);
  }
  const RdPoint<double> pt = by_s ? distortion_at_force(*problem, o.s) : force_at_distortion(*problem, o.delta, tol);

  Table t{"rd point", {"s", "distortion", "rate_nats", "mmse", "status"}, {}, false};
  std::vector<Cell> row{pt.s, pt.distortion, pt.rate, pt.mmse, std::string(status_name(pt.status))};
  add_means(t, row, *problem, pt.per_symbol_mean, "mean_x");

  if (o.allocation) {
    const auto alloc = equal_force_allocation(*problem, pt.distortion, tol);
    add_means(t, row, *problem, alloc.allocation.per_symbol_distortion, "alloc_x");
    t.columns.push_back("allocation_rate");
    row.emplace_back(alloc.rate);
  }
  if (o.bounds != 0) {
    if (o.bounds < 1) throw Error(ErrorCode::PartitionInvalid, "--bounds needs at least one step");
    if (!(pt.s < 0) || !std::isfinite(pt.s)) {
      throw Error(ErrorCode::PartitionInvalid, "--bounds needs a finite negative force");
    }
    const auto sums = sandwich_bounds(*problem, uniform_partition(pt.s, o.bounds));
    t.columns.insert(t.columns.end(), {"rate_lower", "rate_upper"});
    row.emplace_back(sums.lower());
    row.emplace_back(sums.upper());
  }
  if (o.integral_route) {
    if (!std::isfinite(pt.s)) throw Error(ErrorCode::InvalidArgument, "integral route needs a finite force");
    const double integral = rate_mmse_integral(*problem, pt.s);
    t.columns.insert(t.columns.end(), {"rate_integral", "route_difference"});
    row.emplace_back(integral);
    row.emplace_back(std::abs(integral - pt.rate));
  }
  if (cfg.observable && std::isfinite(pt.s)) {
    const auto sweep = observable_sweep(*problem, *cfg.observable, pt.s);
    t.columns.insert(t.columns.end(), {"observable_integral", "observable_direct"});
    row.emplace_back(sweep.integral);
    row.emplace_back(sweep.direct);
  }
  t.rows.push_back(std::move(row));
  return t;
}

Table cmd_capacity(const ProblemConfig& cfg, const Options&) {
  if (!cfg.channel) throw ConfigError("channel", "required by this command");
  const Channel<double> channel(cfg.channel->transition, cfg.channel->input_probs);
  const auto cp = capacity_point(channel);
  const double mi = mutual_information(channel);
  Table t{"capacity", {"rate_nats", "s_star", "delta", "mutual_information", "abs_difference"}, {}, false};
  t.rows.push_back({cp.rate, cp.s_star, cp.delta, mi, std::abs(cp.rate - mi)});
  return t;
}

Table cmd_rd2(const ProblemConfig& cfg, const Options& o) {
  if (!cfg.distortion_2) throw ConfigError("distortion_2", "required by this command");
  if (!cfg.coding_probs) throw ConfigError("coding_probs", "required by this command");
  const RdProblem2<double> problem(require_source(cfg), *cfg.coding_probs, require_distortion(cfg),
                                   *cfg.distortion_2);
  const auto r = rate_two_distortions(problem, o.delta1, o.delta2, o.solver_tol(1e-10));
  Table t{"rd2", {"delta1", "delta2", "rate_nats", "s1", "s2", "active_1", "active_2", "iterations"}, {}, false};
  t.rows.push_back({o.delta1, o.delta2, r.rate, r.s1, r.s2, static_cast<long long>(!r.at_zero_force[0]),
                    static_cast<long long>(!r.at_zero_force[1]), static_cast<long long>(r.iterations)});
  return t;
}

Table cmd_chain_work(const ProblemConfig& cfg, const Options& o) {
  if (!(o.lambda <= 0) || !std::isfinite(o.lambda)) {
    throw Error(ErrorCode::InvalidArgument, "--lambda must be finite and <= 0");
  }
  const auto problem = fixed_q_problem(cfg);
  const auto system = from_rd_problem(problem, cfg.beta, cfg.k);
  const double work = quasistatic_work(system, o.lambda);
  const auto pt = distortion_at_force(problem, cfg.beta * o.lambda);
  const double kt_rate = cfg.k * system.temperature() * pt.rate;
  Table t{"chain work", {"lambda", "length", "work", "kT_rate", "abs_difference"}, {}, false};
  t.rows.push_back({o.lambda, expected_length(system, o.lambda), work, kt_rate, std::abs(work - kt_rate)});
  return t;
}

Table cmd_chain_equilibrium(const ProblemConfig& cfg, const Options& o) {
  const auto problem = fixed_q_problem(cfg);
  const auto system = from_rd_problem(problem, cfg.beta, cfg.k);
  const auto eq = equilibrium_force(system, o.length, o.solver_tol(kSolverTol));
  Table t{"chain equilibrium", {"length", "lambda"}, {}, false};
  std::vector<Cell> row{o.length, eq.lambda};
  add_means(t, row, problem, eq.array_lengths, "length_x");
  t.rows.push_back(std::move(row));
  return t;
}

Table cmd_chain_protocol(const ProblemConfig& cfg, const Options& o) {
  const auto problem = fixed_q_problem(cfg);
  const auto system = from_rd_problem(problem, cfg.beta, cfg.k);
  const std::vector<double> schedule = parse_grid(o.schedule_spec);
  const auto pw = protocol_work(system, schedule);
  const double baseline = quasistatic_work(system, schedule.back());
  const bool bracketed = pw.lower() <= baseline + 1e-9 && baseline <= pw.upper() + 1e-9;
  Table t{"chain protocol",
          {"steps", "lambda_final", "work", "left_sum", "quasistatic_work", "bracketed"}, {}, false};
  t.rows.push_back({static_cast<long long>(schedule.size() - 1), schedule.back(), pw.work, pw.left_sum,
                    baseline, static_cast<long long>(bracketed)});
  return t;
}

Table cmd_oracle_exact(const ProblemConfig& cfg, const Options& o) {
  const auto problem = fixed_q_problem(cfg);
  const auto ld = oracle::exact_ld_probability(problem, o.n, o.delta);
  const double rate = rate_legendre(problem, o.delta, o.solver_tol(kSolverTol));
  Table t{"oracle exact", {"n", "delta", "probability", "exponent", "rate_nats", "abs_difference"}, {}, false};
  t.rows.push_back({static_cast<long long>(o.n), o.delta, ld.prob, ld.exponent, rate, std::abs(ld.exponent - rate)});
  return t;
}

Table cmd_oracle_ba(const ProblemConfig& cfg, const Options& o) {
  if (!(o.s <= 0)) throw Error(ErrorCode::InvalidArgument, "--s must be <= 0");
  const auto ba = oracle::blahut_arimoto(require_source(cfg), require_distortion(cfg), o.s, 1e-12, o.max_iter);
  const RdProblem<double> problem(*cfg.source_probs, ba.q_star, *cfg.distortion);
  const auto pt = distortion_at_force(problem, o.s);
  Table t{"oracle ba",
          {"s", "ba_distortion", "ba_rate", "rd_distortion", "rd_rate", "distortion_difference",
           "rate_difference", "iterations", "converged"},
          {}, !ba.converged};
  std::vector<Cell> row{o.s, ba.distortion, ba.rate, pt.distortion, pt.rate,
                        std::abs(ba.distortion - pt.distortion), std::abs(ba.rate - pt.rate),
                        static_cast<long long>(ba.iterations), static_cast<long long>(ba.converged)};
  for (Eigen::Index j = 0; j < ba.q_star.size(); ++j) {
    t.columns.push_back("q_star_" + std::to_string(j));
    row.emplace_back(ba.q_star[j]);
  }
  t.rows.push_back(std::move(row));
  return t;
}

Table cmd_oracle_alloc(const ProblemConfig& cfg, const Options& o) {
  const auto problem = fixed_q_problem(cfg);
  const int points = o.grid_points > 0 ? o.grid_points : 400;
  const double brute = oracle::brute_allocation_min(problem, o.delta, points);
  const auto alloc = equal_force_allocation(problem, o.delta, o.solver_tol(kSolverTol));
  const double slack = oracle::allocation_grid_slack(problem, o.delta, points);
  const double rate = rate_legendre(problem, o.delta, o.solver_tol(kSolverTol));
  const bool within = brute - rate <= slack + 1e-10 && brute >= rate - 1e-10;
  Table t{"oracle alloc",
          {"delta", "brute_rate", "equal_force_rate", "rate_nats", "abs_difference", "grid_slack", "within_slack"},
          {}, false};
  t.rows.push_back({o.delta, brute, alloc.rate, rate, std::abs(brute - rate), slack, static_cast<long long>(within)});
  return t;
}

Table cmd_oracle_grid(const ProblemConfig& cfg, const Options& o) {
  const double tol = o.solver_tol(kSolverTol);
  if (o.given("--delta2")) {
    if (!cfg.distortion_2) throw ConfigError("distortion_2", "required by --delta2");
    const auto problem = fixed_q_problem(cfg);
    const RdProblem2<double> p2(*cfg.source_probs, *cfg.coding_probs, *cfg.distortion, *cfg.distortion_2);
    oracle::GridSpec spec{-20, o.grid_points > 0 ? o.grid_points : 201, 6};
    const double grid = oracle::legendre_grid_max_2d(p2, o.delta, o.delta2, spec);
    const auto r = rate_two_distortions(p2, o.delta, o.delta2, o.solver_tol(1e-10));
    Table t{"oracle grid", {"delta1", "delta2", "grid_rate", "rate_nats", "abs_difference"}, {}, false};
    t.rows.push_back({o.delta, o.delta2, grid, r.rate, std::abs(grid - r.rate)});
    return t;
  }
  const auto problem = fixed_q_problem(cfg);
  oracle::GridSpec spec;
  if (o.grid_points > 0) spec.points = o.grid_points;
  const double grid = oracle::legendre_grid_max(problem, o.delta, spec);
  const double rate = rate_legendre(problem, o.delta, tol);
  Table t{"oracle grid", {"delta", "grid_rate", "rate_nats", "abs_difference"}, {}, false};
  t.rows.push_back({o.delta, grid, rate, std::abs(grid - rate)});
  return t;
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  auto number = [&](const std::string& text) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used == 0 || used != text.size()) {
      throw Error(ErrorCode::InvalidArgument, "cannot parse grid value '" + text + "'");
    }
    return v;
  };
  std::vector<double> out;
  if (std::count(spec.begin(), spec.end(), ':') == 2) {
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 + 1);
    const double a = number(spec.substr(0, c1));
    const double b = number(spec.substr(c1 + 1, c2 - c1 - 1));
    const double count = number(spec.substr(c2 + 1));
    if (count < 1 || count != std::floor(count) || count > 1e7) {
      throw Error(ErrorCode::InvalidArgument, "grid point count must be a positive integer");
    }
    const auto n = static_cast<int>(count);
    if (n == 1) return {a};
    for (int i = 0; i < n; ++i) out.push_back(i == n - 1 ? b : a + (b - a) * i / (n - 1));
    return out;
  }
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(number(item));
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty grid");
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rate-distortion, Chernoff bounds and their work interpretation", "tiltwork"};
  app.require_subcommand(1);
  Options o;

  app.add_option("--config", o.config_path, "Problem definition (JSON or key = value)");
  app.add_option("--tol", o.tol, "Solver tolerance")->check(CLI::NonNegativeNumber);
  app.add_option("--grid", o.grid_spec, "Force grid: a:b:n or a comma list");
  app.add_option("--output", o.output_path, "Write the table to this file");
  app.add_flag("--json", o.json, "Structured JSON instead of CSV");

  using Handler = std::function<Table(const ProblemConfig&, const Options&)>;
  Handler handler;
  std::vector<CLI::App*> leaves;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, Handler h) {
    CLI::App* sub = parent->add_subcommand(name, help);
    sub->fallthrough();
    sub->callback([&handler, h] { handler = h; });
    leaves.push_back(sub);
    return sub;
  };
  auto group = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->require_subcommand(1);
    return sub;
  };

  CLI::App* rd = group("rd", "Rate-distortion at fixed or optimised Q");
  leaf(rd, "curve", "Sweep the force grid", cmd_rd_curve);
  CLI::App* point = leaf(rd, "point", "One point at a distortion or force", cmd_rd_point);
  point->add_option("--delta", o.delta, "Target distortion");
  point->add_option("--s", o.s, "Force (s <= 0)");
  point->add_option("--bounds", o.bounds, "Riemann sandwich with this many steps");
  point->add_flag("--allocation", o.allocation, "Print the equal-force allocation");
  point->add_flag("--integral-route", o.integral_route, "Also integrate s mmse(s)");
  point->add_option("--max-iter", o.max_iter, "Blahut-Arimoto iteration cap");
  rd->get_subcommand("curve")->add_option("--max-iter", o.max_iter, "Blahut-Arimoto iteration cap");

  leaf(&app, "capacity", "Channel capacity through the rate-distortion mapping", cmd_capacity);

  CLI::App* rd2 = leaf(&app, "rd2", "Rate under two distortion constraints", cmd_rd2);
  rd2->add_option("--delta1", o.delta1, "First target")->required();
  rd2->add_option("--delta2", o.delta2, "Second target")->required();

  CLI::App* chain = group("chain", "Polymer-chain emulation of the rate-distortion problem");
  leaf(chain, "work", "Quasi-static work against kT R", cmd_chain_work)
      ->add_option("--lambda", o.lambda, "Final force")->required();
  leaf(chain, "equilibrium", "Force and per-array lengths at a total length", cmd_chain_equilibrium)
      ->add_option("--length", o.length, "Target length")->required();
  leaf(chain, "protocol", "Stepwise work along a force schedule", cmd_chain_protocol)
      ->add_option("--schedule", o.schedule_spec, "Force schedule starting at 0: a:b:n or a list")
      ->required();

  CLI::App* orc = group("oracle", "Independent checks against the primary routes");
  CLI::App* exact = leaf(orc, "exact", "Exact large-deviations probability", cmd_oracle_exact);
  exact->add_option("--n", o.n, "Block length")->required();
  exact->add_option("--delta", o.delta, "Distortion level")->required();
  CLI::App* ba = leaf(orc, "ba", "Blahut-Arimoto at a slope", cmd_oracle_ba);
  ba->add_option("--s", o.s, "Slope (<= 0)")->required();
  ba->add_option("--max-iter", o.max_iter, "Iteration cap");
  CLI::App* alloc = leaf(orc, "alloc", "Brute-force allocation search", cmd_oracle_alloc);
  alloc->add_option("--delta", o.delta, "Distortion level")->required();
  alloc->add_option("--grid-points", o.grid_points, "Grid points per letter");
  CLI::App* grid = leaf(orc, "grid", "Dense-grid Legendre maximum", cmd_oracle_grid);
  grid->add_option("--delta", o.delta, "Distortion level")->required();
  grid->add_option("--delta2", o.delta2, "Second distortion level (two-constraint grid)");
  grid->add_option("--grid-points", o.grid_points, "Grid points per axis");

  o.given = [&](const std::string& flag) {
    for (CLI::App* a : leaves) {
      if (a->parsed() && a->get_option_no_throw(flag) && a->get_option_no_throw(flag)->count() > 0) return true;
    }
    const CLI::Option* g = app.get_option_no_throw(flag);
    return g && g->count() > 0;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (o.config_path.empty()) {
      err << "error: --config is required\n";
      return 1;
    }
    const ProblemConfig cfg = load_config(o.config_path);
    const Table table = handler(cfg, o);
    if (o.output_path.empty()) {
      o.json ? write_json(table, out) : write_csv(table, out);
    } else {
      std::ofstream file(o.output_path);
      if (!file) throw ConfigError("<output>", "cannot write '" + o.output_path + "'");
      o.json ? write_json(table, file) : write_csv(table, file);
    }
    if (table.numerical_failure) {
      err << "error: NO_CONVERGENCE: iteration cap reached\n";
      return 2;
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_numerical_failure(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace tiltwork::cli
