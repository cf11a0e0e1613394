#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "asep/acceptance.hpp"
#include "asep/bethe.hpp"
#include "asep/errors.hpp"
#include "asep/manifest.hpp"
#include "asep/mc.hpp"
#include "asep/oracle.hpp"
#include "asep/parallel.hpp"
#include "asep/single_particle.hpp"
#include "asep/ssep.hpp"
#include "asep/tasep.hpp"

using namespace asep;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0, kExitDomain = 2, kExitAccuracy = 3, kExitVerification = 4;

// Result of one command: primary output plus what the manifest records.
struct Output {
  std::string command;
  std::string text;
  json parameters = json::object();
  std::uint64_t seed = 0;
  int exit_code = kExitOk;
};

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    os_ << std::setprecision(17);
    row_strings(header);
  }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ","), put(cells), first = false), ...);
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }
  void put(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) {
      os_ << s;
      return;
    }
    os_ << '"';
    for (char c : s) os_ << (c == '"' ? "\"\"" : std::string(1, c));
    os_ << '"';
  }
  void put(const char* s) { put(std::string(s)); }
  void put(double v) {
    if (std::isnan(v)) os_ << "nan";
    else os_ << v;
  }
  template <class I>
    requires std::is_integral_v<I>
  void put(I v) { os_ << v; }
  std::ostringstream os_;
};

std::string sites(const Configuration& c) {
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + std::to_string(c[i]);
  return s;
}

struct RateOptions {
  double p = 0.5;
  std::optional<double> q;
  double alpha = 0.0;
  double beta = 0.0;

  void add(CLI::App* cmd, bool reservoir) {
    cmd->add_option("--p", p, "right hop rate")->capture_default_str();
    cmd->add_option("--q", q, "left hop rate (default 1 - p)");
    if (reservoir) {
      cmd->add_option("--alpha", alpha, "injection rate at site 0")->capture_default_str();
      cmd->add_option("--beta", beta, "ejection rate at site 0")->capture_default_str();
    }
  }
  Rates rates() const { return Rates(p, q.value_or(1.0 - p), alpha, beta); }
};

// Records every option of the subcommand, defaults included.
json parameters_of(const CLI::App* cmd) {
  json j = json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "out" || name == "manifest") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      j[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    } else if (opt->get_expected_max() == 0) {
      j[name] = false;
    }
  }
  return j;
}

struct Invocation {
  std::string out_path;
  std::string manifest_path;
  std::optional<unsigned> threads;
  std::function<Output()> action;
  CLI::App* selected = nullptr;
};

void transition_command(CLI::App& app, Invocation& inv) {
  auto* cmd = app.add_subcommand("transition", "transition probability or its Laplace transform");
  auto rates = std::make_shared<RateOptions>();
  auto from = std::make_shared<std::string>(), to = std::make_shared<std::string>();
  auto t = std::make_shared<double>(0.0);
  auto s = std::make_shared<std::optional<double>>();
  auto nodes = std::make_shared<int>(64);
  rates->add(cmd, false);
  cmd->add_option("--from", *from, "initial configuration y, comma-separated sites")->required();
  cmd->add_option("--to", *to, "final configuration x, comma-separated sites")->required();
  cmd->add_option("--t", *t, "time")->capture_default_str();
  cmd->add_option("--laplace-s", *s, "real Laplace argument instead of a time");
  cmd->add_option("--quad-nodes", *nodes, "trapezoid nodes per contour")->capture_default_str();
  cmd->callback([&inv, cmd, rates, from, to, t, s, nodes] {
    inv.selected = cmd;
    inv.action = [=] {
      const Rates r = rates->rates();
      const Configuration y = Configuration::parse(*from), x = Configuration::parse(*to);
      if (x.size() != y.size()) throw DomainError("--from and --to must have the same number of particles");
      Csv csv({"x", "y", "t_or_s", "value", "est_error"});
      if (r.q() == 0.0) {
        if (*s) throw DomainError("--laplace-s needs q > 0; the q = 0 route is time-domain only");
        std::cerr << "note: q = 0, using the TASEP determinant formula\n";
        QuadratureSpec fine = tasep::determinant_quadrature();
        fine.nodes_per_contour *= 2;
        const double v = tasep::tasep_determinant(x, y, *t);
        csv.row(sites(x), sites(y), *t, v, std::abs(tasep::tasep_determinant(x, y, *t, fine) - v));
      } else if (*s) {
        QuadratureSpec quad;
        quad.nodes_per_contour = *nodes;
        const auto e = bethe::evaluate_laplace(x, y, **s, r, quad);
        csv.row(sites(x), sites(y), **s, e.value.real(), e.error_estimate);
      } else if (x.size() == 1) {
        const auto e = bethe::transition_probability_n1(x[0], y[0], *t, r, *nodes);
        csv.row(sites(x), sites(y), *t, e.value, e.error_estimate);
      } else {
        QuadratureSpec quad;
        quad.nodes_per_contour = *nodes;
        const auto e = bethe::evaluate_transition(x, y, *t, r, quad);
        csv.row(sites(x), sites(y), *t, e.value, e.error_estimate);
      }
      return Output{.command = "transition", .text = csv.str()};
    };
  });
}

void figure1_command(CLI::App& app, Invocation& inv) {
  auto* cmd = app.add_subcommand("figure1", "P_n(t), n = 0..3, for TASEP injection into an empty lattice");
  auto alpha = std::make_shared<double>(1.0), t_max = std::make_shared<double>(10.0), dt = std::make_shared<double>(0.05);
  cmd->add_option("--alpha", *alpha, "injection rate")->capture_default_str();
  cmd->add_option("--t-max", *t_max, "end of the time grid")->capture_default_str();
  cmd->add_option("--dt", *dt, "grid step")->capture_default_str();
  cmd->callback([&inv, cmd, alpha, t_max, dt] {
    inv.selected = cmd;
    inv.action = [=] {
      if (!(*dt > 0.0) || !(*t_max > 0.0)) throw DomainError("--dt and --t-max must be positive");
      std::vector<double> grid;
      const auto steps = static_cast<long>(std::floor(*t_max / *dt + 1e-9));
      for (long k = 0; k <= steps; ++k) grid.push_back(static_cast<double>(k) * *dt);
      const auto fig = tasep::figure1_data(*alpha, grid, 3);
      Csv csv({"t", "n", "P_n"});
      for (int n = 0; n <= 3; ++n)
        for (std::size_t k = 0; k < grid.size(); ++k) csv.row(grid[k], n, fig.P[n][k]);
      std::cerr << "n  argmax_t\n";
      for (int n = 0; n <= 3; ++n) std::cerr << n << "  " << fig.argmax[n] << '\n';
      std::cerr << "ordering t*_0 < t*_1 < t*_2 < t*_3: " << (fig.ordering_holds ? "holds" : "fails") << '\n';
      return Output{.command = "figure1", .text = csv.str()};
    };
  });
}

void single_particle_command(CLI::App& app, Invocation& inv) {
  auto* cmd = app.add_subcommand("single-particle", "single-particle ejection and injection laws with simulation");
  auto rates = std::make_shared<RateOptions>();
  auto mode = std::make_shared<std::string>("ejection");
  auto y = std::make_shared<int>(0);
  auto runs = std::make_shared<std::uint64_t>(100000);
  auto seed = std::make_shared<std::uint64_t>(1);
  auto t = std::make_shared<double>(400.0);
  auto L = std::make_shared<int>(200);
  cmd->add_option("--mode", *mode, "ejection or injection")
      ->check(CLI::IsMember({"ejection", "injection"}))
      ->capture_default_str();
  rates->add(cmd, true);
  cmd->add_option("--y", *y, "starting site")->capture_default_str();
  cmd->add_option("--runs", *runs, "simulated trajectories (0 skips simulation)")->capture_default_str();
  cmd->add_option("--seed", *seed, "master seed")->capture_default_str();
  cmd->add_option("--t", *t, "simulation horizon, also the time of the tail estimate")->capture_default_str();
  cmd->add_option("--L", *L, "initial simulation lattice (grown on contact)")->capture_default_str();
  cmd->callback([&inv, cmd, rates, mode, y, runs, seed, t, L] {
    inv.selected = cmd;
    inv.action = [=] {
      const Rates r = rates->rates();
      Csv csv({"mode", "quantity", "y", "formula", "mc_value", "mc_std_error", "runs", "censored_fraction"});
      const auto spec = mc::SimulationSpec{.rates = r, .L = *L,
                                           .initial = mc::InitialCondition::fixed(Configuration({*y})),
                                           .t_max = *t, .observe = {}};
      const double nan = std::numeric_limits<double>::quiet_NaN();
      if (*mode == "ejection") {
        const auto stats = single::ejection_stats(*y, r);
        mc::Estimate e;
        double scale = 1.0;
        if (*runs) {
          if (stats.regime == single::Regime::recurrent) {
            e = mc::mean_hitting_time(spec, mc::HittingEvent::first_eject, *runs, mc::SeedSpec{*seed});
          } else {
            e = mc::never_ejected(spec, *runs, mc::SeedSpec{*seed});
            if (stats.regime == single::Regime::critical) scale = std::sqrt(*t);
          }
        }
        const char* quantity = stats.regime == single::Regime::transient  ? "survival_probability"
                               : stats.regime == single::Regime::critical ? "sqrt_t_survival"
                                                                          : "mean_ejection_time";
        csv.row("ejection", quantity, *y, stats.value, *runs ? scale * e.value : nan, *runs ? scale * e.std_error : nan,
                *runs, e.censored_fraction);
      } else {
        const double formula = single::injection_expected_time(*y, r);
        mc::Estimate e;
        if (*runs) e = mc::mean_hitting_time(spec, mc::HittingEvent::first_inject, *runs, mc::SeedSpec{*seed});
        csv.row("injection", "mean_injection_time", *y, formula, *runs ? e.value : nan, *runs ? e.std_error : nan, *runs,
                e.censored_fraction);
      }
      return Output{.command = "single-particle", .text = csv.str(), .seed = *seed};
    };
  });
}

void ssep_deltaN_command(CLI::App& app, Invocation& inv) {
  auto* cmd = app.add_subcommand("ssep-deltaN", "mean net exchange with the reservoir: asymptotic, inversion, simulation");
  auto alpha = std::make_shared<double>(1.0), beta = std::make_shared<double>(0.0), rho = std::make_shared<double>(0.0);
  auto t = std::make_shared<double>(100.0);
  auto runs = std::make_shared<std::uint64_t>(20000);
  auto seed = std::make_shared<std::uint64_t>(1);
  cmd->add_option("--alpha", *alpha, "injection rate")->capture_default_str();
  cmd->add_option("--beta", *beta, "ejection rate")->capture_default_str();
  cmd->add_option("--rho", *rho, "initial Bernoulli density")->capture_default_str();
  cmd->add_option("--t", *t, "time")->capture_default_str();
  cmd->add_option("--runs", *runs, "simulated trajectories (0 skips simulation)")->capture_default_str();
  cmd->add_option("--seed", *seed, "master seed")->capture_default_str();
  cmd->callback([&inv, cmd, alpha, beta, rho, t, runs, seed] {
    inv.selected = cmd;
    inv.action = [=] {
      const double asym = ssep::deltaN_mean_asymptotic(*t, *rho, *alpha, *beta);
      const double exact = ssep::deltaN_mean(*t, *rho, *alpha, *beta);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      double mean = nan, se = nan;
      if (*runs) {
        const int L = static_cast<int>(std::ceil(4.0 * std::sqrt(*t))) + 50;
        const auto init =
            *rho > 0.0 ? mc::InitialCondition::bernoulli(*rho) : mc::InitialCondition::fixed(Configuration{});
        mc::SimulationSpec spec{.rates = Rates::ssep(*alpha, *beta), .L = L, .initial = init, .t_max = *t,
                                .observe = {*t}};
        spec.policy = *rho > 0.0 ? mc::BoundaryPolicy::reflect : mc::BoundaryPolicy::grow;
        const auto e = mc::deltaN_moments(spec, *runs, mc::SeedSpec{*seed}).front().mean;
        mean = e.value;
        se = e.std_error;
      }
      Csv csv({"t", "asymptotic", "inversion", "mc_mean", "mc_std_error", "runs"});
      csv.row(*t, asym, exact, mean, se, *runs);
      return Output{.command = "ssep-deltaN", .text = csv.str(), .seed = *seed};
    };
  });
}

struct StartOptions {
  std::string from;
  std::optional<double> rho;
  void add(CLI::App* cmd) {
    cmd->add_option("--from", from, "initial configuration, comma-separated sites (empty for none)");
    cmd->add_option("--rho", rho, "Bernoulli initial density instead of --from");
  }
};

void simulate_command(CLI::App& app, Invocation& inv) {
  auto* cmd = app.add_subcommand("simulate", "exact sample paths");
  auto rates = std::make_shared<RateOptions>();
  auto start = std::make_shared<StartOptions>();
  auto L = std::make_shared<int>(64);
  auto t = std::make_shared<double>(1.0);
  auto runs = std::make_shared<std::uint64_t>(1);
  auto seed = std::make_shared<std::uint64_t>(1);
  auto events = std::make_shared<bool>(false);
  auto policy = std::make_shared<std::string>("grow");
  rates->add(cmd, true);
  start->add(cmd);
  cmd->add_option("--L", *L, "lattice size")->capture_default_str();
  cmd->add_option("--t", *t, "end time")->capture_default_str();
  cmd->add_option("--runs", *runs, "trajectories")->capture_default_str();
  cmd->add_option("--seed", *seed, "master seed")->capture_default_str();
  cmd->add_flag("--events", *events, "write every event instead of per-run summaries");
  cmd->add_option("--policy", *policy, "right-edge policy: grow, flag or reflect")
      ->check(CLI::IsMember({"grow", "flag", "reflect"}))
      ->capture_default_str();
  cmd->callback([&inv, cmd, rates, start, L, t, runs, seed, events, policy] {
    inv.selected = cmd;
    inv.action = [=] {
      mc::SimulationSpec spec{.rates = rates->rates(), .L = *L,
                              .initial = start->rho ? mc::InitialCondition::bernoulli(*start->rho)
                                                    : mc::InitialCondition::fixed(Configuration::parse(start->from)),
                              .t_max = *t, .observe = {}};
      spec.policy = *policy == "grow" ? mc::BoundaryPolicy::grow
                    : *policy == "flag" ? mc::BoundaryPolicy::flag
                                        : mc::BoundaryPolicy::reflect;
      spec.record_events = *events;
      const mc::SeedSpec s{*seed};
      if (*events) {
        Csv csv({"run", "time", "type", "site"});
        for (std::uint64_t i = 0; i < *runs; ++i)
          for (const auto& e : mc::simulate(spec, s, i).events) csv.row(i, e.time, mc::to_string(e.type), e.site);
        return Output{.command = "simulate", .text = csv.str(), .seed = *seed};
      }
      Csv csv({"run", "end_time", "delta_n", "count", "first_inject", "first_eject", "L_used", "boundary_contact"});
      for (std::uint64_t i = 0; i < *runs; ++i) {
        const auto tr = mc::simulate(spec, s, i);
        csv.row(i, tr.end_time, tr.delta_n, tr.count(), tr.first_inject, tr.first_eject, tr.L_used,
                tr.boundary_contact ? 1 : 0);
      }
      return Output{.command = "simulate", .text = csv.str(), .seed = *seed};
    };
  });
}

void oracle_command(CLI::App& app, Invocation& inv) {
  auto* cmd = app.add_subcommand("oracle", "exact configuration law on [0, L) by the generator exponential");
  auto rates = std::make_shared<RateOptions>();
  auto start = std::make_shared<StartOptions>();
  auto L = std::make_shared<int>(8);
  auto t = std::make_shared<double>(1.0);
  rates->add(cmd, true);
  start->add(cmd);
  cmd->add_option("--L", *L, "lattice size (at most 16)")->capture_default_str();
  cmd->add_option("--t", *t, "time")->capture_default_str();
  cmd->callback([&inv, cmd, rates, start, L, t] {
    inv.selected = cmd;
    inv.action = [=] {
      auto gen = oracle::build_generator(rates->rates(), LatticeTruncation(*L));
      const auto init = start->rho ? oracle::bernoulli(gen.space(), *start->rho)
                                   : oracle::point_mass(gen.space(), Configuration::parse(start->from));
      const auto d = oracle::evolve(gen, init, *t);
      Csv csv({"configuration", "count", "probability"});
      for (std::size_t i = 0; i < gen.space().size(); ++i) {
        const auto c = Configuration::from_mask(gen.space().mask(i));
        csv.row(sites(c), c.size(), d[i]);
      }
      return Output{.command = "oracle", .text = csv.str()};
    };
  });
}

int dispatch(const std::vector<std::string>& args, Output& result, std::string* out_path, std::string* manifest_path,
             bool apply_threads);

void verify_command(CLI::App& app, Invocation& inv) {
  auto* cmd = app.add_subcommand("verify", "acceptance suite, or replay of run manifests");
  auto suite = std::make_shared<std::string>("fast");
  auto only = std::make_shared<std::vector<int>>();
  auto replay = std::make_shared<std::vector<std::string>>();
  cmd->add_option("--suite", *suite, "fast or full")->check(CLI::IsMember({"fast", "full"}))->capture_default_str();
  cmd->add_option("--only", *only, "criterion ids to run")->delimiter(',');
  cmd->add_option("--replay", *replay, "manifests to re-run and compare by output digest");
  cmd->callback([&inv, cmd, suite, only, replay] {
    inv.selected = cmd;
    inv.action = [=] {
      Output out{.command = "verify"};
      if (!replay->empty()) {
        json list = json::array();
        bool ok = true;
        for (const auto& path : *replay) {
          const auto m = RunManifest::load(path);
          Output again;
          const int code = dispatch(m.arguments, again, nullptr, nullptr, false);
          const std::string digest = sha256_hex(again.text);
          const bool same = code == kExitOk && digest == m.output_digest;
          ok = ok && same;
          std::cerr << (same ? "PASS " : "FAIL ") << path << " (" << m.command << ")\n";
          list.push_back({{"manifest", path}, {"command", m.command}, {"expected_digest", m.output_digest},
                          {"digest", digest}, {"exit_code", code}, {"reproduced", same}});
        }
        out.text = json{{"replays", list}, {"all_reproduced", ok}}.dump(2) + "\n";
        out.exit_code = ok ? kExitOk : kExitVerification;
        return out;
      }
      const auto report = acceptance::run(acceptance::parse_suite(*suite), *only, &std::cerr);
      out.text = report.to_json().dump(2) + "\n";
      out.exit_code = report.all_passed() ? kExitOk : kExitVerification;
      return out;
    };
  });
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::accuracy:
    case ErrorKind::truncation:
    case ErrorKind::conditioning:
    case ErrorKind::inversion:
    case ErrorKind::censoring:
      return kExitAccuracy;
    default:
      return kExitDomain;
  }
}

int dispatch(const std::vector<std::string>& args, Output& result, std::string* out_path, std::string* manifest_path,
             bool apply_threads) {
  CLI::App app{"Exclusion processes with an open boundary: exact kernels, open-boundary solver, simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  Invocation inv;
  app.add_option("--threads", inv.threads, "worker thread cap (default: ASEP_THREADS or all cores)");
  app.add_option("--out", inv.out_path, "output file (default: standard output)");
  app.add_option("--manifest", inv.manifest_path, "run manifest path (default: <out>.manifest.json)");
  transition_command(app, inv);
  figure1_command(app, inv);
  single_particle_command(app, inv);
  ssep_deltaN_command(app, inv);
  simulate_command(app, inv);
  oracle_command(app, inv);
  verify_command(app, inv);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitDomain;
  }
  if (apply_threads && inv.threads) set_thread_cap(*inv.threads);
  try {
    result = inv.action();
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  result.parameters = parameters_of(inv.selected);
  if (out_path) *out_path = inv.out_path;
  if (manifest_path) *manifest_path = inv.manifest_path;
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  const auto start = std::chrono::steady_clock::now();
  Output result;
  std::string out_path, manifest_path;
  const int code = dispatch(args, result, &out_path, &manifest_path, true);
  if (result.command.empty()) return code;
  if (out_path.empty()) {
    std::cout << result.text;
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "error: cannot write " << out_path << '\n';
      return kExitDomain;
    }
    out << result.text;
  }
  RunManifest m;
  m.command = result.command;
  m.arguments = args;
  m.parameters = result.parameters;
  m.seed = result.seed;
  m.version = version();
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.output_digest = sha256_hex(result.text);
  m.deterministic = true;
  if (manifest_path.empty()) manifest_path = out_path.empty() ? "asep-" + result.command + ".manifest.json"
                                                              : out_path + ".manifest.json";
  try {
    m.save(manifest_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return code;
}
