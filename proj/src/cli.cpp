#include "ruinwalk/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ruinwalk/errors.hpp"
#include "ruinwalk/initial_values.hpp"
#include "ruinwalk/kernels.hpp"
#include "ruinwalk/model_io.hpp"
#include "ruinwalk/oracle.hpp"
#include "ruinwalk/survival.hpp"

namespace ruinwalk::cli {

using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc{}) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }
  return std::string(buf, res.ptr);
}

namespace {

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// Artifacts are assembled in memory and written only once the whole run has
// succeeded, so a failing run leaves no files behind.
struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;

  void add(const std::string& path, std::string content) {
    if (!path.empty()) files.emplace_back(path, std::move(content));
  }
  void write() const {
    for (const auto& [path, content] : files) {
      std::ofstream f(path, std::ios::binary);
      if (!f) throw DomainError("cannot write " + path);
      f << content;
    }
  }
};

json roots_json(const RootSet& rs) {
  json arr = json::array();
  for (const Root& r : rs.roots)
    arr.push_back({{"re", r.value.real()},
                   {"im", r.value.imag()},
                   {"multiplicity", r.multiplicity},
                   {"residual", r.residual}});
  return arr;
}

json model_json(const BuiltModel& bm) {
  const RiskModel& m = bm.model;
  json j{{"claim", {{"pmf", to_json(m.claim())}}},
         {"interarrival", {{"pmf", to_json(m.interarrival())}}},
         {"m", m.m()},
         {"step_bound", m.step_bound()},
         {"drift", m.drift()},
         {"original_drift", bm.original_drift}};
  if (bm.original_tail) j["original_lower_tail"] = *bm.original_tail;
  return j;
}

std::string roots_csv(const RootSet& rs) {
  std::string s = "re,im,multiplicity,residual\n";
  for (const Root& r : rs.roots)
    s += format_double(r.value.real()) + "," + format_double(r.value.imag()) + "," +
         std::to_string(r.multiplicity) + "," + format_double(r.residual) + "\n";
  return s;
}

std::string system_csv(const InitSystem& sys) {
  std::string s = "row,label,col,re,im\n";
  for (int r = 0; r < sys.m; ++r) {
    const std::string head = std::to_string(r) + "," + sys.row_kinds[r].label() + ",";
    for (int c = 0; c < sys.m; ++c)
      s += head + std::to_string(c) + "," + format_double(sys(r, c).real()) + "," +
           format_double(sys(r, c).imag()) + "\n";
    s += head + "rhs," + format_double(sys.rhs[r].real()) + "," +
         format_double(sys.rhs[r].imag()) + "\n";
  }
  return s;
}

void add_root_options(CLI::App* sub, RootOptions& o) {
  sub->add_option("--cluster-tol", o.cluster_tol, "Merge roots closer than this")
      ->capture_default_str();
  sub->add_option("--exclusion-radius", o.exclusion_radius, "Discard roots this close to s = 1")
      ->capture_default_str();
  sub->add_option("--boundary-tol", o.boundary_tol, "Slack on |s| <= 1")->capture_default_str();
  sub->add_option("--residual-tol", o.residual_tol, "Max |G(s) - 1| at a root")
      ->capture_default_str();
  sub->add_option("--max-polish-shift", o.max_polish_shift, "Max distance polishing may move a root")
      ->capture_default_str();
  sub->add_option("--real-tol", o.real_tol, "Snap |Im| below this to the real axis")
      ->capture_default_str();
}

struct SolveArgs {
  std::string model;
  int u_max = 10;
  std::string method = "linear";
  std::string out, report, dump_system, xi;
  int xi_terms = 20;
  int digits = 3;
  bool no_fallback = false;
  RootOptions roots;
  UltimateOptions ultimate;
};

struct FiniteArgs {
  std::string model;
  int u_max = 10;
  int t_max = 10;
  std::string out;
  int digits = 3;
};

struct RootsArgs {
  std::string model;
  std::string out, svg;
  RootOptions roots;
};

struct SimulateArgs {
  std::string model;
  long paths = 1000000;
  int horizon = 200;
  std::optional<std::uint64_t> seed;
  std::vector<int> u{0};
  int shards = 8;
  int threads = 0;
  std::string out;
};

struct TruncateArgs {
  std::string model;
  std::optional<int> m, l;
  std::string out;
};

BuiltModel load(const std::string& path) { return build_model(load_model_spec(path)); }

void warn(std::ostream& err, const std::string& msg) { err << "warning: " << msg << "\n"; }

int do_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  if (a.u_max < 0) throw DomainError("--u-max must be >= 0");
  const BuiltModel bm = load(a.model);
  const RiskModel& model = bm.model;
  model.require_net_profit();
  const RootSet rs = unit_disk_roots(model, a.roots);
  const InitSystem sys = build_system(model, rs);
  InitialValues iv;
  if (a.method == "linear")
    iv = solve_linear(model, rs);
  else
    iv = solve_closed_form(model, rs);
  UltimateOptions uo = a.ultimate;
  uo.allow_fallback = !a.no_fallback;
  const SurvivalTable table = ultimate_survival(model, iv, a.u_max, uo);

  std::vector<std::string> warnings;
  if (table.used_fallback())
    warnings.push_back("phi(u) for u >= " + std::to_string(table.fallback_from) +
                       " taken from finite-time phi(u, T) with T = " +
                       std::to_string(table.horizon_T) + " (recurrence beyond its stable range)");
  json bounds;
  if (bm.original_tail) {
    const TruncationBounds tb = truncation_bounds(model, *bm.original_tail, table);
    bounds = {{"lower", tb.lower}, {"upper", tb.upper}};
    warnings.push_back("interarrival truncated at m = " + std::to_string(model.m()) +
                       "; untruncated lower tail P(X - c*theta <= -(m+1)) = " +
                       format_double(*bm.original_tail));
  }
  if (model.step_bound() != model.m())
    warnings.push_back("claim has no mass at 0; using step bound " +
                       std::to_string(model.step_bound()) + " in place of m = " +
                       std::to_string(model.m()));

  std::string csv_full = "u,phi\n", csv_show = "u,phi\n";
  for (int u = 0; u <= a.u_max; ++u) {
    const double p = table.phi[static_cast<std::size_t>(u)];
    csv_full += std::to_string(u) + "," + format_double(p) + "\n";
    csv_show += std::to_string(u) + "," + fixed(p, a.digits) + "\n";
  }

  Artifacts art;
  art.add(a.out, csv_full);
  art.add(a.dump_system, system_csv(sys));
  std::vector<double> xi;
  if (!a.xi.empty() || !a.report.empty()) xi = xi_coeffs(model, iv, rs, a.xi_terms);
  if (!a.xi.empty()) {
    std::string s = "k,xi\n";
    for (std::size_t k = 0; k < xi.size(); ++k)
      s += std::to_string(k) + "," + format_double(xi[k]) + "\n";
    art.add(a.xi, s);
  }
  if (!a.report.empty()) {
    std::vector<double> phi(table.phi.begin(), table.phi.begin() + a.u_max + 1);
    json rep{{"model", model_json(bm)},
             {"method", a.method},
             {"roots", roots_json(rs)},
             {"pi", iv.pi},
             {"pi_error", iv.error},
             {"phi", phi},
             {"xi", xi},
             {"residuals",
              {{"system", iv.residual},
               {"root_equation", root_equation_residual(model, rs, iv)},
               {"recurrence", table.residual},
               {"max_imag", iv.max_imag}}},
             {"fallback_from", table.fallback_from},
             {"horizon_T", table.horizon_T},
             {"warnings", warnings}};
    if (!bounds.is_null()) rep["truncation_bounds"] = bounds;
    art.add(a.report, rep.dump(2) + "\n");
  }
  art.write();
  for (const auto& w : warnings) warn(err, w);
  out << csv_show;
  return 0;
}

int do_finite(const FiniteArgs& a, std::ostream& out, std::ostream&) {
  if (a.u_max < 0 || a.t_max < 1) throw DomainError("need --u-max >= 0 and --t-max >= 1");
  const BuiltModel bm = load(a.model);
  const auto grid = finite_survival_grid(bm.model, a.u_max, a.t_max);
  std::string full = "u,T,phi\n", show = "u,T,phi\n";
  for (const SurvivalTable& t : grid)
    for (int u = 0; u <= a.u_max; ++u) {
      const std::string head = std::to_string(u) + "," + std::to_string(t.horizon_T) + ",";
      const double p = t.phi[static_cast<std::size_t>(u)];
      full += head + format_double(p) + "\n";
      show += head + fixed(p, a.digits) + "\n";
    }
  Artifacts art;
  art.add(a.out, full);
  art.write();
  out << show;
  return 0;
}

int do_roots(const RootsArgs& a, std::ostream& out, std::ostream&) {
  const BuiltModel bm = load(a.model);
  bm.model.require_net_profit();
  const RootSet rs = unit_disk_roots(bm.model, a.roots);
  const std::string csv = roots_csv(rs);
  Artifacts art;
  art.add(a.out, csv);
  art.add(a.svg, roots_svg(rs, "m = " + std::to_string(rs.m)));
  art.write();
  out << csv;
  return 0;
}

int do_simulate(const SimulateArgs& a, std::ostream& out, std::ostream&) {
  const BuiltModel bm = load(a.model);
  SimConfig cfg;
  cfg.n_paths = a.paths;
  cfg.horizon_T = a.horizon;
  cfg.seed = a.seed ? *a.seed : default_seed();
  cfg.u_values = a.u;
  cfg.shards = a.shards;
  cfg.threads = a.threads;
  const SimResult r = simulate(bm.model, cfg);
  std::string csv = "u,estimate,se\n";
  for (std::size_t i = 0; i < r.u_values.size(); ++i)
    csv += std::to_string(r.u_values[i]) + "," + format_double(r.estimate[i]) + "," +
           format_double(r.se[i]) + "\n";
  Artifacts art;
  art.add(a.out, csv);
  art.write();
  out << csv;
  return 0;
}

int do_truncate(const TruncateArgs& a, std::ostream& out, std::ostream&) {
  ModelSpec spec = load_model_spec(a.model);
  if (a.m) spec.truncate_m = *a.m;
  if (a.l) spec.rebalance_l = *a.l;
  if (!spec.truncate_m) throw DomainError("no truncation level: pass --m or set truncate_m");
  const BuiltModel bm = build_model(spec);
  json j = model_json(bm);
  j["source"] = {{"claim", to_json(spec.claim)}, {"interarrival", to_json(spec.interarrival)}};
  if (spec.rebalance_l) j["rebalance_l"] = *spec.rebalance_l;
  const std::string text = j.dump(2) + "\n";
  Artifacts art;
  art.add(a.out, text);
  art.write();
  out << text;
  return 0;
}

}  // namespace

std::string roots_svg(const RootSet& rs, const std::string& title) {
  constexpr double size = 480.0, centre = 240.0, radius = 200.0;
  auto px = [&](double v) { return fixed(centre + radius * v, 3); };
  auto py = [&](double v) { return fixed(centre - radius * v, 3); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
    << "\" viewBox=\"0 0 " << size << " " << size << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<line x1=\"" << px(-1.1) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1.1) << "\" y2=\""
    << py(0) << "\" stroke=\"#999\" stroke-width=\"1\"/>\n"
    << "<line x1=\"" << px(0) << "\" y1=\"" << py(-1.1) << "\" x2=\"" << px(0) << "\" y2=\""
    << py(1.1) << "\" stroke=\"#999\" stroke-width=\"1\"/>\n"
    << "<circle cx=\"" << px(0) << "\" cy=\"" << py(0) << "\" r=\"" << fixed(radius, 3)
    << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n"
    << "<circle cx=\"" << px(1) << "\" cy=\"" << py(0)
    << "\" r=\"4\" fill=\"none\" stroke=\"#555\" stroke-width=\"1\"/>\n"
    << "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << ", "
    << rs.total_multiplicity() << " roots</text>\n";
  for (const Root& r : rs.roots) {
    s << "<circle cx=\"" << px(r.value.real()) << "\" cy=\"" << py(r.value.imag())
      << "\" r=\"3.5\" fill=\"#c0392b\"/>\n";
    if (r.multiplicity > 1)
      s << "<circle cx=\"" << px(r.value.real()) << "\" cy=\"" << py(r.value.imag())
        << "\" r=\"7\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Survival probabilities for discrete renewal risk models", "ruinwalk"};
  app.require_subcommand(1);
  std::string kernels = "auto";
  app.add_option("--kernels", kernels, "Kernel backend: auto, scalar or avx2")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Ultimate survival phi(u), u = 0..u-max");
  solve->add_option("model", sa.model, "Model JSON file")->required();
  solve->add_option("--u-max", sa.u_max, "Largest initial surplus")->capture_default_str();
  solve->add_option("--t-max", sa.ultimate.max_T, "Largest T tried by the finite-time fallback")
      ->capture_default_str();
  solve->add_option("--method", sa.method, "Initial values by 'linear' solve or 'closed' form")
      ->capture_default_str()
      ->check(CLI::IsMember({"linear", "closed"}));
  solve->add_option("--out", sa.out, "Write CSV u,phi at full precision");
  solve->add_option("--report", sa.report, "Write a JSON run report");
  solve->add_option("--dump-system", sa.dump_system, "Write the initial-value system as CSV");
  solve->add_option("--xi", sa.xi, "Write Taylor coefficients of Xi(s) as CSV");
  solve->add_option("--xi-terms", sa.xi_terms, "Number of Xi coefficients")->capture_default_str();
  solve->add_option("--digits", sa.digits, "Decimals shown on stdout")->capture_default_str();
  solve->add_flag("--no-fallback", sa.no_fallback,
                  "Fail instead of using phi(u, T) past the recurrence's stable range");
  solve->add_option("--bracket-tol", sa.ultimate.bracket_tol, "Fallback stops when phi(u,T) and phi(u,2T) agree this closely")
      ->capture_default_str();
  solve->add_option("--horizon-tol", sa.ultimate.horizon_tol, "Predicted recurrence error allowed")
      ->capture_default_str();
  solve->add_option("--check-tol", sa.ultimate.check_tol, "Slack on [0,1] bounds and monotonicity")
      ->capture_default_str();
  add_root_options(solve, sa.roots);

  FiniteArgs fa;
  auto* finite = app.add_subcommand("finite", "Finite-time survival phi(u, T), T = 1..t-max");
  finite->add_option("model", fa.model, "Model JSON file")->required();
  finite->add_option("--u-max", fa.u_max, "Largest initial surplus")->capture_default_str();
  finite->add_option("--t-max", fa.t_max, "Largest horizon")->capture_default_str();
  finite->add_option("--out", fa.out, "Write CSV u,T,phi at full precision");
  finite->add_option("--digits", fa.digits, "Decimals shown on stdout")->capture_default_str();

  RootsArgs ra;
  auto* roots = app.add_subcommand("roots", "Roots of G(s) = 1 in the unit disk");
  roots->add_option("model", ra.model, "Model JSON file")->required();
  roots->add_option("--out", ra.out, "Write CSV re,im,multiplicity,residual");
  roots->add_option("--svg", ra.svg, "Write an SVG plot of the roots and the unit circle");
  add_root_options(roots, ra.roots);

  SimulateArgs ma;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo estimate of phi(u, T)");
  sim->add_option("model", ma.model, "Model JSON file")->required();
  sim->add_option("--paths", ma.paths, "Number of sample paths")->capture_default_str();
  sim->add_option("--horizon", ma.horizon, "Number of steps T")->capture_default_str();
  sim->add_option("--seed", ma.seed,
                  "Seed (default: RUINWALK_SEED, else " + std::to_string(kDefaultSeed) + ")");
  sim->add_option("--u", ma.u, "Initial surpluses, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  sim->add_option("--shards", ma.shards, "Seed substreams")->capture_default_str();
  sim->add_option("--threads", ma.threads, "Worker threads (0: all cores)")->capture_default_str();
  sim->add_option("--out", ma.out, "Write CSV u,estimate,se");

  TruncateArgs ta;
  auto* trunc = app.add_subcommand("truncate", "Print the truncated (and rebalanced) model");
  trunc->add_option("model", ta.model, "Model JSON file")->required();
  trunc->add_option("--m", ta.m, "Truncation level (overrides truncate_m)");
  trunc->add_option("--l", ta.l, "Rebalance point (overrides rebalance_l)");
  trunc->add_option("--out", ta.out, "Write the JSON to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (kernels == "scalar")
      kernels::set_backend(kernels::Backend::scalar);
    else if (kernels == "avx2")
      kernels::set_backend(kernels::Backend::avx2);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*solve) return do_solve(sa, out, err);
    if (*finite) return do_finite(fa, out, err);
    if (*roots) return do_roots(ra, out, err);
    if (*sim) return do_simulate(ma, out, err);
    return do_truncate(ta, out, err);
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const ResourceError& e) {
    err << "resource limit: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace ruinwalk::cli
