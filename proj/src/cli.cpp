// SPDX-License-Identifier: Apache-2.0
#include "annulus/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "annulus/conformal.hpp"
#include "annulus/error.hpp"
#include "annulus/loewner.hpp"
#include "annulus/mc.hpp"
#include "annulus/parallel.hpp"
#include "annulus/pde.hpp"
#include "annulus/special_fn.hpp"
#include "annulus/xval.hpp"

namespace annulus::cli {
namespace {

using json = nlohmann::ordered_json;
constexpr double kPi = std::numbers::pi;
constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------- output

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// One table; cells are kept as text so CSV and JSON print the same digits.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> r) { rows.push_back(std::move(r)); }
};

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) {
    if (c == '"') o += '"';
    o += c;
  }
  return o + "\"";
}

json cell_json(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  if (s == "nan" || s == "inf" || s == "-inf") return nullptr;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) return s;
  if (s.find_first_of(".eE") == std::string::npos) return std::stoll(s);
  return v;
}

void write_table(std::ostream& os, const json& meta, const Table& t, const std::string& format) {
  if (format == "json") {
    json doc;
    doc["meta"] = meta;
    doc["columns"] = t.columns;
    json rows = json::array();
    for (const auto& r : t.rows) {
      json jr = json::array();
      for (const auto& c : r) jr.push_back(cell_json(c));
      rows.push_back(std::move(jr));
    }
    doc["rows"] = std::move(rows);
    os << doc.dump(2) << '\n';
    return;
  }
  os << "# " << meta.dump() << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
    os << '\n';
  }
}

std::string flag(bool b) { return b ? "true" : "false"; }

// ---------------------------------------------------------------- options

struct Common {
  std::string out;
  std::string format = "csv";
  int threads = 0;
};

struct Param {
  std::optional<double> a, q;
  double value() const {
    if (a && q) throw DomainError("give either --a or --q, not both");
    if (q) {
      if (!(*q > 0.0 && *q < 1.0)) throw DomainError("--q must lie in (0, 1)");
      return std::log(*q);
    }
    if (!a) throw DomainError("--a or --q is required");
    if (!(*a < 0.0)) throw DomainError("--a must be negative");
    return *a;
  }
};

void check_x(double x) {
  if (!(x >= 0.0 && x <= 2.0 * kPi)) throw DomainError("x must lie in [0, 2pi], got " + num(x));
}

const auto kNonNeg = CLI::Range(0, 1 << 20);

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out,-o", c.out, "Output file (default: stdout)");
  app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--threads", c.threads, "Worker threads (0: ANNULUS_SLE_THREADS or all cores)")->check(kNonNeg);
}

void add_param(CLI::App* app, Param& p) {
  app->add_option("--a", p.a, "Log-modulus a < 0");
  app->add_option("--q", p.q, "Modulus q = e^a in (0, 1)");
}

json base_meta(const std::string& sub, const Common& c) {
  json m;
  m["tool"] = "annulus_sle";
  m["version"] = kVersion;
  m["subcommand"] = sub;
  m["threads"] = resolve_threads(c.threads);
  return m;
}

// ---------------------------------------------------------------- subcommands

struct EvalOpts {
  Common c;
  Param p;
  std::string fn;
  std::vector<double> x{kPi};
  double zr = 0.0, zi = 0.0;
};

Table do_eval(const EvalOpts& o, json& cfg) {
  using special::cplx;
  const bool needs_p = o.fn != "dilog_pair" && o.fn != "xi1";
  const double a = needs_p ? o.p.value() : std::numeric_limits<double>::quiet_NaN();
  for (double x : o.x) check_x(x);
  cfg = {{"fn", o.fn}, {"a", a}, {"x", o.x}, {"z", {o.zr, o.zi}}};
  const cplx z(o.zr, o.zi);
  Table t{{"fn", "a", "x", "z_re", "z_im", "re", "im"}, {}};
  auto row = [&](double x, cplx v) { t.add({o.fn, num(a), num(x), num(z.real()), num(z.imag()), num(v.real()), num(v.imag())}); };
  auto per_x = [&](const std::function<cplx(double)>& f) {
    for (double x : o.x) row(x, f(x));
  };
  std::optional<AnnulusParam> p;
  if (needs_p) p.emplace(a);
  if (o.fn == "eta") {
    row(std::nan(""), special::eta(*p));
  } else if (o.fn == "eta_over_pi") {
    row(std::nan(""), special::eta_over_pi(*p));
  } else if (o.fn == "theta1") {
    per_x([&](double x) { return cplx(special::theta1(x, *p)); });
  } else if (o.fn == "theta1_over_sin") {
    per_x([&](double x) { return cplx(special::theta1_over_sin(x, *p)); });
  } else if (o.fn == "log_theta_ratio") {
    per_x([&](double x) { return cplx(special::log_theta_ratio(x, *p)); });
  } else if (o.fn == "zeta") {
    row(std::nan(""), special::weier_zeta(z, *p));
  } else if (o.fn == "wp") {
    row(std::nan(""), special::weier_p(z, *p));
  } else if (o.fn == "xi1") {
    per_x([&](double x) { return special::xi1(z, x); });
  } else if (o.fn == "xi2") {
    per_x([&](double x) { return special::xi2(z, x, *p); });
  } else if (o.fn == "dilog_pair") {
    per_x([&](double x) { return cplx(special::dilog_pair(x)); });
  } else if (o.fn == "modulus_L") {
    const auto m = conformal::modulus_L(*p);
    row(std::nan(""), cplx(m.L, m.one_minus_L));
  } else if (o.fn == "change_factor") {
    per_x([&](double x) { return cplx(conformal::change_factor(a, x)); });
  } else if (o.fn == "boundary_u") {
    per_x([&](double x) { return cplx(conformal::boundary_u(a, x)); });
  } else if (o.fn == "pde_drift" || o.fn == "pde_potential") {
    per_x([&](double x) {
      const auto k = pde::pde_coefficients(x, *p);
      return cplx(o.fn == "pde_drift" ? k.drift : k.potential);
    });
  } else if (o.fn == "galerkin") {
    per_x([&](double x) { return cplx(pde::galerkin_first_mode(a, x)); });
  } else if (o.fn == "prefactor") {
    per_x([&](double x) { return cplx(mc::prefactor(x, *p)); });
  } else {
    throw DomainError("unknown --fn " + o.fn);
  }
  return t;
}

struct BracketOpts {
  Common c;
  std::vector<double> a, q, x{kPi};
};

std::vector<double> a_list(const std::vector<double>& a, const std::vector<double>& q) {
  if (!a.empty() && !q.empty()) throw DomainError("give either --a or --q, not both");
  std::vector<double> out;
  for (double v : a) out.push_back(Param{v, std::nullopt}.value());
  for (double v : q) out.push_back(Param{std::nullopt, v}.value());
  if (out.empty()) throw DomainError("--a or --q is required");
  return out;
}

Table do_bracket(const BracketOpts& o, json& cfg) {
  const auto as = a_list(o.a, o.q);
  for (double x : o.x) check_x(x);
  cfg = {{"a", as}, {"x", o.x}};
  Table t{{"a", "x", "lower", "upper", "log_lower", "log_upper"}, {}};
  for (double a : as) {
    for (double x : o.x) {
      const auto b = conformal::bracket_F(a, x);
      t.add({num(a), num(x), num(b.lower), num(b.upper), num(b.log_lower), num(b.log_upper)});
    }
  }
  return t;
}

struct PdeOpts {
  Common c;
  double a_start = -0.02, a_end = -4.0;
  int nx = 2048;
  double dtau_max = 1e-2;
  bool richardson = false;
  std::vector<double> at;
  int level_stride = 1, node_stride = 1;
};

Table do_pde(const PdeOpts& o, json& cfg) {
  if (!(o.a_start < 0.0 && o.a_end < o.a_start)) throw DomainError("need a_end < a_start < 0");
  if (o.nx < 16 || o.nx % 2 != 0) throw DomainError("--nx must be even and >= 16");
  if (!(o.dtau_max > 0.0)) throw DomainError("--dtau-max must be positive");
  if (o.level_stride < 1 || o.node_stride < 1) throw DomainError("strides must be >= 1");
  for (double a : o.at) {
    if (!(a <= o.a_start && a >= o.a_end)) throw DomainError("--at values must lie in [a_end, a_start]");
  }
  pde::GridConfig g;
  g.nx = o.nx;
  g.dtau_max = o.dtau_max;
  g.required_levels = o.at;
  g.threads = o.c.threads;
  cfg = {{"a_start", o.a_start}, {"a_end", o.a_end}, {"nx", o.nx}, {"dtau_max", o.dtau_max},
         {"richardson", o.richardson}, {"at", o.at}, {"level_stride", o.level_stride},
         {"node_stride", o.node_stride}};
  const auto sol = o.richardson ? pde::solve_richardson(o.a_start, o.a_end, g) : pde::solve(o.a_start, o.a_end, g);
  cfg["levels"] = sol.n_levels();
  cfg["max_asymmetry"] = sol.max_asymmetry;
  cfg["richardson_correction"] = sol.richardson_correction;
  Table t{{"a", "x", "F", "H"}, {}};
  auto emit_level = [&](std::size_t k) {
    for (std::size_t j = 0; j < sol.x.size(); j += static_cast<std::size_t>(o.node_stride)) {
      const double f = std::clamp(sol.F_at(k, j), 0.0, 1.0);  // rounding can leave [0, 1] by ~1e-16
      t.add({num(sol.a[k]), num(sol.x[j]), num(f), num(1.0 - f)});
    }
  };
  if (!o.at.empty()) {
    for (double a : o.at) {
      for (std::size_t k = 0; k < sol.n_levels(); ++k) {
        if (sol.a[k] == a) {
          emit_level(k);
          break;
        }
      }
    }
  } else {
    for (std::size_t k = 0; k < sol.n_levels(); k += static_cast<std::size_t>(o.level_stride)) emit_level(k);
  }
  return t;
}

struct McOpts {
  Common c;
  Param p;
  std::vector<double> x{kPi};
  long paths = 100000;
  std::uint64_t seed = mc::kDefaultSeed;
  double db = mc::LegendreConfig{}.db_base;
  bool shifted_integrand = false;
  std::string scheme = "split";
  std::vector<double> checkpoints;
};

Table do_mc(const McOpts& o, json& cfg) {
  const double a = o.p.value();
  for (double x : o.x) check_x(x);
  if (o.paths < 2) throw DomainError("--paths must be >= 2");
  if (!(o.db > 0.0 && o.db <= 0.1)) throw DomainError("--db must lie in (0, 0.1]");
  mc::LegendreConfig lc;
  lc.db_base = o.db;
  lc.shifted_integrand = o.shifted_integrand;
  lc.scheme = o.scheme == "euler" ? mc::Scheme::Euler : mc::Scheme::Split;
  cfg = {{"a", a}, {"x", o.x}, {"paths", o.paths}, {"seed", o.seed}, {"db", o.db}, {"scheme", o.scheme},
         {"shifted_integrand", o.shifted_integrand}, {"checkpoints", o.checkpoints}};
  if (!o.checkpoints.empty()) {
    if (o.x.size() != 1) throw DomainError("martingale mode takes a single --x");
    for (double c : o.checkpoints) {
      if (!(c > a && c < 0.0)) throw DomainError("checkpoints must lie in (a, 0)");
    }
    pde::GridConfig g;
    g.nx = 1024;
    g.required_levels = o.checkpoints;
    g.required_levels.push_back(a);
    g.threads = o.c.threads;
    const double top = std::max(-0.02, *std::max_element(o.checkpoints.begin(), o.checkpoints.end()));
    const auto sol = pde::solve_richardson(top, a, g);
    const auto rep = mc::martingale_check(a, o.x[0], o.checkpoints, sol, o.paths, lc, o.seed, o.c.threads);
    cfg["f0"] = rep.f0;
    Table t{{"a0", "x", "checkpoint", "mean", "stderr", "deviation_sigma", "f0"}, {}};
    for (const auto& r : rep.rows) {
      t.add({num(a), num(o.x[0]), num(r.a), num(r.mean), num(r.stderr_), num(r.deviation), num(rep.f0)});
    }
    return t;
  }
  Table t{{"a", "x", "n_paths", "estimate", "stderr", "n_absorbed", "n_killed", "n_invalid"}, {}};
  for (double x : o.x) {
    const auto e = mc::estimate_F_feynman_kac(a, x, o.paths, lc, o.seed, o.c.threads);
    t.add({num(a), num(x), std::to_string(e.n_paths), num(e.mean), num(e.stderr_), std::to_string(e.n_absorbed),
           std::to_string(e.n_killed), std::to_string(e.n_invalid)});
  }
  return t;
}

struct SleOpts {
  Common c;
  Param p;
  std::vector<double> x{kPi};
  long paths = 10000;
  std::uint64_t seed = loewner::kDefaultSeed;
  bool validate = false;
  double c_val = 1.0, d_val = 1.0;
  loewner::DirectConfig dc;
};

Table do_sle(const SleOpts& o, json& cfg, std::ostream& err) {
  if (o.paths < 2) throw DomainError("--paths must be >= 2");
  cfg = {{"paths", o.paths}, {"seed", o.seed}, {"rel_step", o.dc.rel_step}, {"near_frac", o.dc.near_frac},
         {"accept_radius", o.dc.accept_radius}, {"hit_eps", o.dc.hit_eps}, {"T_max", o.dc.T_max},
         {"moment_anchor", o.dc.moment_anchor}};
  auto warn = [&](const loewner::DirectEstimate& e) {
    if (e.n_truncated * 100 > e.n_paths) {
      err << "warning: early accept did not trigger for " << e.n_truncated << " of " << e.n_paths << " paths\n";
    }
  };
  auto early = [](const loewner::DirectEstimate& e) {
    return num(static_cast<double>(e.n_accepted_early) / static_cast<double>(e.n_paths));
  };
  if (o.validate) {
    if (!(o.c_val > 0.0 && o.d_val > 0.0)) throw DomainError("--c and --d must be positive");
    cfg["c"] = o.c_val;
    cfg["d"] = o.d_val;
    const auto e = loewner::estimate_slit_validation(o.c_val, o.d_val, o.paths, o.dc, o.seed, o.c.threads);
    warn(e);
    Table t{{"c", "d", "n_paths", "estimate", "stderr", "exact", "accepted_early_fraction"}, {}};
    t.add({num(o.c_val), num(o.d_val), std::to_string(e.n_paths), num(e.mean), num(e.stderr_),
           num(conformal::slit_avoid_prob(o.c_val, o.d_val)), early(e)});
    return t;
  }
  const double a = o.p.value();
  for (double x : o.x) {
    if (!(x > 0.0 && x < 2.0 * kPi)) throw DomainError("sle: x must lie in (0, 2pi)");
  }
  cfg["a"] = a;
  cfg["x"] = o.x;
  Table t{{"a", "x", "n_paths", "estimate", "stderr", "accepted_early_fraction"}, {}};
  for (double x : o.x) {
    const auto e = loewner::estimate_F_direct(a, x, o.paths, o.dc, o.seed, o.c.threads);
    warn(e);
    t.add({num(a), num(x), std::to_string(e.n_paths), num(e.mean), num(e.stderr_), early(e)});
  }
  return t;
}

struct CompareOpts {
  Common c;
  std::string points;
  std::vector<double> a, q, x;
  long paths = 100000;
  long direct_paths = 0;
  std::uint64_t seed = mc::kDefaultSeed;
  std::uint64_t direct_seed = loewner::kDefaultSeed;
  bool richardson = true;
  int nx = 1024;
};

std::vector<std::pair<double, double>> read_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read points file " + path);
  std::vector<std::pair<double, double>> pts;
  std::string line;
  bool use_q = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_of("aqx") != std::string::npos) {  // header
      use_q = line.rfind("q", 0) == 0;
      continue;
    }
    std::stringstream ss(line);
    double u = 0.0, x = 0.0;
    char comma = 0;
    if (!(ss >> u >> comma >> x) || comma != ',') throw DomainError("bad points line: " + line);
    pts.emplace_back(use_q ? Param{std::nullopt, u}.value() : Param{u, std::nullopt}.value(), x);
  }
  if (pts.empty()) throw DomainError("no points in " + path);
  return pts;
}

Table do_compare(const CompareOpts& o, json& cfg) {
  std::vector<std::pair<double, double>> pts;
  if (!o.points.empty()) {
    pts = read_points(o.points);
  } else {
    if (o.x.empty()) throw DomainError("--x is required without --points");
    for (double a : a_list(o.a, o.q)) {
      for (double x : o.x) pts.emplace_back(a, x);
    }
  }
  for (const auto& pt : pts) check_x(pt.second);
  if (o.paths < 0 || o.direct_paths < 0) throw DomainError("path counts must be >= 0");
  if (o.nx < 16 || o.nx % 2 != 0) throw DomainError("--nx must be even and >= 16");
  xval::MethodConfig mc;
  mc.mc_paths = o.paths;
  mc.direct_paths = o.direct_paths;
  mc.mc_seed = o.seed;
  mc.direct_seed = o.direct_seed;
  mc.richardson = o.richardson;
  mc.grid.nx = o.nx;
  mc.threads = o.c.threads;
  json jp = json::array();
  for (const auto& [a, x] : pts) jp.push_back({a, x});
  cfg = {{"points", jp}, {"paths", o.paths}, {"direct_paths", o.direct_paths}, {"seed", o.seed},
         {"direct_seed", o.direct_seed}, {"richardson", o.richardson}, {"nx", o.nx}};
  const auto rows = xval::compare_methods(pts, mc);
  Table t{{"a", "x", "f_pde", "pde_err", "f_mc", "mc_stderr", "f_direct", "direct_stderr", "bracket_lo", "bracket_hi",
           "pde_in_bracket", "mc_agrees", "direct_agrees", "consistent", "notes"},
          {}};
  for (const auto& r : rows) {
    t.add({num(r.a), num(r.x), num(r.f_pde), num(r.pde_err), num(r.f_mc), num(r.mc_stderr), num(r.f_direct), num(r.direct_stderr),
           num(r.bracket_lo), num(r.bracket_hi), flag(r.pde_in_bracket), flag(r.mc_agrees), flag(r.direct_agrees),
           flag(r.consistent), r.notes});
  }
  return t;
}

struct FitOpts {
  Common c;
  std::string kind = "all";
  int n = 16;
};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(lo + (hi - lo) * k / (n - 1));
  return v;
}

Table do_fit(const FitOpts& o, json& cfg) {
  if (o.n < 3) throw DomainError("--n must be >= 3");
  cfg = {{"kind", o.kind}, {"n", o.n}};
  Table t{{"kind", "x", "a_lo", "a_hi", "slope", "target", "rel_error", "r2", "intercept"}, {}};
  auto add = [&](const std::string& k, double x, double lo, double hi, const xval::FitResult& f) {
    t.add({k, num(x), num(lo), num(hi), num(f.slope), num(f.target), num(f.rel_error), num(f.r2), num(f.intercept)});
  };
  const bool all = o.kind == "all";
  if (all || o.kind == "q1") {
    for (double x : {0.5 * kPi, kPi}) {
      add("q1_midpoint", x, -0.2, -0.05, xval::fit_q1_slope(x, linspace(-0.2, -0.05, o.n)));
      add("q1_lower", x, -0.2, -0.05, xval::fit_q1_slope(x, linspace(-0.2, -0.05, o.n), true));
    }
  }
  if (all || o.kind == "joint") {
    add("joint_hit_rate", kPi, -0.3, -0.05, xval::fit_joint_hit_rate(linspace(-0.3, -0.05, o.n)));
    add("lower_sum_rate", kPi, -0.2, -0.05, xval::fit_lower_sum_rate(linspace(-0.2, -0.05, o.n)));
  }
  if (all || o.kind == "werner") {
    add("werner", kPi, -0.2, -0.05, xval::werner_check(linspace(-0.2, -0.05, o.n)));
  }
  if (all || o.kind == "q0") {
    pde::GridConfig g;
    g.nx = 512;
    g.threads = o.c.threads;
    const auto sol = pde::solve(-0.02, -4.0, g);
    for (double x : {0.5 * kPi, kPi}) add("q0_exponent", x, -4.0, -2.0, xval::fit_q0_exponent(x, sol, -4.0, -2.0, o.n));
    cfg["q0_shape_ratio_at_a_-4"] = xval::q0_shape_ratio(sol, -4.0);
  }
  if (t.rows.empty()) throw DomainError("unknown --kind " + o.kind);
  return t;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SLE(8/3) annulus non-intersection probability F(a, x)", "annulus_sle"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  EvalOpts eo;
  auto* eval = app.add_subcommand("eval", "Evaluate one special function");
  add_common(eval, eo.c);
  add_param(eval, eo.p);
  eval->add_option("--fn", eo.fn, "eta, eta_over_pi, theta1, theta1_over_sin, log_theta_ratio, zeta, wp, xi1, xi2, "
                                   "dilog_pair, modulus_L, change_factor, boundary_u, pde_drift, pde_potential, "
                                   "galerkin, prefactor")
      ->required();
  eval->add_option("--x", eo.x, "Real argument(s)")->delimiter(',');
  eval->add_option("--z-re", eo.zr, "Re z");
  eval->add_option("--z-im", eo.zi, "Im z");

  BracketOpts bo;
  auto* bracket = app.add_subcommand("bracket", "Two-sided bound on F");
  add_common(bracket, bo.c);
  bracket->add_option("--a", bo.a, "Log-moduli, comma separated")->delimiter(',');
  bracket->add_option("--q", bo.q, "Moduli in (0, 1)")->delimiter(',');
  bracket->add_option("--x", bo.x, "Angles in [0, 2pi]")->delimiter(',');

  PdeOpts po;
  auto* pde_cmd = app.add_subcommand("pde", "March the PDE and write the F(a, x) table");
  add_common(pde_cmd, po.c);
  pde_cmd->add_option("--a-start", po.a_start, "First level (closest to 0), started from the bracket");
  pde_cmd->add_option("--a-end", po.a_end, "Last level");
  pde_cmd->add_option("--nx", po.nx, "Grid intervals on [0, 2pi]");
  pde_cmd->add_option("--dtau-max", po.dtau_max, "Largest step in the marching variable");
  pde_cmd->add_flag("--richardson", po.richardson, "Extrapolate with a doubled grid");
  pde_cmd->add_option("--at", po.at, "Only write these levels")->delimiter(',');
  pde_cmd->add_option("--level-stride", po.level_stride, "Write every n-th level");
  pde_cmd->add_option("--node-stride", po.node_stride, "Write every n-th node");

  McOpts mo;
  auto* mc_cmd = app.add_subcommand("mc", "Feynman-Kac Monte Carlo estimate (or martingale check)");
  add_common(mc_cmd, mo.c);
  add_param(mc_cmd, mo.p);
  mc_cmd->add_option("--x", mo.x, "Angles in (0, 2pi)")->delimiter(',');
  mc_cmd->add_option("--paths", mo.paths, "Number of paths");
  mc_cmd->add_option("--seed", mo.seed, "Base seed (path i uses a hash of seed and i)");
  mc_cmd->add_option("--db", mo.db, "Largest step in a");
  mc_cmd->add_flag("--shifted-integrand", mo.shifted_integrand, "Use the integrand with the extra constant 1/12");
  mc_cmd->add_option("--scheme", mo.scheme, "Time stepping: split (default) or euler")
      ->check(CLI::IsMember({"split", "euler"}));
  mc_cmd->add_option("--checkpoints", mo.checkpoints, "Martingale mode: levels in (a, 0)")->delimiter(',');

  SleOpts so;
  auto* sle = app.add_subcommand("sle", "Direct SLE trace sampler");
  add_common(sle, so.c);
  add_param(sle, so.p);
  sle->add_option("--x", so.x, "Angles in (0, 2pi)")->delimiter(',');
  sle->add_option("--paths", so.paths, "Number of traces");
  sle->add_option("--seed", so.seed, "Base seed");
  sle->add_flag("--validate", so.validate, "Slit-avoidance validation run instead of F");
  sle->add_option("--c", so.c_val, "Validation: curve runs from c to -c");
  sle->add_option("--d", so.d_val, "Validation: slit i(0, d]");
  sle->add_option("--rel-step", so.dc.rel_step, "Capacity step as a fraction of the elapsed capacity");
  sle->add_option("--near-frac", so.dc.near_frac, "Largest chord as a fraction of the distance to the target");
  sle->add_option("--accept-radius", so.dc.accept_radius, "Count as avoiding beyond this many target extents");
  sle->add_flag("!--right-end-anchor", so.dc.moment_anchor, "Put each slit at the step's end value instead of the moment anchor");
  sle->add_option("--hit-eps", so.dc.hit_eps, "Hit tolerance relative to the target extent");
  sle->add_option("--t-max", so.dc.T_max, "Capacity cap");

  CompareOpts co;
  auto* cmp = app.add_subcommand("compare", "PDE, Monte Carlo, direct sampler and bracket side by side");
  add_common(cmp, co.c);
  cmp->add_option("--points", co.points, "CSV file with header a,x or q,x");
  cmp->add_option("--a", co.a, "Log-moduli (with --x: all pairs)")->delimiter(',');
  cmp->add_option("--q", co.q, "Moduli (with --x: all pairs)")->delimiter(',');
  cmp->add_option("--x", co.x, "Angles")->delimiter(',');
  cmp->add_option("--paths", co.paths, "Feynman-Kac paths per point");
  cmp->add_option("--direct-paths", co.direct_paths, "Direct SLE traces per point (0: skip)");
  cmp->add_option("--seed", co.seed, "Feynman-Kac base seed");
  cmp->add_option("--direct-seed", co.direct_seed, "Direct sampler base seed");
  cmp->add_option("--nx", co.nx, "PDE grid intervals");
  cmp->add_flag("!--no-richardson", co.richardson, "Single-grid PDE");

  FitOpts fo;
  auto* fit = app.add_subcommand("fit", "Asymptotic slope fits");
  add_common(fit, fo.c);
  fit->add_option("--kind", fo.kind)->check(CLI::IsMember({"all", "q1", "q0", "joint", "werner"}));
  fit->add_option("--n", fo.n, "Points per fit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    json cfg;
    Table t;
    Common* c = nullptr;
    std::string sub;
    if (eval->parsed()) {
      sub = "eval", c = &eo.c, t = do_eval(eo, cfg);
    } else if (bracket->parsed()) {
      sub = "bracket", c = &bo.c, t = do_bracket(bo, cfg);
    } else if (pde_cmd->parsed()) {
      sub = "pde", c = &po.c, t = do_pde(po, cfg);
    } else if (mc_cmd->parsed()) {
      sub = "mc", c = &mo.c, t = do_mc(mo, cfg);
    } else if (sle->parsed()) {
      sub = "sle", c = &so.c, t = do_sle(so, cfg, err);
    } else if (cmp->parsed()) {
      sub = "compare", c = &co.c, t = do_compare(co, cfg);
    } else {
      sub = "fit", c = &fo.c, t = do_fit(fo, cfg);
    }
    json meta = base_meta(sub, *c);
    meta["config"] = cfg;
    meta["columns"] = t.columns;
    if (c->out.empty()) {
      write_table(out, meta, t, c->format);
    } else {
      std::ofstream f(c->out);
      if (!f) throw Error("cannot open " + c->out + " for writing");
      write_table(f, meta, t, c->format);
      if (!f) throw Error("write failed for " + c->out);
    }
    return kOk;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace annulus::cli
