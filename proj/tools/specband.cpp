// specband: command-line front end for the band-spectrum and random-matrix pipelines.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "specband/acceptance.hpp"
#include "specband/equilibrium.hpp"
#include "specband/jacobi.hpp"
#include "specband/orthopoly.hpp"
#include "specband/riemann.hpp"
#include "specband/rmt.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace specband;

namespace {

enum class Kind { Int, Real, Str, RealArray, IntArray };

struct Key {
  std::string name;
  Kind kind;
  json def;
};

const std::vector<Key> mc_keys = {{"chains", Kind::Int, 4},
                                  {"sweeps", Kind::Int, 10000},
                                  {"burn_in", Kind::Int, 2000},
                                  {"thin", Kind::Int, 5}};

std::vector<Key> with_mc(std::vector<Key> k) {
  k.insert(k.end(), mc_keys.begin(), mc_keys.end());
  return k;
}

// parameters accepted by each subcommand, with defaults
const std::map<std::string, std::vector<Key>>& key_table() {
  static const std::map<std::string, std::vector<Key>> t = {
      {"equilibrium", {{"L", Kind::Real, 0.0}, {"grid", Kind::Int, 2000}, {"tolerance", Kind::Real, 5e-3},
                       {"max_iterations", Kind::Int, 20000}}},
      {"recurrence", {{"n", Kind::Int, 40}, {"l_max", Kind::Int, -1}}},
      {"bands", {}},
      {"ids", {{"m", Kind::Int, 2000}, {"points", Kind::Int, 401}}},
      {"hill", {}},
      {"lyapunov", {{"points", Kind::Int, 401}}},
      {"surface", {{"nodes", Kind::Int, 96}}},
      {"theta-fit", {{"n", Kind::Int, 60}, {"window", Kind::Int, 0}, {"targets", Kind::RealArray, json::array()}}},
      {"mc", with_mc({{"n", Kind::Int, 32}, {"bins", Kind::Int, 60}})},
      {"gap", {{"n", Kind::Int, 8}, {"a", Kind::Real, -0.25}, {"b", Kind::Real, 0.25}, {"quad_order", Kind::Int, 40}}},
      {"covariance", with_mc({{"z1", Kind::RealArray, json::array({0.0, 2.0})},
                              {"z2", Kind::RealArray, json::array({0.0, -2.0})},
                              {"n_list", Kind::IntArray, json::array({16, 32})}})},
      {"verify-all", {{"suite", Kind::Str, "quick"}}},
  };
  return t;
}

bool needs_potential(const std::string& sub) { return sub != "verify-all"; }

[[noreturn]] void bad(const std::string& op, const std::string& why) {
  throw Error(ErrorCode::InvalidArgument, "cli", op, why);
}

bool kind_ok(const json& v, Kind k) {
  switch (k) {
    case Kind::Int: return v.is_number_integer();
    case Kind::Real: return v.is_number();
    case Kind::Str: return v.is_string();
    case Kind::RealArray:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!e.is_number()) return false;
      return true;
    case Kind::IntArray:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!e.is_number_integer()) return false;
      return true;
  }
  return false;
}

json parse_flag(const std::string& s) {
  try {
    return json::parse(s);
  } catch (const json::exception&) {
    return s;
  }
}

std::vector<double> real_list(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) bad("config", std::string(what) + " must be a non-empty number array");
  std::vector<double> v;
  for (const auto& e : j) {
    if (!e.is_number()) bad("config", std::string(what) + " must be a number array");
    v.push_back(e.get<double>());
  }
  return v;
}

Potential potential_from(const json& p) {
  if (!p.is_object()) bad("config", "potential must be an object");
  for (auto it = p.begin(); it != p.end(); ++it)
    if (it.key() != "kind" && it.key() != "v" && it.key() != "V" && it.key() != "g")
      bad("config", "unknown potential key '" + it.key() + "'");
  if (!p.contains("g") || !p["g"].is_number()) bad("config", "potential.g must be a number");
  std::string kind = p.value("kind", "square");
  if (kind == "square") {
    if (!p.contains("v") || p.contains("V")) bad("config", "square potential needs 'v' and no 'V'");
    return Potential::square(real_list(p["v"], "potential.v"), p["g"].get<double>());
  }
  if (kind == "poly") {
    if (!p.contains("V") || p.contains("v")) bad("config", "poly potential needs 'V' and no 'v'");
    return Potential::general(real_list(p["V"], "potential.V"), p["g"].get<double>());
  }
  bad("config", "potential.kind must be 'square' or 'poly'");
}

struct Ctx {
  std::string sub;
  json cfg;
  fs::path out;
  std::string format;
  int workers = 1;
  std::uint64_t seed = 1;

  long i(const char* k) const { return cfg.at(k).get<long>(); }
  double d(const char* k) const { return cfg.at(k).get<double>(); }
  void require(bool cond, const std::string& why) const {
    if (!cond) bad(sub, why);
  }
  MCParams mc() const {
    MCParams P;
    P.chains = static_cast<int>(i("chains"));
    P.sweeps = i("sweeps");
    P.burn_in = i("burn_in");
    P.thin = static_cast<int>(i("thin"));
    P.seed = seed;
    P.workers = workers;
    return P;
  }
};

// A table of numbers and strings written as CSV (with '#' metadata lines) or JSON.
struct Table {
  std::vector<std::pair<std::string, json>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
};

std::string cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return v.dump();
  std::ostringstream os;
  os.precision(17);
  os << v.get<double>();
  return os.str();
}

fs::path write_table(const Ctx& c, const std::string& stem, const Table& t) {
  fs::path p = c.out / (stem + (c.format == "json" ? ".json" : ".csv"));
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cli", c.sub, "cannot write " + p.string());
  if (c.format == "json") {
    json j;
    j["meta"] = json::object();
    for (const auto& [k, v] : t.meta) j["meta"][k] = v;
    j["columns"] = t.columns;
    j["rows"] = t.rows;
    f << j.dump(1) << "\n";
  } else {
    for (const auto& [k, v] : t.meta) f << "# " << k << "=" << (v.is_string() ? v.get<std::string>() : cell(v)) << "\n";
    for (size_t k = 0; k < t.columns.size(); ++k) f << (k ? "," : "") << t.columns[k];
    f << "\n";
    for (const auto& r : t.rows) {
      for (size_t k = 0; k < r.size(); ++k) f << (k ? "," : "") << cell(r[k]);
      f << "\n";
    }
  }
  return p;
}

std::string fmt(double x, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

std::string join(const std::vector<double>& v, int prec = 6) {
  std::string s;
  for (size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + fmt(v[k], prec);
  return s;
}

// ---- subcommands; each returns the one-line summary

std::string run_equilibrium(const Ctx& c, const Potential& V) {
  double L = c.d("L");
  if (L <= 0) {
    if (V.is_square()) {
      auto e = V.square_band_edges();
      L = std::max(std::abs(e.front()), std::abs(e.back())) * 1.2 + 0.3;
    } else {
      L = 4.0;
    }
  }
  SolverParams P;
  P.tolerance = c.d("tolerance");
  P.max_iterations = static_cast<int>(c.i("max_iterations"));
  P.workers = c.workers;
  auto r = minimize_external_field(V, L, static_cast<int>(c.i("grid")), P);
  Table t;
  t.meta = {{"potential", V.describe()}, {"g", V.g()}, {"L", L}, {"grid", c.i("grid")},
            {"lagrange_constant", r.lagrange_constant}, {"el_residual_sup", r.el_residual_sup}};
  t.columns = {"x", "weight", "density"};
  for (size_t k = 0; k < r.measure.size(); ++k)
    t.rows.push_back({r.measure.nodes[k], r.measure.weights[k], r.measure.density(k)});
  auto p = write_table(c, "equilibrium", t);
  return "support=[" + join(r.support.edges()) + "] l=" + fmt(r.lagrange_constant) + " el_residual=" +
         fmt(r.el_residual_sup, 3) + " iterations=" + std::to_string(r.iterations) + " -> " + p.string();
}

std::string run_recurrence(const Ctx& c, const Potential& V) {
  int n = static_cast<int>(c.i("n"));
  int l_max = c.i("l_max") < 0 ? n : static_cast<int>(c.i("l_max"));
  auto tab = recurrence(V, n, l_max);
  Table t;
  t.meta = {{"potential", V.describe()}, {"g", V.g()}, {"n", n}, {"L", tab.L}, {"nodes", static_cast<long>(tab.node_count)}};
  t.columns = {"l", "r", "s"};
  for (size_t l = 0; l < tab.r.size(); ++l) t.rows.push_back({static_cast<long>(l), tab.r[l], tab.s[l]});
  auto p = write_table(c, "recurrence", t);
  return "n=" + std::to_string(n) + " l_max=" + std::to_string(l_max) + " r_n=" + fmt(tab.r[std::min(n, l_max)], 10) +
         " -> " + p.string();
}

std::string run_bands(const Ctx& c, const Potential& V) {
  auto bs = bands_from_polynomial(V);
  Table t;
  t.meta = {{"potential", V.describe()}, {"g", V.g()}};
  t.columns = {"band", "a", "b", "mass_N", "mass_nu"};
  for (size_t l = 0; l < bs.q(); ++l) {
    auto A = counting_functions(V, bs.a(l)), B = counting_functions(V, bs.b(l));
    t.rows.push_back({static_cast<long>(l), bs.a(l), bs.b(l), A.N - B.N, A.nu - B.nu});
  }
  auto p = write_table(c, "bands", t);
  return "q=" + std::to_string(bs.q()) + " edges=" + join(bs.edges(), 10) + " -> " + p.string();
}

std::vector<double> grid_around(const BandSet& bs, int points) {
  std::vector<double> g;
  double pad = 0.1 * (bs.upper() - bs.lower());
  for (int k = 0; k < points; ++k) g.push_back(bs.lower() - pad + (bs.upper() - bs.lower() + 2 * pad) * k / (points - 1.0));
  return g;
}

std::string run_ids(const Ctx& c, const Potential& V) {
  c.require(c.i("points") >= 2 && c.i("m") >= 1, "need points >= 2 and m >= 1");
  auto op = periodic_from_square(V);
  auto bs = bands_from_polynomial(V);
  auto grid = grid_around(bs, static_cast<int>(c.i("points")));
  auto k = ids_estimate(op, static_cast<size_t>(c.i("m")), grid);
  Table t;
  t.meta = {{"potential", V.describe()}, {"g", V.g()}, {"m", c.i("m")}};
  t.columns = {"x", "ids", "nu"};
  double sup = 0;
  for (size_t i = 0; i < grid.size(); ++i) {
    double nu = counting_functions_any(V, grid[i]).nu;
    sup = std::max(sup, std::abs(k[i] - nu));
    t.rows.push_back({grid[i], k[i], nu});
  }
  auto p = write_table(c, "ids", t);
  return "m=" + std::to_string(c.i("m")) + " sup|ids-nu|=" + fmt(sup, 3) + " -> " + p.string();
}

std::string run_hill(const Ctx& c, const Potential& V) {
  auto op = periodic_from_square(V);
  auto H = hill_discriminant(op);
  Polynomial expect = V.v() * (1.0 / (2.0 * std::sqrt(V.g())));
  double err = 0;
  for (int k = 0; k <= std::max(H.discriminant.degree(), expect.degree()); ++k)
    err = std::max(err, std::abs(H.discriminant.coeff(k) - expect.coeff(k)));
  Table t;
  t.meta = {{"potential", V.describe()}, {"g", V.g()}, {"period", op.period()}};
  t.columns = {"k", "coefficient"};
  for (int k = 0; k <= H.discriminant.degree(); ++k) t.rows.push_back({k, H.discriminant.coeff(k)});
  auto p = write_table(c, "hill", t);
  return "period=" + std::to_string(op.period()) + " bands=" + join(H.bands.edges(), 10) +
         " max|D-v/(2sqrt g)|=" + fmt(err, 3) + " -> " + p.string();
}

std::string run_lyapunov(const Ctx& c, const Potential& V) {
  c.require(c.i("points") >= 2, "need points >= 2");
  auto op = periodic_from_square(V);
  auto bs = bands_from_polynomial(V);
  auto grid = grid_around(bs, static_cast<int>(c.i("points")));
  Table t;
  t.meta = {{"potential", V.describe()}, {"g", V.g()}};
  t.columns = {"x", "gamma"};
  double in_band = 0;
  for (double x : grid) {
    double g = lyapunov_exponent(op, x);
    if (bs.contains(x)) in_band = std::max(in_band, g);
    t.rows.push_back({x, g});
  }
  auto p = write_table(c, "lyapunov", t);
  return "max in-band gamma=" + fmt(in_band, 3) + " -> " + p.string();
}

std::string run_surface(const Ctx& c, const Potential& V) {
  auto S = surface_from_bands(bands_from_polynomial(V), static_cast<int>(c.i("nodes")));
  Table t;
  t.meta = {{"potential", V.describe()}, {"g", V.g()}, {"genus", S.genus}, {"nodes", S.nodes}};
  t.columns = {"quantity", "i", "j", "value"};
  for (int i = 0; i < S.genus; ++i)
    for (int j = 0; j < S.genus; ++j) t.rows.push_back({"im_tau", i, j, S.im_tau(i, j)});
  for (int i = 0; i < S.genus; ++i) t.rows.push_back({"U", i, 0, S.U[i]});
  for (int i = 0; i < S.genus; ++i) t.rows.push_back({"u_inf", i, 0, S.u_inf[i]});
  t.rows.push_back({"l_sigma", 0, 0, S.l_sigma});
  double rie = rie_relation_check(S);
  t.rows.push_back({"rie_residual", 0, 0, rie});
  auto p = write_table(c, "surface", t);
  return "genus=" + std::to_string(S.genus) + " U=[" + join(S.U, 10) + "] l_sigma=" + fmt(S.l_sigma, 10) +
         " rie=" + fmt(rie, 3) + " -> " + p.string();
}

std::string run_theta_fit(const Ctx& c, const Potential& V) {
  auto bs = bands_from_polynomial(V);
  auto S = surface_from_bands(bs);
  std::vector<double> targets;
  std::string source;
  if (!c.cfg["targets"].empty()) {
    targets = c.cfg["targets"].get<std::vector<double>>();
    source = "given";
  } else {
    int n = static_cast<int>(c.i("n"));
    int w = c.i("window") > 0 ? static_cast<int>(c.i("window")) : 2 * S.genus + 4;
    auto tab = recurrence(V, n, n + w);
    targets.assign(tab.r.begin() + n, tab.r.begin() + n + w);
    source = "orthopoly n=" + std::to_string(n);
  }
  auto f = shift_equivalence_fit(S, targets);
  Table t;
  t.meta = {{"potential", V.describe()}, {"g", V.g()}, {"targets", source}, {"direction", f.direction},
            {"residual", f.residual}};
  t.columns = {"k", "target", "shift"};
  for (size_t k = 0; k < targets.size(); ++k)
    t.rows.push_back({static_cast<long>(k), targets[k], k < f.shift.size() ? json(f.shift[k]) : json("")});
  auto p = write_table(c, "theta_fit", t);
  return "shift=[" + join(f.shift) + "] residual=" + fmt(f.residual, 3) + " -> " + p.string();
}

std::string run_mc(const Ctx& c, const Potential& V) {
  int n = static_cast<int>(c.i("n"));
  int bins = static_cast<int>(c.i("bins"));
  c.require(bins >= 1, "bins must be >= 1");
  auto P = c.mc();
  auto S = sample_loggas(V, n, P);
  fs::path bin = c.out / "samples.bin";
  {
    std::ofstream f(bin, std::ios::binary);
    for (const auto& ch : S.chains)
      f.write(reinterpret_cast<const char*>(ch.configs.data()), static_cast<std::streamsize>(ch.configs.size() * sizeof(double)));
  }
  json side;
  side["n"] = n;
  side["potential"] = V.describe();
  side["g"] = V.g();
  side["seed"] = c.seed;
  side["chains"] = P.chains;
  side["sweeps"] = P.sweeps;
  side["burn_in"] = P.burn_in;
  side["thin"] = P.thin;
  side["configs_per_chain"] = S.per_chain();
  side["layout"] = "float64 little-endian, chain-major, one sorted configuration of n values per row";
  side["acceptance"] = json::array();
  for (const auto& ch : S.chains) side["acceptance"].push_back(ch.acceptance);
  std::ofstream(c.out / "samples.json", std::ios::binary) << side.dump(1) << "\n";

  double lo = 1e300, hi = -1e300;
  size_t count = 0;
  for (const auto& ch : S.chains)
    for (double x : ch.configs) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      ++count;
    }
  std::vector<double> h(bins, 0.0);
  double w = (hi - lo) / bins;
  for (const auto& ch : S.chains)
    for (double x : ch.configs) h[std::min(bins - 1, static_cast<int>((x - lo) / w))] += 1.0;
  Table t;
  t.meta = {{"potential", V.describe()}, {"g", V.g()}, {"n", n}, {"seed", c.seed}, {"points", static_cast<long>(count)}};
  t.columns = {"x", "density"};
  for (int k = 0; k < bins; ++k) t.rows.push_back({lo + (k + 0.5) * w, h[k] / (count * w)});
  auto p = write_table(c, "histogram", t);
  auto m2 = linear_statistic(S, TestFunction::polynomial({0, 0, 1}));
  return "configs=" + std::to_string(S.total()) + " acceptance=" + fmt(S.acceptance(), 3) + " E[N(x^2)]=" +
         fmt(m2.re.mean) + "+-" + fmt(m2.re.stderr_, 2) + " -> " + p.string();
}

std::string run_gap(const Ctx& c, const Potential& V) {
  int n = static_cast<int>(c.i("n"));
  auto G = gap_probability(V, n, c.d("a"), c.d("b"), static_cast<int>(c.i("quad_order")));
  Table t;
  t.meta = {{"potential", V.describe()}, {"g", V.g()}};
  t.columns = {"n", "a", "b", "quad_order", "value", "raw", "clamped"};
  t.rows.push_back({n, c.d("a"), c.d("b"), c.i("quad_order"), G.value, G.raw, G.clamped});
  auto p = write_table(c, "gap", t);
  return "E=" + fmt(G.value, 12) + (G.clamped ? " (clamped)" : "") + " -> " + p.string();
}

cplx complex_of(const json& j, const char* what) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != 2) bad("covariance", std::string(what) + " must be [re, im]");
  return {v[0], v[1]};
}

std::string run_covariance(const Ctx& c, const Potential& V) {
  cplx z1 = complex_of(c.cfg["z1"], "z1"), z2 = complex_of(c.cfg["z2"], "z2");
  auto f1 = TestFunction::resolvent(z1), f2 = TestFunction::resolvent(z2);
  auto n_list = c.cfg["n_list"].get<std::vector<int>>();
  c.require(!n_list.empty(), "n_list must not be empty");
  auto rows = covariance_scaling(V, f1, f2, n_list, c.mc());
  Table t;
  t.meta = {{"potential", V.describe()}, {"g", V.g()}, {"seed", c.seed}};
  t.columns = {"n", "cov_re", "cov_im", "stderr", "n2cov_re", "n2cov_im", "ratio", "kernel_re", "kernel_im"};
  for (const auto& r : rows) {
    cplx k = covariance_kernel(V, r.n, f1, f2);
    t.rows.push_back({r.n, r.cov.real(), r.cov.imag(), r.stderr_, r.n2cov.real(), r.n2cov.imag(), r.ratio_to_previous,
                      k.real(), k.imag()});
  }
  std::string limit;
  if (V.is_square() && V.q() <= 2) {
    cplx L = variance_formula_eval(V, z1, z2);
    t.meta.push_back({"limit_re", L.real()});
    t.meta.push_back({"limit_im", L.imag()});
    limit = " limit=" + fmt(L.real()) + (L.imag() >= 0 ? "+" : "") + fmt(L.imag()) + "i";
  }
  auto p = write_table(c, "covariance", t);
  const auto& last = rows.back();
  return "n2cov(n=" + std::to_string(last.n) + ")=" + fmt(last.n2cov.real()) + " ratio=" + fmt(last.ratio_to_previous, 3) +
         limit + " -> " + p.string();
}

int run_verify(const Ctx& c) {
  std::string suite = c.cfg["suite"].get<std::string>();
  c.require(suite == "quick" || suite == "full", "suite must be 'quick' or 'full'");
  std::vector<std::uint64_t> seeds = {c.seed};
  if (suite == "full") seeds.push_back(c.seed + 1000);
  Table t;
  t.columns = {"criterion", "seed", "pass", "seconds", "title", "detail"};
  int failed = 0, total = 0;
  for (auto s : seeds) {
    acceptance::Options o;
    o.workers = c.workers;
    o.seed = s;
    acceptance::run(o, [&](const acceptance::Outcome& r) {
      std::cout << acceptance::format(r) << "\n" << std::flush;
      failed += !r.pass;
      ++total;
      t.rows.push_back({r.id, s, r.pass, r.seconds, r.title, r.detail});
    });
  }
  auto p = write_table(c, "acceptance", t);
  std::cout << "verify-all " << suite << ": " << (total - failed) << "/" << total << " passed -> " << p.string() << "\n";
  return failed ? 1 : 0;
}

int dispatch(Ctx& c) {
  if (c.sub == "verify-all") return run_verify(c);
  Potential V = potential_from(c.cfg["potential"]);
  using Fn = std::string (*)(const Ctx&, const Potential&);
  static const std::map<std::string, Fn> fns = {
      {"equilibrium", run_equilibrium}, {"recurrence", run_recurrence}, {"bands", run_bands},
      {"ids", run_ids},                 {"hill", run_hill},             {"lyapunov", run_lyapunov},
      {"surface", run_surface},         {"theta-fit", run_theta_fit},   {"mc", run_mc},
      {"gap", run_gap},                 {"covariance", run_covariance}};
  std::string summary = fns.at(c.sub)(c, V);
  std::cout << c.sub << ": " << summary << "\n";
  return 0;
}

struct Flags {
  std::string config, out = ".", format, seed, workers;
  std::string v, V, g;
  std::map<std::string, std::string> params;
};

// Merges the config file with command-line flags, fills defaults and validates every key.
json resolve(const std::string& sub, const Flags& f) {
  json cfg = json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) bad("config", "cannot read " + f.config);
    cfg = json::parse(in);
    if (!cfg.is_object()) bad("config", "config file must hold a JSON object");
  }
  if (cfg.contains("subcommand") && cfg["subcommand"] != sub)
    bad("config", "config is for subcommand '" + cfg["subcommand"].dump() + "'");
  cfg["subcommand"] = sub;
  if (!f.seed.empty()) cfg["seed"] = parse_flag(f.seed);
  if (!f.workers.empty()) cfg["workers"] = parse_flag(f.workers);
  if (!f.format.empty()) cfg["format"] = f.format;
  if (!f.v.empty() || !f.V.empty() || !f.g.empty()) {
    json p = cfg.value("potential", json::object());
    if (!f.v.empty()) {
      p["kind"] = "square";
      p["v"] = parse_flag(f.v);
      p.erase("V");
    }
    if (!f.V.empty()) {
      p["kind"] = "poly";
      p["V"] = parse_flag(f.V);
      p.erase("v");
    }
    if (!f.g.empty()) p["g"] = parse_flag(f.g);
    cfg["potential"] = p;
  }
  for (const auto& [k, s] : f.params)
    if (!s.empty()) cfg[k] = parse_flag(s);

  const auto& keys = key_table().at(sub);
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    const std::string& k = it.key();
    if (k == "subcommand" || k == "seed" || k == "workers" || k == "format") continue;
    if (k == "potential" && needs_potential(sub)) continue;
    bool known = std::any_of(keys.begin(), keys.end(), [&](const Key& x) { return x.name == k; });
    if (!known) bad("config", "unknown key '" + k + "' for " + sub);
  }
  if (needs_potential(sub) && !cfg.contains("potential")) bad("config", "no potential given (use --v/--V and --g)");
  if (!cfg.contains("seed")) cfg["seed"] = 1;
  if (!cfg["seed"].is_number_integer() || cfg["seed"].get<long long>() < 0) bad("config", "seed must be a non-negative integer");
  if (!cfg.contains("format")) cfg["format"] = "csv";
  if (cfg["format"] != "csv" && cfg["format"] != "json") bad("config", "format must be csv or json");
  if (cfg.contains("workers") && !(cfg["workers"].is_number_integer() && cfg["workers"].get<int>() >= 1))
    bad("config", "workers must be a positive integer");
  for (const auto& k : keys) {
    if (!cfg.contains(k.name)) cfg[k.name] = k.def;
    if (!kind_ok(cfg[k.name], k.kind)) bad("config", "key '" + k.name + "' has the wrong type");
  }
  return cfg;
}

std::string flag_name(const std::string& key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"specband: equilibrium measures, recurrences, band spectra and random-matrix statistics"};
  app.require_subcommand(1);
  Flags f;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, keys] : key_table()) {
    CLI::App* s = app.add_subcommand(name);
    s->add_option("--config", f.config, "JSON run configuration");
    s->add_option("--out", f.out, "output directory")->capture_default_str();
    s->add_option("--format", f.format, "csv or json");
    s->add_option("--seed", f.seed, "random seed");
    s->add_option("--workers", f.workers, "worker threads (default: SPECBAND_WORKERS or 1)");
    if (needs_potential(name)) {
      s->add_option("--v", f.v, "square potential: coefficients of v, low to high");
      s->add_option("--V", f.V, "general potential: coefficients of V, low to high");
      s->add_option("--g", f.g, "amplitude g");
    }
    for (const auto& k : keys) s->add_option(flag_name(k.name), f.params[name + "/" + k.name], k.name);
    subs[name] = s;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  std::string sub;
  for (const auto& [name, s] : subs)
    if (s->parsed()) sub = name;

  try {
    Flags g = f;
    g.params.clear();
    for (const auto& [k, v] : f.params)
      if (k.rfind(sub + "/", 0) == 0) g.params[k.substr(sub.size() + 1)] = v;
    json cfg = resolve(sub, g);
    Ctx c;
    c.sub = sub;
    c.cfg = cfg;
    c.out = f.out;
    c.format = cfg["format"];
    c.seed = cfg["seed"].get<std::uint64_t>();
    c.workers = 1;
    if (cfg.contains("workers")) c.workers = cfg["workers"].get<int>();
    else if (const char* w = std::getenv("SPECBAND_WORKERS")) c.workers = std::max(1, std::atoi(w));
    fs::create_directories(c.out);
    std::ofstream(c.out / "resolved-config.json", std::ios::binary) << cfg.dump(2) << "\n";
    return dispatch(c);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 2 : 3;
  } catch (const json::exception& e) {
    std::cerr << "error: cli::config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
