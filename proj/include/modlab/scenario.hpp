#pragma once

// Declarative scenarios: a single JSON document naming functions, kernels,
// channels, generators and an ordered job list. Loading validates every
// reference eagerly; running executes jobs in order, each writing a CSV table
// and a JSON summary stamped with the scenario hash and library version.
// Numbers that are semantically rational (slot alphas) are ingested as exact
// rationals: JSON numbers go through their shortest decimal representation,
// strings accept "p/q" and decimal forms directly.

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "modlab/deform.hpp"
#include "modlab/gram.hpp"
#include "modlab/hull.hpp"
#include "modlab/propagator.hpp"
#include "modlab/version.hpp"

namespace modlab {

using json = nlohmann::json;

struct Job {
  std::string kind;
  std::string output;
  json body;
};

struct Scenario {
  SpacetimeSpec spacetime;
  GridSpec grid;
  double hbar = 1.0;
  int degree_cap = 16;
  std::map<std::string, ModulationFunction> functions;
  std::map<std::string, KernelSpec> kernels;
  std::map<std::string, Channel> channels;
  std::map<std::string, GeneratorSpec> generators;
  std::vector<Job> jobs;
  std::string hash;
  std::filesystem::path base_dir;
};

// ---------------------------------------------------------------------------
// Parsing helpers

namespace scenario_detail {

inline Rational parse_rational(const json& j, const std::string& where) {
  if (j.is_string()) return Rational::from_string(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_number_float()) {
    // Shortest round-trip decimal of the double, then exact decimal->rational.
    return Rational::from_string(fmt_double(j.get<double>()));
  }
  throw ParseError(where + ": expected a rational (number or \"p/q\" string)");
}

inline Vec parse_vec(const json& j, std::size_t dim, const std::string& where) {
  if (!j.is_array() || j.size() != dim)
    throw ParseError(where + ": expected an array of " + std::to_string(dim) + " numbers");
  Vec v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = j[i].get<double>();
  return v;
}

inline Complex parse_complex(const json& j, const std::string& where) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2) return Complex(j[0].get<double>(), j[1].get<double>());
  throw ParseError(where + ": expected a number or [re, im]");
}

inline LocalFunctional parse_functional(const json& j, const std::string& where) {
  const std::string kind = j.value("functional", "identity");
  if (kind == "identity") return LocalFunctional::identity();
  if (kind == "power") {
    if (!j.contains("exponent")) throw ParseError(where + ": power functional needs exponent");
    return LocalFunctional::power(j.at("exponent").get<int>());
  }
  if (kind == "gradient_square") return LocalFunctional::gradient_square();
  throw ParseError(where + ": unknown functional '" + kind + "'");
}

}  // namespace scenario_detail

inline ModulationFunction resolve_function(const json& defs, const std::string& name,
                                           std::size_t dim, const std::filesystem::path& base,
                                           std::set<std::string>& visiting,
                                           std::map<std::string, ModulationFunction>& done);

inline ModulationFunction parse_function(const json& j, const json& defs, std::size_t dim,
                                         const std::filesystem::path& base,
                                         std::set<std::string>& visiting,
                                         std::map<std::string, ModulationFunction>& done,
                                         const std::string& where) {
  using namespace scenario_detail;
  const std::string type = j.value("type", "");
  const Complex amp = j.contains("amplitude") ? parse_complex(j.at("amplitude"), where)
                                              : Complex{1.0, 0.0};
  Vec zero(dim, 0.0);
  if (type == "gaussian") {
    Vec center = j.contains("center") ? parse_vec(j.at("center"), dim, where) : zero;
    Vec widths = parse_vec(j.at("widths"), dim, where);
    Vec carrier = j.contains("carrier") ? parse_vec(j.at("carrier"), dim, where) : zero;
    return gaussian(amp, center, widths, carrier);
  }
  if (type == "bump") {
    Vec center = j.contains("center") ? parse_vec(j.at("center"), dim, where) : zero;
    Vec radii = parse_vec(j.at("radii"), dim, where);
    Vec carrier = j.contains("carrier") ? parse_vec(j.at("carrier"), dim, where) : zero;
    return bump(amp, center, radii, carrier);
  }
  if (type == "cosine_gaussian") {
    Vec center = j.contains("center") ? parse_vec(j.at("center"), dim, where) : zero;
    Vec widths = parse_vec(j.at("widths"), dim, where);
    Vec carrier = parse_vec(j.at("carrier"), dim, where);
    return cosine_gaussian(amp.real(), center, widths, carrier);
  }
  if (type == "sum") {
    FormalSum s;
    for (const auto& t : j.at("terms")) {
      Complex w = parse_complex(t.at("weight"), where);
      const std::string ref = t.at("function").get<std::string>();
      ModulationFunction fn = resolve_function(defs, ref, dim, base, visiting, done);
      s.terms.push_back({w, std::make_shared<ModulationFunction>(std::move(fn))});
    }
    if (s.terms.empty()) throw ParseError(where + ": sum needs terms");
    return ModulationFunction(std::move(s));
  }
  if (type == "grid_file") {
    const std::string path = j.at("path").get<std::string>();
    std::filesystem::path p(path);
    if (p.is_relative()) p = base / p;
    return ModulationFunction::from_grid(load_modf(p.string()));
  }
  throw ParseError(where + ": unknown function type '" + type + "'");
}

inline ModulationFunction resolve_function(const json& defs, const std::string& name,
                                           std::size_t dim, const std::filesystem::path& base,
                                           std::set<std::string>& visiting,
                                           std::map<std::string, ModulationFunction>& done) {
  if (auto it = done.find(name); it != done.end()) return it->second;
  if (!defs.contains(name))
    throw DanglingReference("undefined function '" + name + "'");
  if (visiting.count(name))
    throw InvariantViolation("function reference cycle through '" + name + "'");
  visiting.insert(name);
  ModulationFunction f =
      parse_function(defs.at(name), defs, dim, base, visiting, done, "functions." + name);
  visiting.erase(name);
  done.emplace(name, f);
  return f;
}

inline Scenario load_scenario_json(const json& doc, const std::filesystem::path& base_dir) {
  using namespace scenario_detail;
  Scenario sc;
  sc.base_dir = base_dir;
  sc.hash = hex64(fnv1a(doc.dump()));

  if (doc.contains("spacetime")) sc.spacetime = SpacetimeSpec(doc.at("spacetime").value("d_space", 1));
  const std::size_t dim = static_cast<std::size_t>(sc.spacetime.dim());

  if (!doc.contains("grid")) throw ParseError("scenario: missing grid");
  {
    const json& g = doc.at("grid");
    Vec hw;
    std::vector<int> pts;
    if (g.at("half_width").is_array()) {
      for (const auto& v : g.at("half_width")) hw.push_back(v.get<double>());
    } else {
      hw.assign(dim, g.at("half_width").get<double>());
    }
    if (g.at("points").is_array()) {
      for (const auto& v : g.at("points")) pts.push_back(v.get<int>());
    } else {
      pts.assign(dim, g.at("points").get<int>());
    }
    sc.grid = GridSpec(hw, pts);
    if (static_cast<std::size_t>(sc.grid.dim()) != dim)
      throw ParseError("scenario: grid dimension disagrees with spacetime");
  }
  sc.hbar = doc.value("hbar", 1.0);
  if (!(sc.hbar > 0.0)) throw ParseError("scenario: hbar must be positive");
  sc.degree_cap = doc.value("degree_cap", 16);

  const json fdefs = doc.value("functions", json::object());
  {
    std::set<std::string> visiting;
    for (auto it = fdefs.begin(); it != fdefs.end(); ++it)
      resolve_function(fdefs, it.key(), dim, base_dir, visiting, sc.functions);
  }

  for (const auto& [name, kj] : doc.value("kernels", json::object()).items()) {
    KernelSpec K;
    for (const auto& t : kj.at("terms")) {
      KernelSpec::Term term;
      term.weight = t.value("weight", 1.0);
      for (const auto& m : t.at("masses")) term.masses.push_back(m.get<double>());
      K.terms.push_back(std::move(term));
    }
    K.validate();
    sc.kernels.emplace(name, std::move(K));
  }

  for (const auto& [name, cj] : doc.value("channels", json::object()).items()) {
    const std::string ref = cj.at("base").get<std::string>();
    auto fit = sc.functions.find(ref);
    if (fit == sc.functions.end())
      throw DanglingReference("channel '" + name + "' references undefined function '" + ref + "'");
    Channel c;
    c.base = fit->second;
    if (!cj.contains("slots") || cj.at("slots").empty())
      throw ParseError("channel '" + name + "' needs at least one slot");
    for (const auto& s : cj.at("slots")) {
      ChannelSlot slot;
      slot.functional = parse_functional(s, "channels." + name);
      slot.alpha = parse_rational(s.at("alpha"), "channels." + name + ".alpha");
      if (!slot.alpha.positive())
        throw ParseError("channel '" + name + "': alpha must be positive");
      c.slots.push_back(std::move(slot));
    }
    sc.channels.emplace(name, std::move(c));
  }

  for (const auto& [name, gj] : doc.value("generators", json::object()).items()) {
    GeneratorSpec g;
    g.symmetrize = gj.value("symmetrize", false);
    for (const auto& t : gj.at("terms")) {
      GeneratorSpec::Term term;
      term.lambda = t.at("lambda").get<double>();
      for (const auto& f : t.at("factors")) {
        const std::string ref = f.at("channel").get<std::string>();
        auto cit = sc.channels.find(ref);
        if (cit == sc.channels.end())
          throw DanglingReference("generator '" + name + "' references undefined channel '" +
                                  ref + "'");
        term.factors.push_back({cit->second, f.value("dagger_pair", true)});
      }
      g.terms.push_back(std::move(term));
    }
    sc.generators.emplace(name, std::move(g));
  }

  // Jobs: eager reference validation per kind.
  auto need_function = [&](const json& j, const char* field, const std::string& where) {
    const std::string ref = j.at(field).get<std::string>();
    if (!sc.functions.count(ref))
      throw DanglingReference(where + " references undefined function '" + ref + "'");
    return ref;
  };
  auto need_kernel = [&](const json& j, const std::string& where) {
    const std::string ref = j.value("kernel", "");
    if (ref.empty() || !sc.kernels.count(ref))
      throw DanglingReference(where + " references undefined kernel '" + ref + "'");
    return ref;
  };
  auto need_channel = [&](const json& j, const char* field, const std::string& where) {
    const std::string ref = j.at(field).get<std::string>();
    if (!sc.channels.count(ref) && !sc.functions.count(ref))
      throw DanglingReference(where + " references undefined channel or function '" + ref + "'");
    return ref;
  };

  int jobno = 0;
  for (const auto& jj : doc.value("jobs", json::array())) {
    Job job;
    job.kind = jj.value("kind", "");
    job.output = jj.value("output", "job" + std::to_string(jobno));
    job.body = jj;
    const std::string where = "jobs[" + std::to_string(jobno) + "] (" + job.kind + ")";
    if (job.kind == "inner") {
      need_function(jj, "f", where);
      need_function(jj, "g", where);
      need_kernel(jj, where);
    } else if (job.kind == "commutator") {
      need_channel(jj, "left", where);
      need_channel(jj, "right", where);
      need_kernel(jj, where);
    } else if (job.kind == "gram") {
      if (!jj.contains("channels") || jj.at("channels").empty())
        throw ParseError(where + ": needs a channel list");
      for (const auto& c : jj.at("channels")) {
        const std::string ref = c.get<std::string>();
        if (!sc.channels.count(ref) && !sc.functions.count(ref))
          throw DanglingReference(where + " references undefined channel '" + ref + "'");
      }
      need_kernel(jj, where);
    } else if (job.kind == "hull_check") {
      for (const auto& p : jj.at("pairs")) {
        if (p.contains("a")) need_function(p, "a", where);
        if (p.contains("b")) need_function(p, "b", where);
      }
    } else if (job.kind == "causality_scan") {
      need_function(jj, "f", where);
      need_function(jj, "g", where);
      need_kernel(jj, where);
      if (!jj.contains("separations")) throw ParseError(where + ": needs separations");
    } else if (job.kind == "resonance_sweep") {
      need_function(jj, "base", where);
      need_function(jj, "probe", where);
      need_kernel(jj, where);
      if (jj.contains("generator") && !sc.generators.count(jj.at("generator").get<std::string>()))
        throw DanglingReference(where + " references undefined generator");
      if (!jj.contains("thetas")) throw ParseError(where + ": needs thetas");
    } else if (job.kind == "zeta_amplitude") {
      need_function(jj, "f", where);
      need_function(jj, "g", where);
      need_kernel(jj, where);
      if (!sc.generators.count(jj.value("generator", "")))
        throw DanglingReference(where + " references undefined generator");
    } else if (job.kind == "polarize") {
      for (const auto& f : jj.at("functions")) {
        const std::string ref = f.get<std::string>();
        if (!sc.functions.count(ref))
          throw DanglingReference(where + " references undefined function '" + ref + "'");
      }
      need_kernel(jj, where);
      if (jj.contains("bra")) need_function(jj, "bra", where);
    } else if (job.kind == "pauli_jordan_table") {
      if (!jj.contains("points")) throw ParseError(where + ": needs points");
    } else {
      throw ParseError(where + ": unknown job kind '" + job.kind + "'");
    }
    sc.jobs.push_back(std::move(job));
    ++jobno;
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open scenario: " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ParseError("scenario parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return load_scenario_json(doc, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Running

struct RunOptions {
  std::filesystem::path out_dir = ".";
  bool keep_going = false;
  std::uint64_t seed = 0;
  std::string format = "csv";
};

struct JobStatus {
  std::string output;
  std::string kind;
  bool ok = false;
  std::string error;
};

struct RunReport {
  std::vector<JobStatus> jobs;
  int exit_code = 0;
};

namespace scenario_detail {

inline Channel job_channel(const Scenario& sc, const std::string& ref) {
  if (auto it = sc.channels.find(ref); it != sc.channels.end()) return it->second;
  return plain_channel(sc.functions.at(ref));
}

inline void write_text(const std::filesystem::path& p, const std::string& body) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  os << body;
}

struct CsvBuilder {
  std::string body;
  CsvBuilder(const Scenario& sc, const std::string& columns) {
    body += "# scenario_hash=" + sc.hash + "\n";
    body += std::string("# modlab_version=") + kVersion + "\n";
    body += columns + "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) body.push_back(',');
      body += cells[i];
    }
    body.push_back('\n');
  }
};

inline json summary_base(const Scenario& sc, const Job& job, const RunOptions& opt) {
  json s;
  s["job"] = job.output;
  s["kind"] = job.kind;
  s["scenario_hash"] = sc.hash;
  s["version"] = kVersion;
  s["seed"] = opt.seed;
  return s;
}

inline Separation hull_separation_for(const Scenario& sc, const ModulationFunction& a,
                                      const ModulationFunction& b, double theta) {
  ConvexHull ha, hb;
  try {
    ha = analytic_support_polytope(a);
    hb = analytic_support_polytope(b);
  } catch (const Error&) {
    ha = support_hull(ensure_grid(a, sc.grid), theta);
    hb = support_hull(ensure_grid(b, sc.grid), theta);
  }
  return spacelike_separated(ha, hb);
}

}  // namespace scenario_detail

inline void run_job(const Scenario& sc, const Job& job, const RunOptions& opt, json& summary) {
  using namespace scenario_detail;
  namespace fs = std::filesystem;
  const fs::path csv_path = opt.out_dir / (job.output + ".csv");
  const json& body = job.body;

  if (job.kind == "inner") {
    ShellEngine eng(sc.grid, sc.hbar);
    InnerResult r = eng.kernel_inner(job_channel(sc, body.at("f").get<std::string>()),
                                     job_channel(sc, body.at("g").get<std::string>()),
                                     sc.kernels.at(body.at("kernel").get<std::string>()));
    CsvBuilder csv(sc, "value_re,value_im,tail_bound");
    csv.row({fmt_double(r.value.real()), fmt_double(r.value.imag()), fmt_double(r.tail_bound)});
    write_text(csv_path, csv.body);
    summary["metrics"] = {{"value_re", r.value.real()},
                          {"value_im", r.value.imag()},
                          {"flags", r.flags}};
    summary["tail_bound"] = r.tail_bound;
  } else if (job.kind == "commutator") {
    ShellEngine eng(sc.grid, sc.hbar);
    const KernelSpec& K = sc.kernels.at(body.at("kernel").get<std::string>());
    Channel c1 = job_channel(sc, body.at("left").get<std::string>());
    Channel c2 = job_channel(sc, body.at("right").get<std::string>());
    InnerResult r = eng.commutator(c1, c2, K);
    const double scale = eng.channel_norm(c1, K) * eng.channel_norm(c2, K);
    CsvBuilder csv(sc, "value_re,value_im,abs,tail_bound,scale,relative");
    const double rel = scale > 0 ? std::abs(r.value) / scale : 0.0;
    csv.row({fmt_double(r.value.real()), fmt_double(r.value.imag()),
             fmt_double(std::abs(r.value)), fmt_double(r.tail_bound), fmt_double(scale),
             fmt_double(rel)});
    write_text(csv_path, csv.body);
    summary["metrics"] = {{"abs", std::abs(r.value)}, {"scale", scale}, {"relative", rel}};
    summary["tail_bound"] = r.tail_bound;
  } else if (job.kind == "gram") {
    std::vector<Channel> chans;
    for (const auto& c : body.at("channels"))
      chans.push_back(job_channel(sc, c.get<std::string>()));
    GramReport rep =
        gram_matrix(chans, sc.kernels.at(body.at("kernel").get<std::string>()), sc.grid, sc.hbar);
    CsvBuilder csv(sc, "i,j,re,im");
    for (int i = 0; i < rep.n; ++i)
      for (int j = 0; j < rep.n; ++j) {
        const Complex v = rep.matrix[static_cast<std::size_t>(i) * static_cast<std::size_t>(rep.n) +
                                     static_cast<std::size_t>(j)];
        csv.row({std::to_string(i), std::to_string(j), fmt_double(v.real()), fmt_double(v.imag())});
      }
    write_text(csv_path, csv.body);
    summary["metrics"] = {{"min_eigenvalue", rep.min_eigenvalue},
                          {"psd", rep.psd},
                          {"tolerance", rep.tolerance},
                          {"trace", rep.trace},
                          {"n", rep.n}};
  } else if (job.kind == "hull_check") {
    CsvBuilder csv(sc, "pair,a,b,result");
    int i = 0;
    json results = json::array();
    for (const auto& p : body.at("pairs")) {
      ConvexHull ha, hb;
      std::string na = "box", nb = "box";
      const double theta = p.value("threshold", 0.5);
      if (p.contains("a_box")) {
        Box ba;
        for (const auto& iv : p.at("a_box")) {
          ba.lo.push_back(iv.at(0).get<double>());
          ba.hi.push_back(iv.at(1).get<double>());
        }
        ha = hull_of_box(ba);
      } else {
        na = p.at("a").get<std::string>();
        const ModulationFunction& f = sc.functions.at(na);
        ha = f.is_analytic() && f.get_if<GaussianPacket>() == nullptr
                 ? analytic_support_polytope(f)
                 : support_hull(ensure_grid(f, sc.grid), theta);
      }
      if (p.contains("b_box")) {
        Box bb;
        for (const auto& iv : p.at("b_box")) {
          bb.lo.push_back(iv.at(0).get<double>());
          bb.hi.push_back(iv.at(1).get<double>());
        }
        hb = hull_of_box(bb);
      } else {
        nb = p.at("b").get<std::string>();
        const ModulationFunction& g = sc.functions.at(nb);
        hb = g.is_analytic() && g.get_if<GaussianPacket>() == nullptr
                 ? analytic_support_polytope(g)
                 : support_hull(ensure_grid(g, sc.grid), theta);
      }
      Separation s = spacelike_separated(ha, hb);
      csv.row({std::to_string(i), na, nb, to_string(s)});
      results.push_back(to_string(s));
      ++i;
    }
    write_text(csv_path, csv.body);
    summary["metrics"] = {{"results", results}};
  } else if (job.kind == "causality_scan") {
    const KernelSpec& K = sc.kernels.at(body.at("kernel").get<std::string>());
    const ModulationFunction& f = sc.functions.at(body.at("f").get<std::string>());
    const ModulationFunction& g0 = sc.functions.at(body.at("g").get<std::string>());
    ShellEngine eng(sc.grid, sc.hbar);
    Channel cf = plain_channel(f);
    const double nf = eng.channel_norm(cf, K);
    CsvBuilder csv(sc, "s,comm_re,comm_im,abs,tail_bound,scale,relative,separated");
    json rows = json::array();
    for (const auto& sj : body.at("separations")) {
      const double s = sj.get<double>();
      Vec shift(static_cast<std::size_t>(sc.grid.dim()), 0.0);
      shift[1] = s;
      ModulationFunction gs = translate(g0, shift, &sc.grid);
      Channel cg = plain_channel(gs);
      InnerResult r = eng.commutator(cf, cg, K);
      const double scale = nf * eng.channel_norm(cg, K);
      const double rel = scale > 0 ? std::abs(r.value) / scale : 0.0;
      Separation sep = hull_separation_for(sc, f, gs, 1e-6);
      csv.row({fmt_double(s), fmt_double(r.value.real()), fmt_double(r.value.imag()),
               fmt_double(std::abs(r.value)), fmt_double(r.tail_bound), fmt_double(scale),
               fmt_double(rel), to_string(sep)});
      rows.push_back({{"s", s},
                      {"abs", std::abs(r.value)},
                      {"tail_bound", r.tail_bound},
                      {"relative", rel},
                      {"separated", sep == Separation::Separated}});
    }
    write_text(csv_path, csv.body);
    summary["metrics"] = {{"rows", rows}};
  } else if (job.kind == "resonance_sweep") {
    const KernelSpec& K = sc.kernels.at(body.at("kernel").get<std::string>());
    const ModulationFunction& base = sc.functions.at(body.at("base").get<std::string>());
    const ModulationFunction& probe0 = sc.functions.at(body.at("probe").get<std::string>());
    GeneratorSpec tmpl;
    if (body.contains("generator")) tmpl = sc.generators.at(body.at("generator").get<std::string>());
    const int order = body.value("order", 2);
    std::vector<double> thetas;
    for (const auto& t : body.at("thetas")) thetas.push_back(t.get<double>());
    const std::string mode = body.value("probe_mode", "carrier_scale");
    const double shell_mass = body.value("shell_mass", 1.0);
    auto map_carrier = [&](const std::function<void(Vec&)>& fix) {
      std::function<ModulationFunction(const ModulationFunction&)> rec =
          [&](const ModulationFunction& m) -> ModulationFunction {
        if (const auto* gp = m.get_if<GaussianPacket>()) {
          GaussianPacket out = *gp;
          fix(out.carrier);
          return ModulationFunction(out);
        }
        if (const auto* bp = m.get_if<BumpFunction>()) {
          BumpFunction out = *bp;
          fix(out.carrier);
          return ModulationFunction(out);
        }
        if (const auto* sum = m.get_if<FormalSum>()) {
          FormalSum out;
          for (const auto& t : sum->terms)
            out.terms.push_back({t.weight, std::make_shared<ModulationFunction>(rec(*t.fn))});
          return ModulationFunction(std::move(out));
        }
        throw Error("carrier probe modes need analytic functions");
      };
      return rec(probe0);
    };
    auto probe = [&](double th) -> ModulationFunction {
      if (mode == "carrier_scale") {
        return map_carrier([&](Vec& c) {
          for (auto& v : c) v *= th;
        });
      }
      if (mode == "carrier_shell") {
        // scale the spatial carrier by theta and keep the frequency on shell
        return map_carrier([&](Vec& c) {
          double q2 = 0.0;
          for (std::size_t a = 1; a < c.size(); ++a) {
            c[a] *= th;
            q2 += c[a] * c[a];
          }
          const double sign = c[0] < 0.0 ? -1.0 : 1.0;
          c[0] = sign * std::sqrt(shell_mass * shell_mass + q2);
        });
      }
      if (mode == "scale") return scale(probe0, Rational::from_string(fmt_double(th)), sc.grid);
      throw ParseError("unknown probe_mode '" + mode + "'");
    };
    auto rows = resonance_sweep(base, probe, tmpl, order, thetas, K, sc.grid, sc.hbar,
                                sc.degree_cap);
    CsvBuilder csv(sc, "theta,amplitude,k_order,degree_max");
    json jrows = json::array();
    for (const auto& r : rows) {
      csv.row({fmt_double(r.theta), fmt_double(r.amplitude), std::to_string(r.k_order),
               std::to_string(r.degree_max)});
      jrows.push_back({{"theta", r.theta}, {"amplitude", r.amplitude}});
    }
    write_text(csv_path, csv.body);
    summary["metrics"] = {{"rows", jrows}, {"order", order}};
    summary["config_hash"] = hex64(fnv1a(body.dump()));
  } else if (job.kind == "zeta_amplitude") {
    const KernelSpec& K = sc.kernels.at(body.at("kernel").get<std::string>());
    const ModulationFunction& f = sc.functions.at(body.at("f").get<std::string>());
    const ModulationFunction& g = sc.functions.at(body.at("g").get<std::string>());
    const GeneratorSpec& tmpl = sc.generators.at(body.at("generator").get<std::string>());
    const int order = body.value("order", 2);
    const double amp = deformed_amplitude(f, g, tmpl, order, K, sc.grid, sc.hbar, sc.degree_cap);
    ShellEngine eng(sc.grid, sc.hbar);
    const double free_amp =
        std::norm(eng.kernel_inner(plain_channel(g), plain_channel(f), K).value);
    CsvBuilder csv(sc, "amplitude,free_amplitude,ratio,k_order");
    const double ratio = free_amp > 0 ? amp / free_amp : 0.0;
    csv.row({fmt_double(amp), fmt_double(free_amp), fmt_double(ratio), std::to_string(order)});
    write_text(csv_path, csv.body);
    summary["metrics"] = {{"amplitude", amp}, {"free_amplitude", free_amp}, {"ratio", ratio}};
  } else if (job.kind == "polarize") {
    const KernelSpec& K = sc.kernels.at(body.at("kernel").get<std::string>());
    std::vector<ModulationFunction> fns;
    for (const auto& fj : body.at("functions"))
      fns.push_back(sc.functions.at(fj.get<std::string>()));
    const int n = static_cast<int>(fns.size());
    std::vector<ChannelSlot> slots;
    if (body.contains("slots")) {
      for (const auto& s : body.at("slots"))
        slots.push_back({scenario_detail::parse_functional(s, "polarize slot"),
                         scenario_detail::parse_rational(s.at("alpha"), "polarize alpha")});
    } else {
      slots.push_back({LocalFunctional::identity(), Rational{1, 1}});
    }
    const int D = body.value("max_total_degree", static_cast<int>(slots.size()));
    std::optional<ModulationFunction> bra;
    if (body.contains("bra")) bra = sc.functions.at(body.at("bra").get<std::string>());
    const GeneratorSpec* gen = nullptr;
    if (body.contains("generator"))
      gen = &sc.generators.at(body.at("generator").get<std::string>());
    const int order = body.value("order", 2);

    auto sandwich = [&](const Vec& lambda) -> Complex {
      FormalSum sum;
      for (int i = 0; i < n; ++i)
        sum.terms.push_back({Complex{lambda[static_cast<std::size_t>(i)], 0.0},
                             std::make_shared<ModulationFunction>(fns[static_cast<std::size_t>(i)])});
      ModulationFunction base{std::move(sum)};
      KernelContext ctx(K, sc.grid, sc.hbar, sc.degree_cap);
      Channel cb{base, slots};
      OperatorPolynomial S;
      if (gen) S = build_generator(instantiate_generator(*gen, base), ctx);
      OperatorPolynomial bra_op = OperatorPolynomial::scalar({1.0, 0.0});
      Channel hbra;
      if (bra) {
        // the bra mode carries the same slots so the selection rule matches
        hbra = Channel{*bra, slots};
        make_field(ctx, hbra);
      }
      make_field(ctx, cb);
      ctx.freeze();
      DeformedField zf = zeta(ctx, cb, S, gen ? order : 0);
      OperatorPolynomial expr = zf.result;
      if (bra) {
        ChannelId hid = ctx.register_channel(hbra);
        expr = multiply(lowering(hid), expr, ctx);
      }
      return vev(expr, ctx);
    };
    Complex val = polarize(sandwich, n, D);
    Complex oracle = polarize_oracle(sandwich, n, D);
    CsvBuilder csv(sc, "value_re,value_im,oracle_re,oracle_im,abs_diff");
    csv.row({fmt_double(val.real()), fmt_double(val.imag()), fmt_double(oracle.real()),
             fmt_double(oracle.imag()), fmt_double(std::abs(val - oracle))});
    write_text(csv_path, csv.body);
    summary["metrics"] = {{"value_re", val.real()},
                          {"value_im", val.imag()},
                          {"oracle_re", oracle.real()},
                          {"oracle_im", oracle.imag()},
                          {"abs_diff", std::abs(val - oracle)}};
  } else if (job.kind == "pauli_jordan_table") {
    const double m = body.value("mass", 1.0);
    CsvBuilder csv(sc, "t,x,re,im,g_ret,g_adv,identity_resid");
    for (const auto& pj : body.at("points")) {
      Vec x{pj.at(0).get<double>(), pj.at(1).get<double>()};
      Complex v = pauli_jordan(x, m);
      double gr = green_retarded(x, m), ga = green_advanced(x, m);
      Complex ident = v - Complex{0.0, -1.0} * Complex{gr - ga, 0.0};
      csv.row({fmt_double(x[0]), fmt_double(x[1]), fmt_double(v.real()), fmt_double(v.imag()),
               fmt_double(gr), fmt_double(ga), fmt_double(std::abs(ident))});
    }
    write_text(csv_path, csv.body);
    summary["metrics"] = {{"mass", m}};
  } else {
    throw ParseError("unknown job kind '" + job.kind + "'");
  }
}

inline RunReport run(const Scenario& sc, const RunOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(opt.out_dir);
  RunReport report;
  for (const auto& job : sc.jobs) {
    JobStatus st;
    st.output = job.output;
    st.kind = job.kind;
    json summary = scenario_detail::summary_base(sc, job, opt);
    try {
      run_job(sc, job, opt, summary);
      summary["status"] = "ok";
      st.ok = true;
    } catch (const std::exception& e) {
      summary["status"] = "error";
      summary["error"] = e.what();
      st.ok = false;
      st.error = e.what();
    }
    scenario_detail::write_text(opt.out_dir / (job.output + ".json"), summary.dump(2) + "\n");
    report.jobs.push_back(st);
    if (!st.ok) {
      report.exit_code = 1;
      if (!opt.keep_going) break;
    }
  }
  return report;
}

}  // namespace modlab
