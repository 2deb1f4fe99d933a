// Scenario-driven command line front end. Exit codes: 0 success, 1 job or
// computation failure, 2 usage errors.

#include <CLI11.hpp>

#include <iostream>

#include "modlab/scenario.hpp"

namespace {

int cmd_validate(const std::string& path) {
  try {
    modlab::Scenario sc = modlab::load_scenario(path);
    std::cout << "ok: " << sc.jobs.size() << " jobs, scenario_hash=" << sc.hash << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return 1;
  }
}

int cmd_run(const std::string& path, const modlab::RunOptions& opt) {
  try {
    modlab::Scenario sc = modlab::load_scenario(path);
    modlab::RunReport rep = modlab::run(sc, opt);
    for (const auto& j : rep.jobs)
      std::cout << (j.ok ? "ok    " : "FAIL  ") << j.kind << " -> " << j.output
                << (j.ok ? "" : "  (" + j.error + ")") << "\n";
    return rep.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

void print_result(const std::string& format, const modlab::InnerResult& r) {
  if (format == "json") {
    nlohmann::json j{{"value_re", r.value.real()},
                     {"value_im", r.value.imag()},
                     {"tail_bound", r.tail_bound},
                     {"flags", r.flags}};
    std::cout << j.dump() << "\n";
  } else {
    std::cout << "value_re,value_im,tail_bound\n"
              << modlab::fmt_double(r.value.real()) << ',' << modlab::fmt_double(r.value.imag())
              << ',' << modlab::fmt_double(r.tail_bound) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modlab: modulation-function quantum field laboratory"};
  app.require_subcommand(1);

  int threads = 0;
  std::string out_dir = ".";
  std::string format = "csv";
  std::uint64_t seed = 0;
  bool keep_going = false;
  app.add_option("--threads", threads, "worker threads (default: all cores)");
  app.add_option("--out-dir", out_dir, "output directory for run artifacts");
  app.add_option("--seed", seed, "seed recorded for randomized property jobs");
  app.add_option("--format", format, "one-shot output format: csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--keep-going", keep_going, "continue past failing jobs");

  std::string scenario_path;
  auto* validate = app.add_subcommand("validate", "parse and validate a scenario file");
  validate->add_option("scenario", scenario_path, "scenario file")->required();

  auto* runcmd = app.add_subcommand("run", "execute a scenario's jobs");
  runcmd->add_option("scenario", scenario_path, "scenario file")->required();

  std::string fname, gname, kname, lname, rname;
  auto* inner = app.add_subcommand("inner", "one-shot kernel pre-inner product");
  inner->add_option("scenario", scenario_path)->required();
  inner->add_option("--f", fname)->required();
  inner->add_option("--g", gname)->required();
  inner->add_option("--kernel", kname)->required();

  auto* comm = app.add_subcommand("commutator", "one-shot field commutator");
  comm->add_option("scenario", scenario_path)->required();
  comm->add_option("--left", lname)->required();
  comm->add_option("--right", rname)->required();
  comm->add_option("--kernel", kname)->required();

  double pj_t = 0.0, pj_x = 0.0, pj_m = 1.0;
  auto* pj = app.add_subcommand("pauli-jordan", "closed-form iDelta and Green functions (1+1D)");
  pj->add_option("--t", pj_t)->required();
  pj->add_option("--x", pj_x)->required();
  pj->add_option("--mass", pj_m);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  modlab::set_thread_count(threads);
  modlab::RunOptions opt;
  opt.out_dir = out_dir;
  opt.keep_going = keep_going;
  opt.seed = seed;
  opt.format = format;

  try {
    if (validate->parsed()) return cmd_validate(scenario_path);
    if (runcmd->parsed()) return cmd_run(scenario_path, opt);
    if (inner->parsed()) {
      modlab::Scenario sc = modlab::load_scenario(scenario_path);
      modlab::ShellEngine eng(sc.grid, sc.hbar);
      auto r = eng.kernel_inner(modlab::scenario_detail::job_channel(sc, fname),
                                modlab::scenario_detail::job_channel(sc, gname),
                                sc.kernels.at(kname));
      print_result(format, r);
      return 0;
    }
    if (comm->parsed()) {
      modlab::Scenario sc = modlab::load_scenario(scenario_path);
      modlab::ShellEngine eng(sc.grid, sc.hbar);
      auto r = eng.commutator(modlab::scenario_detail::job_channel(sc, lname),
                              modlab::scenario_detail::job_channel(sc, rname),
                              sc.kernels.at(kname));
      print_result(format, r);
      return 0;
    }
    if (pj->parsed()) {
      modlab::Vec x{pj_t, pj_x};
      modlab::Complex v = modlab::pauli_jordan(x, pj_m);
      double gr = modlab::green_retarded(x, pj_m);
      double ga = modlab::green_advanced(x, pj_m);
      if (format == "json") {
        nlohmann::json j{{"re", v.real()}, {"im", v.imag()}, {"g_ret", gr}, {"g_adv", ga}};
        std::cout << j.dump() << "\n";
      } else {
        std::cout << "re,im,g_ret,g_adv\n"
                  << modlab::fmt_double(v.real()) << ',' << modlab::fmt_double(v.imag()) << ','
                  << modlab::fmt_double(gr) << ',' << modlab::fmt_double(ga) << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
