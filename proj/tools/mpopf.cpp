#include "mpopf/mpopf.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

std::string sha256_hex(const std::string &data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw mpopf::Error("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

struct Globals {
  double tol = 1e-8;
  std::string report_path;
  std::string format = "text";
};

int emit(const mpopf::RunReport &r, const Globals &g) {
  const std::string body = g.format == "json" ? mpopf::report_json_text(r) : mpopf::report_text(r);
  std::cout << body;
  if (!g.report_path.empty())
    mpopf::write_report(r, g.report_path, g.format);
  return r.exit_code;
}

using Runner = mpopf::RunReport (*)(const mpopf::ParsedCase &, const std::string &, const mpopf::RunOptions &);

int run_case(const std::string &command, const std::string &path, Runner fn, const mpopf::RunOptions &opt,
             const Globals &g) {
  std::string text;
  mpopf::ParsedCase pc;
  try {
    text = mpopf::read_file(path);
    pc = mpopf::parse_case_text(text);
  } catch (const mpopf::InputError &e) {
    mpopf::RunReport r;
    r.command = command;
    r.error = e.what();
    r.exit_code = mpopf::kExitInput;
    std::cerr << "input error: " << e.what() << "\n";
    if (!g.report_path.empty())
      mpopf::write_report(r, g.report_path, g.format);
    return r.exit_code;
  }
  const std::string digest = sha256_hex(text);
  try {
    return emit(fn(pc, digest, opt), g);
  } catch (const mpopf::InputError &e) {
    std::cerr << "input error: " << e.what() << "\n";
    return mpopf::kExitInput;
  } catch (const std::exception &e) {
    mpopf::RunReport r;
    r.command = command;
    r.input_digest = digest;
    r.error = e.what();
    r.exit_code = mpopf::kExitSolverFailure;
    std::cerr << "error: " << e.what() << "\n";
    return emit(r, g);
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Multiphase radial OPF: SDP relaxation and exactness checks"};
  app.require_subcommand(1);
  Globals g;
  mpopf::RunOptions opt;
  app.add_option("--tol", g.tol, "solver tolerance")->check(CLI::PositiveNumber);
  app.add_option("--report", g.report_path, "also write the report to this path");
  app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"json", "text"}));

  std::string case_path;
  auto add_case_cmd = [&](const char *name, const char *help) {
    auto *sub = app.add_subcommand(name, help);
    sub->add_option("case", case_path, "case file (JSON)")->required();
    return sub;
  };
  auto *solve = add_case_cmd("solve", "relax, solve, certify rank one and recover voltages");
  auto *check = add_case_cmd("check", "a-priori sufficient condition from costs and bounds");
  auto *certify = add_case_cmd("certify", "solve and evaluate the a-posteriori conditions");
  auto *perturb = add_case_cmd("perturb", "perturbed-cost sweep towards zero");
  perturb->add_option("--eps0", opt.eps0, "first perturbation weight")->check(CLI::PositiveNumber);
  perturb->add_option("--ratio", opt.ratio, "geometric ratio, in (0, 1)")->check(CLI::Range(0.0, 1.0));
  perturb->add_option("--steps", opt.steps, "number of weights")->check(CLI::PositiveNumber);

  auto *gen = app.add_subcommand("gen", "write a random case");
  std::uint64_t seed = 1;
  int n = 6, m = 3;
  std::string profile = "corollary-safe", out_path;
  gen->add_option("--seed", seed, "random seed");
  gen->add_option("--n", n, "number of buses")->check(CLI::Range(2, 10000));
  gen->add_option("--m", m, "number of phases")->check(CLI::Range(1, 64));
  gen->add_option("--profile", profile, "corollary-safe, a3-safe or adversarial")
      ->check(CLI::IsMember({"corollary-safe", "a3-safe", "adversarial"}));
  gen->add_option("--out", out_path, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mpopf::kExitInput;
  }
  opt.solver.tol = g.tol;

  if (*gen) {
    try {
      const std::string text =
          mpopf::serialize_case(mpopf::generate_random_case(seed, n, m, mpopf::parse_profile(profile)));
      if (out_path.empty()) {
        std::cout << text;
      } else {
        std::ofstream f(out_path, std::ios::binary);
        f << text;
        if (!f)
          throw mpopf::Error("cannot write " + out_path);
      }
      return 0;
    } catch (const std::exception &e) {
      std::cerr << "error: " << e.what() << "\n";
      return mpopf::kExitInput;
    }
  }
  if (*solve)
    return run_case("solve", case_path, &mpopf::run_solve, opt, g);
  if (*check)
    return run_case("check", case_path, &mpopf::run_check, opt, g);
  if (*certify)
    return run_case("certify", case_path, &mpopf::run_certify, opt, g);
  if (*perturb)
    return run_case("perturb", case_path, &mpopf::run_perturb, opt, g);
  return mpopf::kExitInput;
}
