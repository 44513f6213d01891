// Command-line front end: solve, audit, certificate, verify.
#include <CLI11.hpp>
#include <iostream>

#include "singorb/commands.hpp"
#include "singorb/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Periodic orbits of singular Hamiltonian systems at fixed energy"};
  app.set_version_flag("--version", std::string(SINGORB_VERSION));
  app.footer(singorb::config_reference() +
             "\nOutput directory precedence: --output, then SINGORB_OUTPUT, then output_dir.\n"
             "Exit codes: 0 success, 1 check failed, 2 no convergence, 3 config or input error.");
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> output;

  auto* solve = app.add_subcommand("solve", "minimize, verify and write solution artifacts");
  solve->add_option("config", config, "config file")->required();
  solve->add_option("-o,--output", output, "output directory");

  auto* audit = app.add_subcommand("audit", "check the potential's hypotheses on sampled shells");
  audit->add_option("config", config, "config file")->required();
  audit->add_option("-o,--output", output, "output directory");

  singorb::cli::CertificateArgs cert;
  auto* certificate = app.add_subcommand("certificate", "saddle-geometry probe certificate for V = -a|x|^-alpha");
  certificate->set_help_flag("--help", "print this help message and exit");
  certificate->add_option("--h", cert.h, "energy")->capture_default_str();
  certificate->add_option("--R", cert.R, "radius of the constant-loop cap")->capture_default_str();
  certificate->add_option("--beta", cert.beta, "growth exponent, must exceed 2")->capture_default_str();
  certificate->add_option("--probes", cert.probes, "number of probe loops")->capture_default_str();
  certificate->add_option("--a", cert.a, "potential coefficient")->capture_default_str();
  certificate->add_option("--alpha", cert.alpha, "potential exponent")->capture_default_str();
  certificate->add_option("--dim", cert.dim, "space dimension")->capture_default_str();
  certificate->add_option("--seed", cert.seed, "probe RNG seed")->capture_default_str();
  certificate->add_option("-o,--output", cert.output_dir, "output directory");

  std::string orbit;
  auto* verify = app.add_subcommand("verify", "re-verify a solution.json by ODE integration");
  verify->add_option("--orbit", orbit, "solution.json to check")->required();
  verify->add_option("--config", config, "config file")->required();
  verify->add_option("-o,--output", output, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : singorb::cli::kExitConfigError;
  }

  if (solve->parsed()) return singorb::cli::cmd_solve(config, output, std::cout, std::cerr);
  if (audit->parsed()) return singorb::cli::cmd_audit(config, output, std::cout, std::cerr);
  if (certificate->parsed()) return singorb::cli::cmd_certificate(cert, std::cout, std::cerr);
  if (verify->parsed()) return singorb::cli::cmd_verify(orbit, config, output, std::cout, std::cerr);
  return singorb::cli::kExitConfigError;
}
