#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace singorb::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitNoConvergence = 2;
inline constexpr int kExitConfigError = 3;

/// Output directory precedence: explicit flag, then SINGORB_OUTPUT, then the config value.
std::string resolve_output_dir(const std::optional<std::string>& flag, const std::string& config_value);

/// Solves, verifies and writes solution.json, orbit.csv, trace.csv, verification.json and
/// trajectory.csv. 0 when verified, 1 when verification fails, 2 when no start
/// converges, 3 on configuration errors.
int cmd_solve(const std::filesystem::path& config_path, const std::optional<std::string>& output_dir,
              std::ostream& out, std::ostream& err);

/// Writes audit.json. 0 when some solution route is applicable, 1 otherwise.
int cmd_audit(const std::filesystem::path& config_path, const std::optional<std::string>& output_dir,
              std::ostream& out, std::ostream& err);

struct CertificateArgs {
  double h = 0.5;
  double R = 1.0;
  double beta = 3.0;
  int probes = 200;
  double a = 1.0;
  double alpha = 3.0;
  int dim = 2;
  std::uint64_t seed = 0;
  std::optional<std::string> output_dir;
};

/// Writes certificate.json. 0 when separated, 1 when not, 3 on invalid input.
int cmd_certificate(const CertificateArgs& args, std::ostream& out, std::ostream& err);

/// Re-verifies a solution.json against a config. Writes verification.json; 0 when the
/// verdict holds, 1 when it fails, 3 for unreadable or malformed input.
int cmd_verify(const std::filesystem::path& orbit_path, const std::filesystem::path& config_path,
               const std::optional<std::string>& output_dir, std::ostream& out, std::ostream& err);

}  // namespace singorb::cli
