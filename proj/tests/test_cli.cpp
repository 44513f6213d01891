#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = SINGORB_CLI;
const fs::path kData = SINGORB_TEST_DATA;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("singorb_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int code;
  std::string err;
};

Run run(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = kCli + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Same keys everywhere; numbers equal to within a mixed tolerance.
void compare_with_tolerance(const json& actual, const json& golden, const std::string& path) {
  CAPTURE(path);
  if (golden.is_object()) {
    REQUIRE(actual.is_object());
    CHECK(actual.size() == golden.size());
    for (const auto& [key, value] : golden.items()) {
      REQUIRE(actual.contains(key));
      if (key != "version") compare_with_tolerance(actual[key], value, path + "." + key);
    }
  } else if (golden.is_array()) {
    REQUIRE(actual.is_array());
    REQUIRE(actual.size() == golden.size());
    for (std::size_t i = 0; i < golden.size(); ++i) compare_with_tolerance(actual[i], golden[i], path + "[" + std::to_string(i) + "]");
  } else if (golden.is_number_float()) {
    REQUIRE(actual.is_number());
    const double a = actual.get<double>(), g = golden.get<double>();
    CHECK(std::abs(a - g) <= 1e-8 + 1e-6 * std::abs(g));
  } else if (path.find(".iterations") == std::string::npos) {
    CHECK(actual == golden);
  }
}

}  // namespace

TEST_CASE("help lists every config key") {
  const fs::path d = scratch("help");
  CHECK(run("--help", d).code == 0);
  std::ifstream in(d / "stdout.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find("audit.mu2") != std::string::npos);
  CHECK(ss.str().find("SINGORB_OUTPUT") != std::string::npos);
  CHECK(run("frobnicate", d).code == 3);
}

TEST_CASE("solve the circular problem and compare against the golden file") {
  const fs::path d = scratch("solve");
  const Run r = run("solve " + (kData / "circular_alpha3.cfg").string() + " --output " + (d / "out").string(), d);
  CHECK(r.code == 0);
  for (const char* f : {"solution.json", "orbit.csv", "trace.csv", "verification.json", "trajectory.csv"}) {
    CHECK(fs::exists(d / "out" / f));
  }
  const json s = read_json(d / "out" / "solution.json");
  CHECK(s["period"].get<double>() == doctest::Approx(3.6276).epsilon(1e-4));
  CHECK(s["schema"] == "singorb.solution");
  CHECK(s.contains("version"));
  CHECK(read_json(d / "out" / "verification.json")["verdict"] == true);
  compare_with_tolerance(s, read_json(kData / "golden_solution.json"), "$");

  std::ifstream orbit(d / "out" / "orbit.csv");
  std::string header;
  std::getline(orbit, header);
  CHECK(header == "t,q_1,q_2,v_1,v_2,energy");
  std::ifstream trace(d / "out" / "trace.csv");
  std::getline(trace, header);
  CHECK(header == "route,start,iteration,f,grad_norm,step,constraint_residual");
}

TEST_CASE("solve twice gives identical solution files") {
  const fs::path d = scratch("determinism");
  const std::string cfg = (kData / "circular_alpha3.cfg").string();
  REQUIRE(run("solve " + cfg + " -o " + (d / "a").string(), d).code == 0);
  REQUIRE(run("solve " + cfg + " -o " + (d / "b").string(), d).code == 0);
  CHECK(read_json(d / "a" / "solution.json") == read_json(d / "b" / "solution.json"));
}

TEST_CASE("both routes") {
  const fs::path d = scratch("both");
  write_file(d / "both.cfg", "potential.a = 1\npotential.alpha = 3\nh = 0.5\nroute = both\nmodes = 16\n");
  CHECK(run("solve " + (d / "both.cfg").string() + " -o " + (d / "out").string(), d).code == 0);
  const json s = read_json(d / "out" / "solution.json");
  CHECK(s["route"] == "both");
  CHECK(s["routes"].contains("free"));
  CHECK(s["routes"].contains("constrained"));
  CHECK(s["routes"]["free"]["period"].get<double>() ==
        doctest::Approx(s["routes"]["constrained"]["period"].get<double>()).epsilon(1e-6));
}

TEST_CASE("solve rejects configs") {
  const fs::path d = scratch("reject");
  write_file(d / "h0.cfg", "potential.a = 1\npotential.alpha = 3\nh = 0\naudit.mu2 = 0\n");
  Run r = run("solve " + (d / "h0.cfg").string() + " -o " + (d / "out").string(), d);
  CHECK(r.code == 3);
  CHECK(r.err.find("h > mu2/alpha") != std::string::npos);

  write_file(d / "bad.cfg", "potential.a = 1\npotential.alpha = two\nh = 0.5\n");
  r = run("solve " + (d / "bad.cfg").string() + " -o " + (d / "out").string(), d);
  CHECK(r.code == 3);
  CHECK(r.err.find("potential.alpha") != std::string::npos);

  CHECK(run("solve " + (d / "missing.cfg").string(), d).code == 3);
}

TEST_CASE("solve reports no convergence") {
  const fs::path d = scratch("noconv");
  write_file(d / "floor.cfg", "potential.a = 1\npotential.alpha = 3\nh = 0.5\nmin_radius_floor = 1000\nrestarts = 2\n");
  CHECK(run("solve " + (d / "floor.cfg").string() + " -o " + (d / "out").string(), d).code == 2);
}

TEST_CASE("audit exit codes") {
  const fs::path d = scratch("audit");
  Run r = run("audit " + (kData / "circular_alpha3.cfg").string() + " -o " + d.string(), d);
  CHECK(r.code == 0);
  const json a = read_json(d / "audit.json");
  CHECK(a["applicable_routes"] == json::array({"minimization", "saddle_point"}));
  CHECK(a["hypotheses"]["A5"]["holds_on_samples"] == false);

  write_file(d / "kepler.cfg", "potential.a = 1\npotential.alpha = 1\nh = -0.5\naudit.beta_target = 1\n");
  CHECK(run("audit " + (d / "kepler.cfg").string() + " -o " + d.string(), d).code == 1);
  CHECK(read_json(d / "audit.json")["hypotheses"]["strong_force"]["holds_on_samples"] == false);

  write_file(d / "neg.cfg", "potential.a = 1\npotential.alpha = 3\nh = -1\n");
  CHECK(run("audit " + (d / "neg.cfg").string() + " -o " + d.string(), d).code == 1);
}

TEST_CASE("certificate exit codes") {
  const fs::path d = scratch("certificate");
  CHECK(run("certificate --h 0.5 --R 1 --beta 3 -o " + d.string(), d).code == 0);
  const json c = read_json(d / "certificate.json");
  CHECK(c["separated"] == true);
  CHECK(c["M_R"].get<double>() == 1.0 + 1.0 / std::sqrt(12.0));
  CHECK(run("certificate --h 0.5 --R 10 --beta 3 -o " + d.string(), d).code == 0);
  CHECK(run("certificate --h 0.5 --R 1 --beta 2 -o " + d.string(), d).code == 3);
  CHECK(run("certificate --h 0.5 --R 1 --beta 3 --probes 0 -o " + d.string(), d).code == 3);
}

TEST_CASE("verify exit codes") {
  const fs::path d = scratch("verify");
  const std::string cfg = (kData / "circular_alpha3.cfg").string();
  const std::string golden = (kData / "golden_solution.json").string();
  CHECK(run("verify --orbit " + golden + " --config " + cfg + " -o " + d.string(), d).code == 0);
  CHECK(read_json(d / "verification.json")["verdict"] == true);

  json bent = read_json(kData / "golden_solution.json");
  bent["loop"]["cos"][2][0] = bent["loop"]["cos"][2][0].get<double>() + 1e-2;
  write_file(d / "bent.json", bent.dump());
  CHECK(run("verify --orbit " + (d / "bent.json").string() + " --config " + cfg + " -o " + d.string(), d).code == 1);

  CHECK(run("verify --orbit " + (d / "missing.json").string() + " --config " + cfg, d).code == 3);
  write_file(d / "garbage.json", "{not json");
  CHECK(run("verify --orbit " + (d / "garbage.json").string() + " --config " + cfg, d).code == 3);
}

TEST_CASE("output directory from the environment") {
  const fs::path d = scratch("env");
  const std::string cmd = "SINGORB_OUTPUT=" + (d / "envout").string() + " " + kCli + " audit " +
                          (kData / "circular_alpha3.cfg").string() + " > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(d / "envout" / "audit.json"));
}
