#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fwm/app.hpp"
#include "fwm/error.hpp"
#include "fwm/io.hpp"
#include "fwm/scenario.hpp"

using namespace fwm;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fwmrecon");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = app::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("fwm_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> fidelities(const std::string& report_json) {
  std::vector<double> out;
  const auto j = io::Json::parse(report_json);
  for (const auto& b : j["branches"])
    if (b.contains("fidelity")) out.push_back(b["fidelity"].get<double>());
  return out;
}

}  // namespace

TEST_CASE("exit codes follow the error kind") {
  CHECK(app::exit_code(ErrorKind::validation) == 2);
  CHECK(app::exit_code(ErrorKind::configuration) == 2);
  CHECK(app::exit_code(ErrorKind::resolution) == 3);
  CHECK(app::exit_code(ErrorKind::ill_conditioned) == 3);
  CHECK(app::exit_code(ErrorKind::unavailable) == 4);
  CHECK(app::exit_code(ErrorKind::linking) == 4);
  CHECK(app::exit_code(ErrorKind::io) == 5);

  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  const auto unknown = cli({"pipeline", "--demo", "no-such-demo"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.rfind("error: ", 0) == 0);
  CHECK(cli({"pipeline", "--config", "/nonexistent/scenario.json"}).code == 5);
  CHECK(cli({"pipeline", "--demo", "case-I", "--config", "x.json"}).code == 2);
}

TEST_CASE("demo listing and export") {
  const auto list = cli({"demo"});
  CHECK(list.code == 0);
  for (const auto& n : demos::names()) CHECK(list.out.find(n) != std::string::npos);
  const auto dir = temp_dir("demo");
  CHECK(cli({"demo", "case-II", "-o", (dir / "c.json").string()}).code == 0);
  const auto s = io::load_scenario(dir / "c.json");
  CHECK(io::scenario_to_json(s) == io::scenario_to_json(demos::case_II()));
  fs::remove_all(dir);
}

TEST_CASE("pipeline writes its outputs") {
  const auto dir = temp_dir("pipeline");
  const auto r = cli({"pipeline", "--demo", "case-I", "--out", dir.string(), "--json"});
  REQUIRE(r.code == 0);
  for (const char* f : {"spectrogram.txt", "calibration.txt", "beat_spectrum.txt", "bars.txt", "report.txt",
                        "report.json"})
    CHECK(fs::exists(dir / f));
  const auto fid = fidelities(slurp(dir / "report.json"));
  REQUIRE(fid.size() == 2);
  for (double f : fid) CHECK(f > 0.999);
  CHECK(fidelities(r.out) == fid);
  fs::remove_all(dir);
}

TEST_CASE("reconstruct from files ignores the forward model") {
  const auto dir = temp_dir("files");
  REQUIRE(cli({"demo", "case-II", "-o", (dir / "s.json").string()}).code == 0);
  REQUIRE(cli({"simulate", "-c", (dir / "s.json").string(), "-o", dir.string()}).code == 0);
  REQUIRE(cli({"calibrate", "-c", (dir / "s.json").string(), "-o", dir.string()}).code == 0);

  // Probes and grids for the second integral are replaced by nonsense; only the
  // level structure, populations and truth are read by reconstruct.
  auto j = io::Json::parse(slurp(dir / "s.json"));
  j["probes"]["pulse2"] = io::pulse_to_json(PulseSpec::gaussian(7.0, 40.0, 0.5));
  j["probes"]["pulse3"] = io::pulse_to_json(PulseSpec::gaussian(cplx(0.0, 3.0), -40.0, 0.5));
  j["forward"]["omega2_grid_rad_per_tu"] = {{"start", 30.0}, {"step", 0.5}, {"count", 40}};
  std::ofstream(dir / "scrambled.json") << j.dump(2);

  const auto r = cli({"reconstruct", "-c", (dir / "scrambled.json").string(), "-s", (dir / "spectrogram.txt").string(),
                      "--calibration", (dir / "calibration.txt").string(), "--json"});
  REQUIRE(r.code == 0);
  const auto fid = fidelities(r.out);
  REQUIRE(!fid.empty());
  for (double f : fid) CHECK(f > 1.0 - 1e-9);

  SUBCASE("missing calibration file") {
    const auto m = cli({"reconstruct", "-c", (dir / "s.json").string(), "-s", (dir / "spectrogram.txt").string(),
                        "--calibration", (dir / "absent.txt").string()});
    CHECK(m.code == 5);
  }
  SUBCASE("calibration on another grid") {
    auto g = io::Json::parse(slurp(dir / "s.json"));
    g["forward"]["omega_grid_rad_per_tu"]["start"] = g["forward"]["omega_grid_rad_per_tu"]["start"].get<double>() - 0.5;
    std::ofstream(dir / "shifted.json") << g.dump(2);
    const auto m = cli({"reconstruct", "-c", (dir / "shifted.json").string(), "-s",
                        (dir / "spectrogram.txt").string(), "--calibration", (dir / "calibration.txt").string()});
    CHECK(m.code == 2);
  }
  fs::remove_all(dir);
}

TEST_CASE("noisy runs are deterministic per seed") {
  const auto a = temp_dir("seed_a"), b = temp_dir("seed_b");
  REQUIRE(cli({"pipeline", "-d", "case-I", "--seed", "5", "--noise", "0.01", "-o", a.string()}).code == 0);
  REQUIRE(cli({"pipeline", "-d", "case-I", "--seed", "5", "--noise", "0.01", "-o", b.string()}).code == 0);
  for (const auto& e : fs::directory_iterator(a)) CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("installed binary") {
  const std::string bin = FWMRECON_PATH;
  REQUIRE(fs::exists(bin));
  CHECK(std::system((bin + " demo > /dev/null").c_str()) == 0);
  const int status = std::system((bin + " pipeline --demo nope > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(status) == 2);
}
