#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "blockspec/config.hpp"
#include "blockspec/csv.hpp"
#include "blockspec/density.hpp"
#include "blockspec/experiments.hpp"
#include "blockspec/heterogeneity.hpp"
#include "blockspec/operator.hpp"
#include "blockspec/quadlab.hpp"
#include "doctest.h"

using namespace blockspec;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("blockspec_exp_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentManifest manifest(const std::string& sub, const fs::path& out, const std::string& cfg, unsigned jobs = 1) {
  ExperimentManifest m;
  m.subcommand = sub;
  m.out_dir = out.string();
  m.cheap = true;
  m.jobs = jobs;
  m.seed = 7;
  m.config = Config::parse(cfg);
  return m;
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

bool wrote(const ExperimentResult& r, const std::string& f) {
  return std::find(r.files.begin(), r.files.end(), f) != r.files.end();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BLOCKSPEC_CLI) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(st));
  return WEXITSTATUS(st);
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = Config::parse("# comment\n\nsteps = 12\nname=abc \nlist = 1, 2.5 ,3\nflag = true\n");
  CHECK(c.count("steps", 0) == 12);
  CHECK(c.text("name") == "abc");
  CHECK(c.numbers("list") == std::vector<double>{1, 2.5, 3});
  CHECK(c.flag("flag", false));
  CHECK(c.number("missing", 4.5) == 4.5);
  CHECK_THROWS(c.text("missing"));
  CHECK_THROWS(Config::parse("a = 1\na = 2\n"));
  CHECK_THROWS(Config::parse("no equals sign\n"));
  CHECK_THROWS(Config::parse("x = 1\n").count("x", 0) + Config::parse("x = -1\n").count("x", 0));
  CHECK_THROWS(Config::parse("x = 1.5abc\n").number("x", 0));
  CHECK_THROWS(Config::parse("x = maybe\n").flag("x", false));
  CHECK_THROWS(c.require_known({"steps", "name"}));
  CHECK_NOTHROW(c.require_known({"steps", "name", "list", "flag"}));
  const auto back = Config::parse(c.dump());
  CHECK(back.values() == c.values());
}

TEST_CASE("numeric parsing accepts subnormals and rejects junk") {
  CHECK(parse_double("2.1e-320") > 0.0);
  CHECK(parse_double("1e-400") == 0.0);
  CHECK(std::isnan(parse_double("nan")));
  CHECK(parse_double(" -3.5 ") == -3.5);
  CHECK_THROWS(parse_double("1e400"));
  CHECK_THROWS(parse_double("1.2.3"));
  CHECK_THROWS(parse_double(""));
}

TEST_CASE("unknown keys and subcommands are rejected") {
  const auto out = scratch("unknown");
  CHECK_THROWS(run_experiment(manifest("spectrum", out, "stepz = 3\n")));
  CHECK_THROWS(run_experiment(manifest("nope", out, "")));
  CHECK_THROWS(run_experiment(manifest("quadlab", out, "mode = sideways\n")));
  CHECK_THROWS(run_experiment(manifest("quadlab", out, "eta = 0.1\neta_grid = 0.1, 0.2\n")));
}

TEST_CASE("spectrum on case 3 writes three unit-mass densities") {
  const auto out = scratch("spectrum_case3");
  const auto r = run_experiment(manifest("spectrum", out, "source = case\ncase = 3\n"));
  for (int l = 0; l < 3; ++l) {
    const auto f = "density_block" + std::to_string(l) + ".csv";
    REQUIRE(wrote(r, f));
    const auto d = read_density_csv((out / f).string());
    CHECK(d.mass() == doctest::Approx(1.0).epsilon(1e-6));
    for (double v : d.values) CHECK(v >= 0.0);
  }
  CHECK_FALSE(fs::exists(out / "density_block3.csv"));
  const auto s = read_csv((out / "summary.csv").string());
  CHECK(s.rows.size() == 3);
  for (double m : s.numeric_column("mass")) CHECK(m == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(fs::exists(out / "manifest.txt"));
  CHECK(fs::exists(out / "overlay.svg"));
}

TEST_CASE("spectrum of an identity matrix peaks at 1") {
  const auto out = scratch("spectrum_identity");
  write_matrix_csv((out / "eye.csv").string(), DenseSymmetric::identity(20));
  auto m = manifest("spectrum", out / "run", "source = matrix\nmatrix = " + (out / "eye.csv").string() + "\nblocks = 10, 10\n");
  run_experiment(m);
  for (int l = 0; l < 2; ++l) {
    const auto d = read_density_csv((out / "run" / ("density_block" + std::to_string(l) + ".csv")).string());
    const auto peak = std::max_element(d.values.begin(), d.values.end()) - d.values.begin();
    CHECK(std::abs(d.grid[peak] - 1.0) <= 0.02 * (d.grid.back() - d.grid.front()));
    CHECK(d.mass() == doctest::Approx(1.0).epsilon(1e-6));
  }
  auto bad = manifest("spectrum", out / "bad", "source = matrix\nmatrix = " + (out / "eye.csv").string() + "\nblocks = 10, 9\n");
  CHECK_THROWS(run_experiment(bad));
}

TEST_CASE("heatmap of duplicated spectra is zero") {
  const auto out = scratch("heatmap_dup");
  const std::vector<double> eig{1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144};
  write_spectrum_csv((out / "a.csv").string(), eig);
  write_spectrum_csv((out / "b.csv").string(), eig);
  const std::string files = (out / "a.csv").string() + ", " + (out / "b.csv").string();
  run_experiment(manifest("heatmap", out / "run", "source = eigenvalues\nspectra = " + files + "\n"));
  const auto rep = read_heatmap_csv((out / "run" / "heatmap.csv").string());
  REQUIRE(rep.blocks() == 2);
  CHECK(rep.at(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  const auto line = slurp(out / "run" / "js0.txt");
  REQUIRE(line.rfind("js0=", 0) == 0);
  CHECK(parse_double(line.substr(4, line.find(',') - 4)) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS(run_experiment(manifest("heatmap", out / "single", "source = eigenvalues\nspectra = " + (out / "a.csv").string() + "\n")));
}

TEST_CASE("heatmap on case 3 separates blocks more than case 4") {
  const auto o3 = scratch("heatmap_c3"), o4 = scratch("heatmap_c4");
  auto m3 = manifest("heatmap", o3, "source = case\ncase = 3\n");
  auto m4 = manifest("heatmap", o4, "source = case\ncase = 4\n");
  m3.cheap = m4.cheap = false;
  run_experiment(m3);
  run_experiment(m4);
  const auto r3 = read_heatmap_csv((o3 / "heatmap.csv").string());
  const auto r4 = read_heatmap_csv((o4 / "heatmap.csv").string());
  CHECK(r3.js0 > 10 * r4.js0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r3.at(i, i) == 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(r3.at(i, j) == r3.at(j, i));
      CHECK(r3.at(i, j) >= 0.0);
      CHECK(r3.at(i, j) <= 1.0);
    }
  }
  CHECK(fs::exists(o3 / "heatmap.svg"));
}

TEST_CASE("quadlab compare writes grid, theory and trajectories") {
  const auto out = scratch("quadlab_compare");
  const auto r = run_experiment(manifest("quadlab", out, "case = 3\nseeds = 2\n"));
  const auto grid = read_csv((out / "grid.csv").string());
  CHECK_FALSE(grid.rows.empty());
  const auto best = read_csv((out / "best.csv").string());
  CHECK(best.rows.size() == 2 * 2);
  const auto traj = read_csv((out / "trajectory_seed0_gd.csv").string());
  REQUIRE(traj.header == std::vector<std::string>{"iter", "loss_ratio"});
  CHECK(traj.numeric_column("loss_ratio").front() == 1.0);
  const auto th = read_csv((out / "theory.csv").string());
  CHECK(th.rows.size() == 2);
  CHECK(fs::exists(out / "summary.csv"));
  CHECK(r.failures.empty());
}

TEST_CASE("quadlab single step size via eta") {
  const auto out = scratch("quadlab_eta");
  run_experiment(manifest("quadlab", out, "case = 4\nseeds = 1\noptimizer = gd\neta = 0.0003\n"));
  const auto grid = read_csv((out / "grid.csv").string());
  REQUIRE(grid.rows.size() == 1);
  CHECK(grid.numeric_column("eta").front() == 0.0003);
}

TEST_CASE("quadlab limit cycle and hard instance") {
  const auto lc = scratch("quadlab_lc");
  run_experiment(manifest("quadlab", lc, "mode = limit_cycle\n"));
  const auto t = read_csv((lc / "limit_cycle.csv").string());
  CHECK(t.rows.size() == 4);
  for (const auto& row : t.rows) CHECK(row[t.column("cycling")] == "true");

  const auto hi = scratch("quadlab_hard");
  run_experiment(manifest("quadlab", hi, "mode = hard_instance\n"));
  const auto g = read_csv((hi / "gd_lower.csv").string());
  CHECK(g.rows.size() == 20);
  const auto rep = parse_theory_report(slurp(hi / "theory.txt"));
  CHECK(rep.gd_factor == doctest::Approx(4999.0 / 5001.0));
}

TEST_CASE("toynet train writes curve and snapshots") {
  const auto out = scratch("toynet_train");
  run_experiment(manifest("toynet", out, "task = train\n"));
  const auto c = read_csv((out / "curve.csv").string());
  CHECK(c.header == std::vector<std::string>{"step", "loss", "accuracy"});
  const auto s = read_csv((out / "snapshots.csv").string());
  CHECK(s.rows.size() >= 2);
  for (double r : s.numeric_column("offdiag_mass_ratio")) {
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
  for (double a : s.numeric_column("asymmetry")) CHECK(a <= 1e-6);
}

TEST_CASE("outputs do not depend on the number of jobs") {
  const std::vector<std::pair<std::string, std::string>> runs{
      {"spectrum", "source = case\ncase = 3\n"},
      {"heatmap", "source = case\ncase = 4\n"},
      {"quadlab", "case = 3\nseeds = 3\n"},
      {"toynet", "task = train\ntrain_steps = 100\nsnapshot_stride = 50\n"},
  };
  for (const auto& [sub, cfg] : runs) {
    std::vector<fs::path> dirs;
    for (unsigned jobs : {1u, 4u, 8u}) {
      dirs.push_back(scratch("jobs_" + sub + "_" + std::to_string(jobs)));
      run_experiment(manifest(sub, dirs.back(), cfg, jobs));
    }
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      if (e.path().extension() != ".csv") continue;
      const auto name = e.path().filename();
      const auto ref = slurp(e.path());
      for (std::size_t k = 1; k < dirs.size(); ++k) {
        INFO(sub << " " << name.string());
        CHECK(slurp(dirs[k] / name) == ref);
      }
      ++compared;
    }
    CHECK(compared > 0);
  }
}

TEST_CASE("cli exit codes") {
  const auto out = scratch("cli");
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("spectrum") != 0);  // --out missing
  std::ofstream(out / "hard.cfg") << "mode = hard_instance\n";
  const auto cfg = (out / "hard.cfg").string();
  // the cheap hard-instance grid has step sizes below the bound
  CHECK(run_cli("quadlab --cheap --config " + cfg + " --out " + (out / "a").string()) == 0);
  CHECK(run_cli("quadlab --cheap --strict --config " + cfg + " --out " + (out / "b").string()) == 1);
  std::ofstream(out / "bad.cfg") << "mode = nope\n";
  CHECK(run_cli("quadlab --cheap --config " + (out / "bad.cfg").string() + " --out " + (out / "c").string()) == 2);
  CHECK(fs::exists(out / "a" / "gd_lower.csv"));
}
