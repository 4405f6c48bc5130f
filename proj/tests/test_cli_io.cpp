#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "kinetic/cli_io.hpp"
#include "kinetic/errors.hpp"
#include "support.hpp"

using namespace kinetic;
using testing::ScratchDir;
namespace fs = std::filesystem;

namespace {

const char* kSmallRun =
    "# small interior run\n"
    "L_x = 4\n"
    "L_v = 2\n"
    "dx = 0.1\n"
    "dv = 0.05\n"
    "dt = 0.01\n"
    "T = 0.2\n"
    "patch_center_x = 2\n"
    "patch_center_v = 0\n"
    "patch_side = 1\n"
    "patch_height = 1\n"
    "snapshot_stride = 5\n"
    "sample_stride = 5\n";

int cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " KINETIC_CLI " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("empty config resolves to the reference defaults") {
    const Config cfg = Config::parse("");
    const SolverConfig c = solver_config(cfg);
    CHECK(c.grid.d == 1);
    CHECK(c.grid.Lx == 20.0);
    CHECK(c.grid.Lv == 6.0);
    CHECK(c.grid.nx == 400);
    CHECK(c.grid.nv == 600);
    CHECK(c.dt == 1e-4);
    CHECK(c.T == 3.0);
    CHECK(c.gamma == 1.0);
    CHECK(c.patch.side == 2.0);
    CHECK(c.patch.center_x[0] == 11.0);
    CHECK(c.patch.center_v[0] == -0.3);
    CHECK(c.splitting == Splitting::Strang);
    CHECK(cfg.resolved().at("dx").get<double>() == 0.05);
    CHECK(cfg.resolved().at("patch_profile").get<std::string>() == "uniform");
}

TEST_CASE("single-key override") {
    const SolverConfig c = solver_config(Config::parse("gamma = 5.0  # strong coupling\n"));
    CHECK(c.gamma == 5.0);
    CHECK(c.dt == 1e-4);
}

TEST_CASE("dt = 1 violates the CFL bound") {
    CHECK_THROWS_AS(solver_config(Config::parse("dt = 1.0\n")), ValidationError);
}

TEST_CASE("parse errors carry the line number") {
    try {
        Config::parse("gamma = 1\n\nnot a pair\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    try {
        Config::parse("gamma = 1\ngamma = 2\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    try {
        Config::parse("# header\nbogus = 1\n").restrict_to(known_keys("run"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    try {
        solver_config(Config::parse("\ngamma = fast\n"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("list and flag values") {
    const Config cfg = Config::parse("p_list = 1.5, 2,3\nrecord_duhamel = yes\nd = 2\npatch_center_x = 3, 4\n"
                                     "L_x = 8\nL_v = 2\ndx = 0.5\ndv = 0.25\ndt = 0.1\nT = 1\n");
    CHECK(cfg.list("p_list", {}) == std::vector<double>{1.5, 2.0, 3.0});
    CHECK(cfg.flag("record_duhamel", false));
    const SolverConfig c = solver_config(cfg);
    CHECK(c.patch.center_x[0] == 3.0);
    CHECK(c.patch.center_x[1] == 4.0);
    CHECK(c.patch.center_v[1] == -0.3);  // one component broadcasts
}

TEST_CASE("field files round-trip bit for bit") {
    ScratchDir dir("field");
    const SolverConfig c = solver_config(Config::parse(kSmallRun));
    DistributionField f = initial_field(c);
    f.time = 0.125;
    write_field(dir / "f", f);
    const DistributionField g = read_field(dir / "f.f64");
    CHECK(g.grid == f.grid);
    CHECK(g.time == f.time);
    CHECK(g.values == f.values);
    CHECK(read_field(dir / "f.json").values == f.values);

    const auto side = nlohmann::json::parse(testing::slurp(dir / "f.json"));
    for (const char* key : {"d", "nx", "nv", "dx", "dv", "x0", "v0", "time"}) CHECK(side.contains(key));
    CHECK(fs::file_size(dir / "f.f64") ==
          side["nx"].get<std::size_t>() * side["nv"].get<std::size_t>() * 8);

    fs::resize_file(dir / "f.f64", 8 * 10);
    CHECK_THROWS_AS(read_field(dir / "f"), IoError);
    fs::remove(dir / "f.json");
    CHECK_THROWS_AS(read_field(dir / "f"), IoError);
}

TEST_CASE("run writes the documented artifacts and manifest") {
    ScratchDir dir("run");
    const RunManifest m = orchestrate("run", Config::parse(kSmallRun), dir.path);
    CHECK(testing::first_line(dir / "observables.csv") ==
          "t,mass,mom_1,energy,entropy,lp_2,R,S,dE_dt,dH_dt,dLp_2_dt");
    CHECK(testing::first_line(dir / "diagnostics.csv") ==
          "t,mass_outside_Q,outflow,duhamel_integrand,min_value");
    CHECK(testing::first_line(dir / "hprofile_0.csv") == "v,h");
    for (int k = 0; k < 5; ++k) {
        CHECK(fs::exists(dir / ("snapshot_" + std::to_string(k) + ".f64")));
        CHECK(fs::exists(dir / ("snapshot_" + std::to_string(k) + ".json")));
    }
    CHECK_FALSE(fs::exists(dir / "snapshot_5.f64"));
    const auto manifest = nlohmann::json::parse(testing::slurp(dir / "manifest.json"));
    CHECK(manifest["subcommand"] == "run");
    CHECK(manifest["config"]["gamma"].get<double>() == 1.0);
    CHECK(manifest["config"]["T"].get<double>() == 0.2);
    for (const auto& a : manifest["artifacts"]) CHECK(fs::exists(dir / a.get<std::string>()));
    CHECK(m.artifacts.size() == manifest["artifacts"].size());
    // observables rows: t = 0, 0.05, ..., 0.2
    const std::string obs = testing::slurp(dir / "observables.csv");
    CHECK(std::count(obs.begin(), obs.end(), '\n') == 6);
}

TEST_CASE("identical configs give byte-identical outputs") {
    ScratchDir a("det_a"), b("det_b");
    orchestrate("run", Config::parse(kSmallRun), a.path);
    orchestrate("run", Config::parse(kSmallRun), b.path);
    for (const char* name : {"observables.csv", "diagnostics.csv", "snapshot_4.f64", "hprofile_2.csv"})
        CHECK(testing::slurp(a / name) == testing::slurp(b / name));
}

TEST_CASE("compare of a run with itself is zero; scatter reads the run") {
    ScratchDir run_dir("cmp_run"), out("cmp_out");
    orchestrate("run", Config::parse(kSmallRun), run_dir.path);
    const RunManifest m = compare_run_dirs(run_dir.path, run_dir.path, out.path);
    CHECK(m.summary["matched"].get<int>() == 5);
    const std::string csv = testing::slurp(out / "compare.csv");
    CHECK(csv.rfind("k,t,l1_distance\n", 0) == 0);
    std::size_t pos = csv.find('\n') + 1, rows = 0;
    while (pos < csv.size()) {
        const std::size_t end = csv.find('\n', pos);
        const std::string line = csv.substr(pos, end - pos);
        CHECK(line.substr(line.rfind(',') + 1) == "0");
        pos = end + 1;
        ++rows;
    }
    CHECK(rows == 5);

    scatter_run_dir(run_dir.path, out.path);
    CHECK(testing::first_line(out / "scattering.csv") == "t1,t2,residual,tail_t1");
}

TEST_CASE("scatter on a directory without snapshots names the missing file") {
    ScratchDir dir("scatter_empty");
    try {
        scatter_run_dir(dir.path, dir.path);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("snapshot_0.f64") != std::string::npos);
    }
}

TEST_CASE("homogeneous table") {
    ScratchDir dir("homog");
    orchestrate("homogeneous", Config::parse("times = 0, 1\n"), dir.path);
    const std::string csv = testing::slurp(dir / "homogeneous.csv");
    CHECK(csv.rfind("t,sup,R,energy,entropy\n0,0.5,1,", 0) == 0);
}

TEST_CASE("monokinetic series reports the blow-up") {
    ScratchDir dir("mono");
    orchestrate("monokinetic", Config::parse("n_markers = 200\ndeposit_width = 0.03\n"), dir.path);
    CHECK(testing::first_line(dir / "mono_series.csv") == "t,min_gap,max_dxu,peak_rho");
    const auto manifest = nlohmann::json::parse(testing::slurp(dir / "manifest.json"));
    CHECK(manifest["summary"]["crossed"].get<bool>());
    CHECK(manifest["summary"]["blowup_estimate"].get<double>() == doctest::Approx(1.0).epsilon(2e-3));
    CHECK(fs::exists(dir / "mono_deposit.f64"));
}

TEST_CASE("particles outputs") {
    ScratchDir dir("particles");
    const std::string cfg = std::string(kSmallRun) + "N_list = 100, 400\nbin_interval = 0.1\nobs_interval = 0.05\n";
    orchestrate("particles", Config::parse(cfg), dir.path);
    CHECK(testing::first_line(dir / "particles_obs.csv") == "t,mom_1,vel_diameter");
    CHECK(testing::first_line(dir / "convergence.csv") == "N,t,l1_distance");
    const std::string conv = testing::slurp(dir / "convergence.csv");
    CHECK(std::count(conv.begin(), conv.end(), '\n') == 1 + 2 * 3);
    CHECK(fs::exists(dir / "empirical_5.json"));
    const auto manifest = nlohmann::json::parse(testing::slurp(dir / "manifest.json"));
    CHECK(manifest["seed"].get<int>() == 1);
}

TEST_CASE("picard outputs") {
    ScratchDir dir("picard");
    orchestrate("picard", Config::parse("L_x = 4\nL_v = 4\ndx = 0.25\ndv = 0.25\nT_loc = 0.02\n"), dir.path);
    CHECK(testing::first_line(dir / "picard_increments.csv") == "n,increment");
    CHECK(fs::exists(dir / "picard_final.f64"));
}

TEST_CASE("executable exit codes") {
    ScratchDir dir("exit");
    testing::spit(dir / "bad.cfg", "dt = 1.0\n");
    CHECK(cli("run --config " + (dir / "bad.cfg").string() + " --out " + (dir / "r").string()) == 1);
    testing::spit(dir / "unknown.cfg", "gamma = 1\nwidth = 2\n");
    CHECK(cli("run --config " + (dir / "unknown.cfg").string() + " --out " + (dir / "r").string()) == 1);
    CHECK(cli("run --config " + (dir / "missing.cfg").string()) == 3);
    fs::create_directories(dir / "empty");
    CHECK(cli("scatter --run-dir " + (dir / "empty").string()) == 3);
    testing::spit(dir / "stuck.cfg",
                  "L_x = 4\nL_v = 4\ndx = 0.5\ndv = 0.5\ntol = 1e-300\nmax_iter = 2\nmax_halvings = 0\n");
    CHECK(cli("picard --config " + (dir / "stuck.cfg").string() + " --out " + (dir / "p").string()) == 2);
    CHECK(cli("frobnicate") == 1);
}

TEST_CASE("outputs do not depend on the worker count") {
    ScratchDir dir("threads");
    testing::spit(dir / "small.cfg", kSmallRun);
    const std::string cfg = (dir / "small.cfg").string();
    REQUIRE(cli("run --config " + cfg + " --out " + (dir / "one").string(), "KINETIC_THREADS=1") == 0);
    REQUIRE(cli("run --config " + cfg + " --out " + (dir / "three").string(), "KINETIC_THREADS=3") == 0);
    for (const char* name : {"observables.csv", "snapshot_4.f64", "manifest.json"})
        CHECK(testing::slurp(dir / ("one/" + std::string(name))) ==
              testing::slurp(dir / ("three/" + std::string(name))));
}
