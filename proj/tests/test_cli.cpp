#include "support.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>

using namespace t;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ilab_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

char* no_env[] = {nullptr};

RunResult run_cmd(const std::string& cmd, const json& user, const fs::path& out, int workers = 1, char** env = no_env) {
  RunOptions o;
  o.command = cmd;
  o.user = user;
  o.out = out;
  o.workers = workers;
  o.env = env;
  return run(o);
}

json meta_of(const fs::path& out) { return json::parse(read_text(out / "meta.json")); }

int shell(const std::string& cmd) {
  const int st = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

// 2D Aronsson data on a square with 63^2 interior nodes, enough to split across workers.
const json kSquare = {
    {"operator", {{"gamma", 0.0}}},
    {"domain", {{"dim", 2}, {"h", 1.0 / 32}, {"shape", {{"type", "box"}, {"lo", {-1, -1}}, {"hi", {1, 1}}}}}},
    {"solver", {{"tol_residual", 1e-6}}},
    {"problem", {{"boundary", {{"type", "aronsson"}}}}}};

}  // namespace

TEST_CASE("field CSV") {
  const MaskPtr m = line(-1, 1, 1);
  ScalarField u(m, 0.0);
  u.values[at(m, {0, 0, 0})] = 1.0;
  const std::string text = field_csv(to_table(u));
  CHECK(text == "x,value\n-1,0\n0,1\n1,0\n");
  const FieldTable back = parse_field_csv(text);
  REQUIRE(back.values.size() == 3);
  CHECK(back.values[1] == 1.0);
  CHECK(back.coords[0][0] == -1.0);
  CHECK(field_csv(back) == text);

  SUBCASE("round trip of random 2D fields is exact") {
    Rng rng(51);
    const MaskPtr d = build_mask(Grid::cube(2, -1, 1, 0.1), Ball{{0, 0, 0}, 0.93});
    for (int k = 0; k < 20; ++k) {
      ScalarField f(d, 0.0);
      for (auto i : d->active()) f.values[i] = rng.uni(-1e3, 1e3) * std::pow(10.0, rng.pick(-20, 20));
      const std::string a = field_csv(to_table(f));
      const FieldTable tb = parse_field_csv(a);
      std::size_t r = 0;
      for (auto i : d->active()) CHECK(tb.values[r++] == f.values[i]);
      CHECK(field_csv(tb) == a);
    }
  }
  SUBCASE("malformed input") {
    for (const char* bad : {"", "u,value\n0,1\n", "x,value\n0,abc\n", "x,value\n0,1,2\n"}) {
      CAPTURE(bad);
      try {
        parse_field_csv(bad);
        FAIL("accepted malformed CSV");
      } catch (const Error& e) {
        CHECK(e.code() == Errc::io);
      }
    }
    ScalarField nan(m, 0.0);
    nan.values[at(m, {0, 0, 0})] = NAN;
    CHECK_THROWS_AS(to_table(nan), Error);
  }
}

TEST_CASE("trace CSV") {
  Trace t;
  t.extra_names = {"radius"};
  t.add(0.5, {5});
  t.add(0.25, {10});
  CHECK(trace_csv(t) == "iter,residual_sup,radius\n0,0.5,5\n1,0.25,10\n");
  CHECK_THROWS_AS(t.add(1.0), Error);
}

TEST_CASE("commands") {
  SUBCASE("oracle-check") {
    const fs::path out = scratch("oracle");
    const RunResult r = run_cmd("oracle-check", json::object(), out);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out / "oracle_table.csv"));
    CHECK(meta_of(out)["exit_code"] == 0);
  }
  SUBCASE("eigen brackets pi^2/4 within bracket_tol") {
    const fs::path out = scratch("eigen");
    REQUIRE(run_cmd("eigen", json::object(), out).exit_code == 0);
    const json res = meta_of(out)["results"];
    const double lo = res["lambda_lo"], hi = res["lambda_hi"], tol = res["bracket_tol"];
    CHECK(hi - lo <= tol);
    CHECK(lo <= 2.4674);
    CHECK(hi >= 2.4674);
  }
  SUBCASE("kpp field has center value near one") {
    const fs::path out = scratch("kpp");
    REQUIRE(run_cmd("kpp", json::object(), out).exit_code == 0);
    const FieldTable f = read_field(out / "field.csv");
    double center = NAN;
    for (std::size_t r = 0; r < f.values.size(); ++r)
      if (f.coords[r][0] == 0.0) center = f.values[r];
    CHECK(center >= 0.95);
  }
  SUBCASE("liouville sharpness") {
    const fs::path out = scratch("liouville");
    REQUIRE(run_cmd("liouville", {{"problem", {{"experiment", "sharpness"}}}}, out).exit_code == 0);
    CHECK(fs::exists(out / "trace.csv"));
  }
}

TEST_CASE("exit codes") {
  SUBCASE("validation errors start no compute") {
    const json bad[] = {
        {{"operator", {{"gamma", 3.0}}}},
        {{"solver", {{"max_iters", -1}}}},
        {{"domain", {{"h", 0.0}}}},
        {{"domain", {{"shape", {{"type", "blob"}}}}}},
        {{"operator", {{"gamma", "two"}}}},
        {{"domain", {{"shape", {{"type", "ball"}, {"center", {0.0}}, {"radius", 50.0}}}, {"h", 0.5}}}, {"problem", {{"boundary", {{"type", "nope"}}}}}},
    };
    for (const json& j : bad) {
      CAPTURE(j.dump());
      const fs::path out = scratch("bad");
      const RunResult r = run_cmd("solve", j, out);
      CHECK(r.exit_code == 2);
      CHECK_FALSE(fs::exists(out));
    }
    CHECK(run_cmd("frobnicate", json::object(), scratch("bad")).exit_code == 2);
    CHECK(run_cmd("solve", json::array(), scratch("bad")).exit_code == 2);
    CHECK(run_cmd("solve", json::object(), scratch("bad"), 0).exit_code == 2);
  }
  SUBCASE("non-convergence is 3") {
    const fs::path out = scratch("slow");
    const json j = {{"solver", {{"max_iters", 5}}}, {"problem", {{"boundary", {{"type", "quadratic"}}}}}};
    CHECK(run_cmd("solve", j, out).exit_code == 3);
    CHECK(meta_of(out)["results"]["status"] == "max-iters");
  }
  SUBCASE("certificate failure is 4") {
    const json j = {{"operator", {{"gamma", 2.0}}}, {"problem", {{"mode", "nonexistence"}}}};
    CHECK(run_cmd("kpp", j, scratch("cert")).exit_code == 4);
  }
}

TEST_CASE("environment overrides") {
  std::string a = "ILAB_OPERATOR__GAMMA=2", b = "ILAB_SOLVER__TOL_RESIDUAL=1e-6", c = "OTHER=1";
  char* env[] = {a.data(), b.data(), c.data(), nullptr};
  const fs::path out = scratch("env");
  REQUIRE(run_cmd("solve", {{"operator", {{"gamma", 0.0}}}}, out, 1, env).exit_code == 0);
  const json cfg = meta_of(out)["config"];
  CHECK(cfg["operator"]["gamma"] == 2.0);
  CHECK(cfg["solver"]["tol_residual"] == 1e-6);
  std::string bad = "ILAB_OPERATOR__GAMMA=7";
  char* env2[] = {bad.data(), nullptr};
  CHECK(run_cmd("solve", json::object(), scratch("env2"), 1, env2).exit_code == 2);
}

TEST_CASE("outputs do not depend on the worker count") {
  const fs::path a = scratch("w1"), b = scratch("w4"), c = scratch("w1again");
  REQUIRE(run_cmd("solve", kSquare, a, 1).exit_code == 0);
  REQUIRE(run_cmd("solve", kSquare, b, 4).exit_code == 0);
  REQUIRE(run_cmd("solve", kSquare, c, 1).exit_code == 0);
  CHECK(meta_of(a)["results"]["nodes_interior"].get<int>() > 2048);
  for (const char* f : {"field.csv", "trace.csv", "meta.json"}) {
    CAPTURE(f);
    CHECK(read_text(a / f) == read_text(b / f));
    CHECK(read_text(a / f) == read_text(c / f));
  }
}

TEST_CASE("command-line front end") {
  const std::string cli = ILAB_CLI_PATH;
  const fs::path dir = scratch("front");
  fs::create_directories(dir);
  write_text(dir / "ok.json", R"({"domain": {"h": 0.1}})");
  write_text(dir / "broken.json", "{ not json");
  write_text(dir / "invalid.json", R"({"operator": {"gamma": -1}})");
  CHECK(shell(cli + " solve --config " + (dir / "ok.json").string() + " --out " + (dir / "o").string()) == 0);
  CHECK(fs::exists(dir / "o" / "meta.json"));
  CHECK(shell(cli + " solve --config " + (dir / "broken.json").string() + " --out " + (dir / "b").string()) == 2);
  CHECK(shell(cli + " solve --config " + (dir / "invalid.json").string() + " --out " + (dir / "i").string()) == 2);
  CHECK(shell(cli + " solve --config " + (dir / "missing.json").string()) == 2);
  CHECK(shell(cli + " solve --workers 0") == 2);
  CHECK(shell(cli + " nosuchcommand") == 2);
  CHECK(shell(cli) == 2);
  CHECK(shell(cli + " solve --seed 7 --workers 2 --config " + (dir / "ok.json").string() + " --out " + (dir / "s").string()) == 0);
  CHECK(meta_of(dir / "s")["seed"] == 7);
  fs::remove_all(dir.parent_path());
}
