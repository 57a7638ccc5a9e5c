#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "rkpr/io.hpp"

namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* env = std::getenv("RKPR_BIN");
  return env ? env : "";
}

int run_cli(const std::string& args) {
  const std::string cmd = binary() + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / "rkpr_cli_test";
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("cli binary is available") {
  REQUIRE_FALSE(binary().empty());
  CHECK(run_cli("--version") == 0);
}

TEST_CASE("run subcommand writes a deterministic trajectory") {
  TempDir tmp;
  const std::string out1 = tmp.file("a.csv"), out2 = tmp.file("b.csv");
  REQUIRE(run_cli("run --d 32 --max-steps 500 --seed 7 --out " + out1) == 0);
  REQUIRE(run_cli("run --d 32 --max-steps 500 --seed 7 --out " + out2) == 0);
  const std::string a = rkpr::read_text_file(out1);
  CHECK(a == rkpr::read_text_file(out2));
  CHECK(a.rfind("step,r2,s,psi\n", 0) == 0);

  // Different seed, different bytes.
  REQUIRE(run_cli("run --d 32 --max-steps 500 --seed 8 --out " + out2) == 0);
  CHECK(a != rkpr::read_text_file(out2));

  // star init is an exact fixed point.
  REQUIRE(run_cli("run --d 16 --init star --max-steps 50 --record-every 1 --seed 1 --out " + out1) == 0);
  const std::string star = rkpr::read_text_file(out1);
  CHECK(star.find("50,1,1,0\n") != std::string::npos);
  REQUIRE(run_cli("run --d 16 --init minus-star --max-steps 50 --record-every 1 --seed 1 --out " + out1) == 0);
  CHECK(rkpr::read_text_file(out1).find("50,1,-1,0\n") != std::string::npos);
}

TEST_CASE("file init and init-norm") {
  TempDir tmp;
  const std::string init = tmp.file("init.txt");
  rkpr::write_text_file(init, "1 0 0 0\n");
  const std::string out = tmp.file("t.csv");
  REQUIRE(run_cli("run --d 4 --init file:" + init + " --max-steps 10 --record-every 1 --seed 0 --out " + out) == 0);
  CHECK(rkpr::read_text_file(out).find("0,1,1,0\n") != std::string::npos);
  // Wrong length fails.
  CHECK(run_cli("run --d 5 --init file:" + init + " --max-steps 10 --out " + out) != 0);
}

TEST_CASE("state-run, drift-field, mc-check, radius-probe smoke") {
  TempDir tmp;
  REQUIRE(run_cli("state-run --d 64 --r2 4 --s 0.05 --steps 300 --seed 3 --out " + tmp.file("s.csv")) == 0);
  CHECK(rkpr::read_text_file(tmp.file("s.csv")).rfind("step,r2,s,psi\n", 0) == 0);

  REQUIRE(run_cli("drift-field --r2-min 0 --r2-max 4 --s-min -1.5 --s-max 1.5 --n 8 --out " +
                  tmp.file("f.csv") + " --svg " + tmp.file("f.svg")) == 0);
  CHECK(rkpr::read_text_file(tmp.file("f.csv")).rfind("r2,s,alpha_bar,beta_bar\n", 0) == 0);
  const std::string svg1 = rkpr::read_text_file(tmp.file("f.svg"));
  CHECK(svg1.find("<svg") != std::string::npos);
  REQUIRE(run_cli("drift-field --r2-min 0 --r2-max 4 --s-min -1.5 --s-max 1.5 --n 8 --out " +
                  tmp.file("f2.csv") + " --svg " + tmp.file("f2.svg")) == 0);
  CHECK(svg1 == rkpr::read_text_file(tmp.file("f2.svg")));

  REQUIRE(run_cli("mc-check --d 200 --samples 2000 --seed 5 --out " + tmp.file("mc.json")) == 0);
  const std::string mc = rkpr::read_text_file(tmp.file("mc.json"));
  CHECK(mc.find("\"max_abs_z\"") != std::string::npos);
  REQUIRE(run_cli("mc-check --d 200 --samples 2000 --seed 5 --out " + tmp.file("mc2.json")) == 0);
  CHECK(mc == rkpr::read_text_file(tmp.file("mc2.json")));

  REQUIRE(run_cli("radius-probe --d 64 --runs 100 --r0sq 4 --seed 6 --out " + tmp.file("r.json")) == 0);
  CHECK(rkpr::read_text_file(tmp.file("r.json")).find("\"mean_recursion\"") != std::string::npos);
}

TEST_CASE("dominance, moments and sweep smoke") {
  TempDir tmp;
  REQUIRE(run_cli("dominance --d 512 --paths 400 --seed 9 --out " + tmp.file("d.json")) == 0);
  const std::string dom = rkpr::read_text_file(tmp.file("d.json"));
  CHECK(dom.find("\"dominance\"") != std::string::npos);
  CHECK(dom.find("\"delta_budget\"") != std::string::npos);

  REQUIRE(run_cli("moments --d 512 --paths 500 --epochs 4 --mode idealized --seed 10 --out " +
                  tmp.file("m.json")) == 0);
  const std::string mom = rkpr::read_text_file(tmp.file("m.json"));
  CHECK(mom.find("\"per_epoch\"") != std::string::npos);
  CHECK(mom.find("\"m2_se\"") != std::string::npos);
  REQUIRE(run_cli("moments --d 512 --paths 300 --epochs 3 --mode coupled --seed 10 --out " +
                  tmp.file("mc.json")) == 0);
  CHECK(rkpr::read_text_file(tmp.file("mc.json")).find("\"coupled\"") != std::string::npos);

  REQUIRE(run_cli("sweep --dims 8,16 --runs 5 --seed 11 --out " + tmp.file("sw.csv")) == 0);
  const std::string sw = rkpr::read_text_file(tmp.file("sw.csv"));
  CHECK(sw.rfind("d,runs,success_fraction,median_tau2b,median_tau2b_over_dlogd\n", 0) == 0);
  CHECK(sw.find("\n8,5,") != std::string::npos);
}

TEST_CASE("config file provides defaults and flags override it") {
  TempDir tmp;
  const std::string cfg = tmp.file("cfg.txt");
  rkpr::write_text_file(cfg, "# defaults\nd = 32\nmax-steps = 200\nseed = 4\n");
  const std::string out1 = tmp.file("c1.csv"), out2 = tmp.file("c2.csv");
  REQUIRE(run_cli("run --config " + cfg + " --out " + out1) == 0);
  REQUIRE(run_cli("run --d 32 --max-steps 200 --seed 4 --out " + out2) == 0);
  CHECK(rkpr::read_text_file(out1) == rkpr::read_text_file(out2));

  // Explicit flag wins over the file.
  const std::string out3 = tmp.file("c3.csv"), out4 = tmp.file("c4.csv");
  REQUIRE(run_cli("run --config " + cfg + " --seed 9 --out " + out3) == 0);
  REQUIRE(run_cli("run --d 32 --max-steps 200 --seed 9 --out " + out4) == 0);
  CHECK(rkpr::read_text_file(out3) == rkpr::read_text_file(out4));
  CHECK(rkpr::read_text_file(out3) != rkpr::read_text_file(out1));
}

TEST_CASE("bad invocations exit nonzero") {
  TempDir tmp;
  CHECK(run_cli("run") != 0);                                    // missing --out
  CHECK(run_cli("run --init bogus --out " + tmp.file("x.csv")) != 0);
  CHECK(run_cli("state-run --d 64 --r2 1 --s 3 --steps 5 --out " + tmp.file("y.csv")) != 0);
  CHECK(run_cli("nonsense") != 0);
}
