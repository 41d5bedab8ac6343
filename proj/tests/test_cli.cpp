#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("ssca_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }
};

int run(const std::string& args, const Sandbox& box) {
  const std::string cmd = std::string(SSCA_FL_BIN) + " " + args + " >" + box.path("stdout") + " 2>" +
                          box.path("stderr");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kConfig =
    "algorithm = ssca-sample-con\n"
    "rounds = 4\n"
    "batch = 10\n"
    "clients = 2\n"
    "hidden = 4\n"
    "repetitions = 2\n"
    "ubound = 0.5\n"
    "data.synthetic = 80,6,3,3,5\n";

}  // namespace

TEST_CASE("run writes a deterministic CSV") {
  Sandbox box;
  const std::string cfg = box.write("run.cfg", kConfig);
  REQUIRE(run("run --config " + cfg + " --out " + box.path("a.csv"), box) == 0);
  REQUIRE(run("run --config " + cfg + " --out " + box.path("b.csv") + " --transport socket --jobs 2", box) == 0);
  const std::string a = slurp(box.path("a.csv"));
  CHECK(a == slurp(box.path("b.csv")));
  CHECK(a.find("rep,round,training_cost") != std::string::npos);
  CHECK(slurp(box.path("stderr")).find("warning:") != std::string::npos);

  REQUIRE(run("run --config " + cfg + " --seed 5 --out " + box.path("c.csv"), box) == 0);
  CHECK(slurp(box.path("c.csv")).find("# seed = 5") != std::string::npos);
}

TEST_CASE("run reads IDX files") {
  Sandbox box;
  std::vector<unsigned char> pixels;
  std::vector<unsigned char> labels;
  for (int n = 0; n < 20; ++n) {
    labels.push_back(static_cast<unsigned char>(n % 2));
    for (int p = 0; p < 4; ++p) pixels.push_back(static_cast<unsigned char>((n * 37 + p * 11) % 256));
  }
  oracle::write_bytes(box.path("img"), oracle::idx_images(20, 2, 2, pixels));
  oracle::write_bytes(box.path("lab"), oracle::idx_labels(labels));
  const std::string cfg = box.write("idx.cfg", "rounds = 2\nbatch = 5\nclients = 2\nhidden = 3\n");
  CHECK(run("run --config " + cfg + " --mnist-images " + box.path("img") + " --mnist-labels " + box.path("lab"),
            box) == 0);
  CHECK(slurp(box.path("stdout")).find("# data.mnist_images = " + box.path("img")) != std::string::npos);

  oracle::write_bytes(box.path("bad"), {1, 2, 3});
  CHECK(run("run --config " + cfg + " --mnist-images " + box.path("bad") + " --mnist-labels " + box.path("lab"),
            box) == 2);
  CHECK(slurp(box.path("stderr")).find(box.path("bad")) != std::string::npos);
}

TEST_CASE("exit codes") {
  Sandbox box;
  CHECK(run("run --config " + box.write("bad.cfg", "bogus = 1\n"), box) == 2);
  CHECK(run("run --config " + box.path("missing.cfg"), box) == 2);
  CHECK(run("frobnicate", box) == 2);
  CHECK(run("run --config " + box.write("big.cfg", "batch = 501\n"), box) == 2);
  CHECK(run("run --config " + box.write("strict.cfg", "schedule.strict = true\n"), box) == 2);
  // A huge ridge weight makes every SGD step multiply the model by about -2e6.
  CHECK(run("run --synthetic 40,4,2,3,1 --config " +
                box.write("nan.cfg", "algorithm = sgd-sample\nrounds = 100\nlambda = 1e6\nbaseline.lr.alpha = 0\n"
                                     "batch = 5\nclients = 2\nhidden = 2\n"),
            box) == 3);
}

TEST_CASE("sweep") {
  Sandbox box;
  const std::string cfg = box.write("sweep.cfg", kConfig);
  REQUIRE(run("sweep --config " + cfg + " --ubound 0.4,0.8 --out " + box.path("s.csv"), box) == 0);
  const std::string s = slurp(box.path("s.csv"));
  CHECK(s.find("ubound,final_training_cost,final_l2_norm\n0.4,") != std::string::npos);
  CHECK(run("sweep --config " + cfg + " --lambda 0.1", box) == 2);
  CHECK(run("sweep --config " + cfg, box) == 2);
  CHECK(run("sweep --config " + cfg + " --ubound 0.4,x", box) == 2);
}

TEST_CASE("check and preset") {
  Sandbox box;
  CHECK(run("check --config " + box.write("c.cfg", "rho.alpha = 0.4\ngamma.alpha = 0.6\n"), box) == 0);
  CHECK(slurp(box.path("stdout")).find("gamma_square_summable   = true") != std::string::npos);
  CHECK(run("check --config " + box.write("d.cfg", "preset = sample-100\n"), box) == 0);
  CHECK(slurp(box.path("stdout")).find("note:") != std::string::npos);

  CHECK(run("preset", box) == 0);
  CHECK(slurp(box.path("stdout")).find("feature-1000") != std::string::npos);
  CHECK(run("preset sample-6000", box) == 0);
  CHECK(slurp(box.path("stdout")).find("batch = 6000") != std::string::npos);
  CHECK(run("preset nope", box) == 2);
  CHECK(run("--version", box) == 0);
}
