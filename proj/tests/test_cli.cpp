#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "unitprior/cli.hpp"
#include "unitprior/errors.hpp"
#include "unitprior/hash.hpp"

namespace fs = std::filesystem;
using namespace unitprior;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("unitprior_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

int run_main(std::vector<std::string> args) {
  args.insert(args.begin(), "unitprior");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::main(static_cast<int>(argv.size()), argv.data());
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config(const std::string& name) { return (fs::path(UNITPRIOR_CONFIG_DIR) / name).string(); }

}  // namespace

TEST(Cli, QValues) {
  EXPECT_DOUBLE_EQ(cli::parse_q("2/3"), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(cli::parse_q("0.2"), 0.2);
  EXPECT_THROW(cli::parse_q("-1"), ConfigError);
  EXPECT_THROW(cli::parse_q("x"), ConfigError);
  EXPECT_EQ(cli::q_label("2/3"), "2over3");
  EXPECT_EQ(cli::q_label("0.2"), "0p2");
}

TEST(Cli, NonlinearityText) {
  EXPECT_EQ(cli::parse_nonlinearity("relu"), NonlinearitySpec::relu());
  EXPECT_EQ(cli::parse_nonlinearity("prelu(0.1)"), NonlinearitySpec::prelu(0.1));
  EXPECT_EQ(cli::parse_nonlinearity("selu(1.05,1.67)"), NonlinearitySpec::selu(1.05, 1.67));
  EXPECT_THROW(cli::parse_nonlinearity("prelu(0.1"), ConfigError);
  EXPECT_THROW(cli::parse_nonlinearity("elu(-1)"), ConfigError);
}

TEST(Cli, ResolveFillsDefaults) {
  cli::RunOptions o;
  o.command = "contours";
  const auto r = cli::resolve(o);
  EXPECT_EQ(r.q_values, (std::vector<std::string>{"2", "1", "2/3", "1/5"}));
  EXPECT_EQ(r.points, 720u);
  EXPECT_EQ(*r.seed, 0u);

  o.command = "oracle-check";
  const auto oc = cli::resolve(o);
  EXPECT_EQ(oc.k_min, 1);
  EXPECT_EQ(oc.k_max, 8);
  EXPECT_EQ(oc.samples, 1000000u);

  o.command = "tail-sweep";
  EXPECT_THROW(cli::resolve(o), ConfigError);
  o.config = load_config(config("relu_mlp3.cfg"));
  const auto ts = cli::resolve(o);
  EXPECT_EQ(ts.layers, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(*ts.seed, 1u);
  o.layers = {4};
  EXPECT_THROW(cli::resolve(o), ConfigError);

  o.command = "bogus";
  EXPECT_THROW(cli::resolve(o), ConfigError);
}

TEST(Cli, ManifestRoundTrip) {
  cli::RunOptions o;
  o.command = "pooling";
  o.config = load_config(config("relu_mlp3.cfg"));
  o.sampling.workers = 3;
  cli::Manifest m;
  m.options = cli::resolve(o);
  m.file_hashes["a.csv"] = sha256_hex("a");
  m.wall_clock_seconds = 1.5;
  const auto back = cli::parse_manifest(cli::manifest_json(m));
  EXPECT_EQ(back.options, m.options);
  EXPECT_EQ(back.file_hashes, m.file_hashes);
  EXPECT_EQ(back.wall_clock_seconds, 1.5);
  EXPECT_THROW(cli::parse_manifest("{}"), ConfigError);
  EXPECT_THROW(cli::parse_manifest("not json"), ConfigError);
}

TEST(Cli, RunIsIndependentOfWorkers) {
  cli::RunOptions o;
  o.command = "tail-sweep";
  o.config = load_config(config("relu_mlp3.cfg"));
  o.samples = 20000;
  o.sampling.workers = 1;
  o.sampling.chunk_size = 1000;
  const auto a = cli::run(cli::resolve(o));
  o.sampling.workers = 4;
  const auto b = cli::run(cli::resolve(o));
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    EXPECT_EQ(a.files[i].name, b.files[i].name);
    EXPECT_EQ(a.files[i].content, b.files[i].content) << a.files[i].name;
  }
}

TEST(Cli, MissingConfigIsAUsageError) {
  TempDir dir;
  EXPECT_EQ(run_main({"tail-sweep", "--config", "/nonexistent.cfg", "--out", dir.path().string()}),
            cli::kUsageError);
  EXPECT_EQ(run_main({"tail-sweep", "--out", dir.path().string()}), cli::kUsageError);
  EXPECT_EQ(run_main({"no-such-command"}), cli::kUsageError);
  EXPECT_FALSE(fs::exists(dir.path() / "manifest.json"));
}

TEST(Cli, UnwritableOutputIsARuntimeError) {
  TempDir dir;
  const auto blocker = dir.path() / "file";
  std::ofstream(blocker) << "x";
  EXPECT_EQ(run_main({"contours", "--out", (blocker / "sub").string()}), cli::kRuntimeError);
}

TEST(Cli, EnvelopeWritesFilesAndManifest) {
  TempDir dir;
  ASSERT_EQ(run_main({"envelope", "--grid-points", "10000", "--out", dir.path().string(), "--assert"}), cli::kOk);
  const auto csv = read_file(dir.path() / "envelope.csv");
  EXPECT_NE(csv.find("\"relu\",holds"), std::string::npos);
  EXPECT_NE(csv.find("\"tanh\",bounded"), std::string::npos);
  const auto m = cli::parse_manifest(read_file(dir.path() / "manifest.json"));
  EXPECT_EQ(m.options.command, "envelope");
  EXPECT_EQ(m.file_hashes.at("envelope.csv"), sha256_hex(csv));
  EXPECT_EQ(m.file_hashes.size(), 2u);
}

TEST(Cli, ContoursWriteOneFilePerQ) {
  TempDir dir;
  ASSERT_EQ(run_main({"contours", "--q", "2,1,2/3,1/5", "--points", "64", "--out", dir.path().string()}), cli::kOk);
  for (const auto& name : {"contour_q2.csv", "contour_q1.csv", "contour_q2over3.csv", "contour_q1over5.csv"}) {
    EXPECT_TRUE(fs::exists(dir.path() / name)) << name;
  }
}

TEST(Cli, AssertTurnsViolationsIntoExitCode) {
  TempDir dir;
  // Two wide linear layers: both are close to Gaussian, so the tail parameter does
  // not grow and the recursion check must fail.
  const auto cfg = dir.path() / "linear2.cfg";
  std::ofstream(cfg) << "input_dim = 20\nlayer_widths = 200, 200\nnonlinearity = identity\nseed = 4\n";
  const std::vector<std::string> args{"tail-sweep", "--config", cfg.string(), "--samples", "500000",
                                      "--out", (dir.path() / "out").string()};
  EXPECT_EQ(run_main(args), cli::kOk);
  const auto recursion = read_file(dir.path() / "out" / "recursion.csv");
  EXPECT_NE(recursion.find(",fail,"), std::string::npos);
  auto with_assert = args;
  with_assert.push_back("--assert");
  EXPECT_EQ(run_main(with_assert), cli::kAssertFailed);
}

TEST(Cli, ReplayReproducesAndDetectsTampering) {
  TempDir dir;
  const auto first = dir.path() / "first";
  ASSERT_EQ(run_main({"oracle-check", "--samples", "5000", "--seed", "3", "--out", first.string()}), cli::kOk);
  EXPECT_EQ(run_main({"replay", "--manifest", (first / "manifest.json").string(), "--workers", "2", "--out",
                      (dir.path() / "second").string()}),
            cli::kOk);
  EXPECT_EQ(read_file(first / "oracle_check.csv"), read_file(dir.path() / "second" / "oracle_check.csv"));

  auto text = read_file(first / "manifest.json");
  const auto hash = sha256_hex(read_file(first / "oracle_check.csv"));
  text.replace(text.find(hash), hash.size(), std::string(64, '0'));
  std::ofstream(dir.path() / "tampered.json") << text;
  EXPECT_EQ(run_main({"replay", "--manifest", (dir.path() / "tampered.json").string(), "--out",
                      (dir.path() / "third").string()}),
            cli::kReplayMismatch);
}

TEST(Cli, OracleCheckWithConfigUsesFirstLayer) {
  TempDir dir;
  ASSERT_EQ(run_main({"oracle-check", "--config", config("relu_mlp3.cfg"), "--samples", "20000", "--out",
                      dir.path().string()}),
            cli::kOk);
  const auto csv = read_file(dir.path() / "oracle_check.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
}
