#include <gtest/gtest.h>

#include <csignal>
#include <cstdio>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "fixtures.hpp"
#include "scribblefill/annio.hpp"
#include "scribblefill_cli/cli.hpp"

using namespace scribblefill;
namespace sc = scribblefill::cli;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = sc::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    fx_ = fixture::two_color(20, 12);
    save_image(fx_.image, file("img.png"));
    write_file(file("mask.png"), encode_gray_png(GrayImage{20, 12, fx_.mask}));
    fixture::write_text(file("classes.json"), R"([{"id": 0, "name": "red"}, {"id": 1, "name": "blue"}])");
  }

  std::string file(const std::string& name) const { return dir_.file(name); }

  Outcome enrich(std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"enrich", "--image", file("img.png"), "--mask", file("mask.png"),
                                  "--classes", file("classes.json"), "--out-labels", file("labels.png")};
    args.insert(args.end(), extra.begin(), extra.end());
    return invoke(args);
  }

  fixture::TempDir dir_;
  fixture::TwoColor fx_;
};

}  // namespace

TEST(Cli, HelpListsSubcommandsAndFlags) {
  const Outcome top = invoke({"--help"});
  EXPECT_EQ(top.code, 0);
  for (const char* s : {"enrich", "eval", "hashfit", "serve"}) {
    EXPECT_NE(top.out.find(s), std::string::npos) << s;
  }
  const Outcome en = invoke({"enrich", "--help"});
  EXPECT_EQ(en.code, 0);
  for (const char* s : {"--image", "--mask", "--classes", "--out-labels", "--threshold", "--seed"}) {
    EXPECT_NE(en.out.find(s), std::string::npos) << s;
  }
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"enrich"}).code, 2);
  EXPECT_EQ(invoke({"serve", "--port", "70000"}).code, 2);
  EXPECT_EQ(invoke({"serve", "--port", "-1"}).code, 2);
}

TEST_F(CliTest, EnrichWritesOutputs) {
  const Outcome r = enrich({"--out-confidence", file("conf.cfld"), "--dump-graph", file("g.mtx")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("class"), std::string::npos);
  const LabelMap m = load_labelmap(file("labels.png"));
  std::size_t agree = 0;
  for (std::size_t i = 0; i < m.labels.size(); ++i) agree += m.labels[i] == fx_.truth.labels[i];
  EXPECT_GE(agree, m.labels.size() - 5);
  const ConfidenceDump d = load_confidence(file("conf.cfld"));
  EXPECT_EQ(d.pixels, 240u);
  EXPECT_EQ(d.classes, (std::vector<ClassId>{0, 1}));
  const auto mtx = read_file(file("g.mtx"));
  EXPECT_EQ(std::string(mtx.begin(), mtx.begin() + 14), "%%MatrixMarket");
}

TEST_F(CliTest, EnrichIsDeterministic) {
  ASSERT_EQ(enrich({"--seed", "5"}).code, 0);
  const auto first = read_file(file("labels.png"));
  ASSERT_EQ(enrich({"--seed", "5"}).code, 0);
  EXPECT_EQ(read_file(file("labels.png")), first);
}

TEST_F(CliTest, ThresholdLabelsAreNested) {
  ASSERT_EQ(enrich({"--threshold", "0.3"}).code, 0);
  const LabelMap low = load_labelmap(file("labels.png"));
  ASSERT_EQ(enrich({"--threshold", "0.9"}).code, 0);
  const LabelMap high = load_labelmap(file("labels.png"));
  for (std::size_t i = 0; i < low.labels.size(); ++i) {
    if (high.labels[i] != kIgnored) EXPECT_EQ(high.labels[i], low.labels[i]);
  }
  EXPECT_EQ(enrich({"--threshold", "1.5"}).code, 2);
}

TEST_F(CliTest, EnrichValidationErrors) {
  std::vector<std::string> missing{"enrich", "--image", file("img.png"), "--mask", file("nope.png"),
                                   "--classes", file("classes.json"), "--out-labels", file("l.png")};
  const Outcome r = invoke(missing);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nope.png"), std::string::npos);

  write_file(file("small.png"), encode_gray_png(GrayImage{4, 4, std::vector<std::uint8_t>(16, 0)}));
  std::vector<std::string> dims{"enrich", "--image", file("img.png"), "--mask", file("small.png"),
                                "--classes", file("classes.json"), "--out-labels", file("l.png")};
  EXPECT_EQ(invoke(dims).code, 2);

  fixture::write_text(file("bad.json"), R"({"K": 100})");
  EXPECT_EQ(enrich({"--config", file("bad.json")}).code, 2);
}

TEST_F(CliTest, SolverFailureExitsThree) {
  fixture::write_text(file("tight.json"), R"({"maxiter": 1, "tol": 1e-15})");
  const Outcome r = enrich({"--config", file("tight.json")});
  EXPECT_EQ(r.code, 3);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, EvalTableAndJson) {
  save_labelmap(fx_.truth, file("gt.png"));
  const Outcome same = invoke({"eval", "--pred", file("gt.png"), "--gt", file("gt.png"), "--classes",
                        file("classes.json"), "--json"});
  ASSERT_EQ(same.code, 0) << same.err;
  EXPECT_NE(same.out.find("\"red\""), std::string::npos);
  const Outcome table = invoke({"eval", "--pred", file("gt.png"), "--gt", file("gt.png"), "--classes",
                         file("classes.json")});
  EXPECT_EQ(table.code, 0);
  EXPECT_EQ(table.out.find('\x1b'), std::string::npos);
  EXPECT_NE(table.out.find("blue"), std::string::npos);

  save_labelmap(LabelMap(3, 3, 0), file("other.png"));
  EXPECT_EQ(invoke({"eval", "--pred", file("other.png"), "--gt", file("gt.png"), "--classes",
                 file("classes.json")})
                .code,
            2);
}

TEST_F(CliTest, HashfitLogAndModel) {
  const Outcome a = invoke({"hashfit", "--image", file("img.png"), "--bits", "16", "--out-model", file("a.itq"),
                     "--seed", "3"});
  ASSERT_EQ(a.code, 0) << a.err;
  const Outcome b = invoke({"hashfit", "--image", file("img.png"), "--bits", "16", "--out-model", file("b.itq"),
                     "--seed", "3"});
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(read_file(file("a.itq")), read_file(file("b.itq")));

  std::istringstream lines(a.out);
  std::string line;
  double prev = 1e300;
  int count = 0;
  while (std::getline(lines, line)) {
    std::size_t iter = 0;
    double loss = 0.0;
    if (std::sscanf(line.c_str(), "iter %zu loss %lf", &iter, &loss) != 2) continue;
    EXPECT_LE(loss, prev * (1 + 1e-12));
    prev = loss;
    ++count;
  }
  EXPECT_GT(count, 1);
  const HashModel m = load_hash_model(file("a.itq"));
  EXPECT_EQ(m.bits, 16u);

  // The fitted model drives enrich.
  EXPECT_EQ(enrich({"--hash-model", file("a.itq")}).code, 0);
  EXPECT_EQ(invoke({"hashfit", "--image", file("img.png"), "--bits", "0", "--out-model", file("c.itq")}).code, 2);
}

TEST(CliServe, StopsCleanlyOnSigterm) {
  int pipefd[2];
  ASSERT_EQ(pipe(pipefd), 0);
  const pid_t pid = fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    dup2(pipefd[1], STDOUT_FILENO);
    close(pipefd[0]);
    execl(SCRIBBLEFILL_TOOL_PATH, "scribblefill", "serve", "--addr", "127.0.0.1", "--port", "0",
          static_cast<char*>(nullptr));
    _exit(127);
  }
  close(pipefd[1]);
  FILE* in = fdopen(pipefd[0], "r");
  char buf[256] = {0};
  ASSERT_NE(fgets(buf, sizeof buf, in), nullptr);
  EXPECT_EQ(std::string(buf).rfind("listening on 127.0.0.1:", 0), 0u) << buf;
  kill(pid, SIGTERM);
  int status = 0;
  waitpid(pid, &status, 0);
  fclose(in);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
}
