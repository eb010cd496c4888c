#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int status = 0;
    std::string output;
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("e2eg_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        std::ofstream cfg(config());
        cfg << "synth_n = 60\nsynth_num_classes = 3\nsynth_p_in = 0.3\nsynth_p_out = 0.05\n"
               "synth_vocab_per_class = 8\nsynth_shared_vocab = 12\nsynth_text_len = 6\n"
               "train_ratio = 0.5\nvalid_ratio = 0.25\ntest_ratio = 0.25\n"
               "kinds = e2eg,text_only\nseeds = 0,1\nlr_max = 0.01\nbatch_size = 16\n"
               "depth = 2\nepochs_per_round = 2\nembed_dim = 6\nhidden_dim = 6\nextra_max_epochs = 5\n";
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path config() const { return dir_ / "exp.cfg"; }
    fs::path out() const { return dir_ / "out"; }

    CommandResult run(const std::string& args) const {
        const auto log = dir_ / "cli.log";
        const std::string cmd = std::string(E2EG_CLI_PATH) + " --config " + config().string() + " --out-dir " +
                                out().string() + " " + args + " > " + log.string() + " 2>&1";
        CommandResult r;
        r.status = std::system(cmd.c_str());
        std::ifstream in(log);
        std::stringstream buf;
        buf << in.rdbuf();
        r.output = buf.str();
        return r;
    }

    fs::path dir_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_F(CliTest, GenSynthWritesGraphFiles) {
    const auto r = run("gen-synth");
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_TRUE(fs::exists(out() / "nodes.tsv"));
    EXPECT_TRUE(fs::exists(out() / "edges.tsv"));
}

TEST_F(CliTest, FeaturizeAndBuildHlt) {
    ASSERT_EQ(run("featurize").status, 0);
    const auto tfidf = slurp(out() / "tfidf.txt");
    EXPECT_EQ(tfidf.rfind("60 ", 0), 0u);
    ASSERT_EQ(run("build-hlt").status, 0);
    EXPECT_EQ(slurp(out() / "hlt.txt").rfind("2 2 60", 0), 0u);
}

TEST_F(CliTest, TrainThenEval) {
    const auto r = run("--seed 3 train --kind e2eg");
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("test_acc"), std::string::npos);
    const auto ckpt = out() / "e2eg_seed3.ckpt";
    ASSERT_TRUE(fs::exists(ckpt));
    EXPECT_TRUE(fs::exists(out() / "e2eg_seed3_history.csv"));
    const auto e = run("eval --checkpoint " + ckpt.string());
    EXPECT_EQ(e.status, 0) << e.output;
    EXPECT_NE(e.output.find("test_acc"), std::string::npos);
}

TEST_F(CliTest, RunCompareExplain) {
    const auto r = run("run");
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_EQ(r.output.rfind("row_type,", 0), 0u);
    ASSERT_TRUE(fs::exists(out() / "results.csv"));
    const auto c = run("compare --results " + (out() / "results.csv").string() + " --a e2eg --b text_only");
    EXPECT_EQ(c.status, 0) << c.output;
    EXPECT_NE(c.output.find("e2eg"), std::string::npos);
    const auto x = run("explain --a e2eg --b text_only --split test");
    EXPECT_EQ(x.status, 0) << x.output;
    EXPECT_NE(slurp(out() / "explain.json").find("both_wrong"), std::string::npos);
}

TEST_F(CliTest, OverridesAndErrors) {
    EXPECT_NE(run("").status, 0);
    EXPECT_NE(run("--mode semi train").status, 0);
    const auto bad = run("--delay-rounds 5 train");
    EXPECT_NE(bad.status, 0);
    EXPECT_NE(bad.output.find("error"), std::string::npos);
    EXPECT_EQ(run("--mode inductive --delay-rounds 1 --extra-round --seed 2 train --kind text_only").status, 0);
}
