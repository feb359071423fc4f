#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Invocation {
    int code = 0;
    std::string out;
    std::string err;
};

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("stdc_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Invocation run(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + STDCFORMER_BIN + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), slurp(out), slurp(err)};
}

std::string last_line(const std::string& s) {
    std::string t = s;
    while (!t.empty() && t.back() == '\n') t.pop_back();
    const auto k = t.rfind('\n');
    return k == std::string::npos ? t : t.substr(k + 1);
}

const std::string kSmall =
    " --synth.regions 4 --synth.length 200 --data.past 4 --data.future 2 --model.d 8 --model.heads 2"
    " --model.encoder_layers 1 --model.decoder_layers 1 --model.d_lap 2 --train.max_epochs 2"
    " --train.early_stop_patience 1 --train.batch_size 16";

}  // namespace

TEST(Cli, SynthThenIngestRoundTrip) {
    const fs::path dir = scratch("ingest");
    const Invocation s = run("--out \"" + dir.string() + "\" --synth.regions 5 --synth.length 96 synth", dir);
    ASSERT_EQ(s.code, 0) << s.err;
    const fs::path archive = last_line(s.out);
    ASSERT_TRUE(fs::exists(archive / "flow.csv")) << s.out;

    const Invocation i = run("--out \"" + dir.string() + "\" ingest --flow \"" + (archive / "flow.csv").string() +
                          "\" --temporal \"" + (archive / "temporal.csv").string() + "\" --spatial \"" +
                          (archive / "spatial.csv").string() + "\" --adjacency \"" +
                          (archive / "adjacency.csv").string() + "\"",
                      dir);
    ASSERT_EQ(i.code, 0) << i.err;
    const fs::path copy = last_line(i.out);
    for (const char* f : {"flow.csv", "temporal.csv", "spatial.csv", "adjacency.csv"})
        EXPECT_EQ(slurp(archive / f), slurp(copy / f)) << f;
}

TEST(Cli, MissingAdjacencyNamesPath) {
    const fs::path dir = scratch("missing");
    const Invocation s = run("--out \"" + dir.string() + "\" --synth.regions 3 --synth.length 48 synth", dir);
    ASSERT_EQ(s.code, 0) << s.err;
    const fs::path archive = last_line(s.out);
    const fs::path gone = dir / "nowhere_adjacency.csv";
    const Invocation i = run("ingest --flow \"" + (archive / "flow.csv").string() + "\" --temporal \"" +
                          (archive / "temporal.csv").string() + "\" --spatial \"" +
                          (archive / "spatial.csv").string() + "\" --adjacency \"" + gone.string() + "\"",
                      dir);
    EXPECT_NE(i.code, 0);
    EXPECT_NE(i.err.find(gone.string()), std::string::npos) << i.err;
}

TEST(Cli, TrainIsReproducibleAndEvalMatches) {
    const fs::path dir = scratch("train");
    const Invocation a = run("--out \"" + dir.string() + "\" --seed 7" + kSmall + " train", dir);
    ASSERT_EQ(a.code, 0) << a.err;
    const Invocation b = run("--out \"" + dir.string() + "\" --seed 7" + kSmall + " train", dir);
    ASSERT_EQ(b.code, 0) << b.err;
    const fs::path ra = last_line(a.out), rb = last_line(b.out);
    ASSERT_NE(ra, rb);
    EXPECT_EQ(slurp(ra / "model.ckpt"), slurp(rb / "model.ckpt"));
    EXPECT_EQ(slurp(ra / "train_log.jsonl"), slurp(rb / "train_log.jsonl"));
    for (const char* f : {"run_config.txt", "report.json", "predictions.csv"}) EXPECT_TRUE(fs::exists(ra / f)) << f;

    const auto rep = nlohmann::json::parse(slurp(ra / "report.json"));
    const Invocation e = run("--out \"" + dir.string() + "\" --seed 7" + kSmall + " eval --checkpoint \"" +
                          (ra / "model.ckpt").string() + "\"",
                      dir);
    ASSERT_EQ(e.code, 0) << e.err;
    fs::path eval_dir;
    for (const auto& ent : fs::directory_iterator(dir))
        if (ent.path().filename().string().rfind("eval-", 0) == 0) eval_dir = ent.path();
    ASSERT_FALSE(eval_dir.empty());
    const auto ev = nlohmann::json::parse(slurp(eval_dir / "report.json"));
    EXPECT_EQ(ev["io"]["mae"], rep["model"]["io"]["mae"]);
}

TEST(Cli, AblateWritesSixRows) {
    const fs::path dir = scratch("ablate");
    const Invocation a = run("--out \"" + dir.string() + "\"" + kSmall + " ablate", dir);
    ASSERT_EQ(a.code, 0) << a.err;
    std::ifstream in(fs::path(last_line(a.out)) / "ablation.csv");
    std::string line;
    std::size_t rows = 0;
    std::getline(in, line);
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    EXPECT_EQ(rows, 6u);
}

TEST(Cli, ExportAndPlot) {
    const fs::path dir = scratch("export");
    const Invocation t = run("--out \"" + dir.string() + "\"" + kSmall + " train", dir);
    ASSERT_EQ(t.code, 0) << t.err;
    const fs::path ckpt = fs::path(last_line(t.out)) / "model.ckpt";
    for (const std::string kind : {"gates", "attention"}) {
        const Invocation e = run("--out \"" + dir.string() + "\"" + kSmall + " export --checkpoint \"" + ckpt.string() +
                              "\" " + kind,
                          dir);
        ASSERT_EQ(e.code, 0) << e.err;
        const std::string produced = e.out.substr(e.out.rfind(" to ") + 4);
        const fs::path file = last_line(produced);
        ASSERT_TRUE(fs::exists(file)) << e.out;
        const Invocation p = run("--out \"" + dir.string() + "\" plot " + kind + " \"" + file.string() + "\"", dir);
        EXPECT_EQ(p.code, 0) << p.err;
    }
    const Invocation p = run("--out \"" + dir.string() + "\" plot prediction \"" +
                          (fs::path(last_line(t.out)) / "predictions.csv").string() + "\"",
                      dir);
    EXPECT_EQ(p.code, 0) << p.err;
}

TEST(Cli, ErrorsExitNonZero) {
    const fs::path dir = scratch("errors");
    EXPECT_NE(run("--out \"" + dir.string() + "\" --model.nonsense 3 train", dir).code, 0);
    EXPECT_NE(run("--out \"" + dir.string() + "\" eval --checkpoint /no/such.ckpt", dir).code, 0);
    EXPECT_NE(run("frobnicate", dir).code, 0);
    const Invocation bad = run("--out \"" + dir.string() + "\" --model.heads 3 --model.d 8 train", dir);
    EXPECT_NE(bad.code, 0);
    EXPECT_NE(bad.err.find("error:"), std::string::npos);
}

TEST(Cli, ConfigFileAndOverridesRecorded) {
    const fs::path dir = scratch("config");
    std::ofstream(dir / "c.txt") << "# test\nsynth.regions = 3\nsynth.length = 72\n";
    const Invocation s = run("--out \"" + dir.string() + "\" --config \"" + (dir / "c.txt").string() +
                          "\" --synth.length=96 synth",
                      dir);
    ASSERT_EQ(s.code, 0) << s.err;
    fs::path run_dir;
    for (const auto& ent : fs::directory_iterator(dir))
        if (ent.is_directory()) run_dir = ent.path();
    const std::string cfg = slurp(run_dir / "run_config.txt");
    EXPECT_NE(cfg.find("synth.regions = 3"), std::string::npos) << cfg;
    EXPECT_NE(cfg.find("synth.length = 96"), std::string::npos) << cfg;
}
