#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <string>

#include "json.hpp"
#include "testing_util.hpp"
#include "xncaps/idx.hpp"
#include "xncaps/weights.hpp"

using json = nlohmann::json;
using testutil::cli_path;
using testutil::quoted;
using testutil::run_command;
using testutil::RunResult;
using testutil::source_dir;

namespace {

std::string fixture(const std::string& name) { return source_dir() + "/tests/data/" + name; }

json parse_stdout(const RunResult& result) {
  EXPECT_EQ(result.exit_code, 0) << "stderr: " << result.err;
  return json::parse(result.out);  // throws if stdout is not one JSON document
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.good()) << path;
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST(CliParsing, RequiresASubcommand) {
  const RunResult r = run_command(quoted(cli_path()));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(CliParsing, RejectsUnknownFlag) {
  EXPECT_EQ(run_command(quoted(cli_path()) + " speedup --bogus").exit_code, 2);
}

TEST(CliParsing, RejectsBadEnumValue) {
  const RunResult r = run_command(quoted(cli_path()) + " forward --layer nope --weights w --input i");
  EXPECT_EQ(r.exit_code, 2);
}

TEST(CliParsing, RejectsNonPositiveDimension) {
  EXPECT_EQ(run_command(quoted(cli_path()) + " speedup --caps-in 0").exit_code, 2);
}

TEST(CliParsing, RejectsOutOfRangeBenchLength) {
  EXPECT_EQ(run_command(quoted(cli_path()) + " bench --n 32").exit_code, 2);
}

TEST(CliParsing, HelpExitsZero) {
  const RunResult r = run_command(quoted(cli_path()) + " --help");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("speedup"), std::string::npos);
  EXPECT_NE(r.out.find("forward"), std::string::npos);
  EXPECT_EQ(run_command(quoted(cli_path()) + " speedup --help").exit_code, 0);
}

TEST(CliParsing, GlobalFlagsWorkOnEitherSideOfTheSubcommand) {
  const RunResult before = run_command(quoted(cli_path()) + " --json speedup");
  const RunResult after = run_command(quoted(cli_path()) + " speedup --json");
  EXPECT_EQ(before.exit_code, 0);
  EXPECT_EQ(before.out, after.out);
}

TEST(CliErrors, MissingInputFileExitsOne) {
  const RunResult r = run_command(quoted(cli_path()) +
                                  " forward --weights /nonexistent.xncw --input /nonexistent.xncw");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos);
}

TEST(CliErrors, FlopsWithoutAStackExitsOne) {
  const RunResult r = run_command(quoted(cli_path()) + " flops");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("--preset"), std::string::npos);
}

TEST(CliSpeedup, JsonMatchesTheCostModel) {
  const json doc = parse_stdout(run_command(quoted(cli_path()) + " speedup --json"));
  EXPECT_EQ(doc["command"], "speedup");
  EXPECT_EQ(doc["config"]["caps_in"], 128);
  EXPECT_EQ(doc["config"]["dim_out"], 16);
  EXPECT_EQ(doc["xnodr"]["float_ops"], 2'621'440);
  EXPECT_EQ(doc["xnodr"]["binary_ops"], 40'970);
  EXPECT_DOUBLE_EQ(doc["xnodr"]["speedup"].get<double>(), 63.99);
  EXPECT_EQ(doc["xnidr"]["float_ops"], 327'680);
  EXPECT_EQ(doc["xnidr"]["binary_ops"], 5'136);
  EXPECT_DOUBLE_EQ(doc["xnidr"]["speedup"].get<double>(), 63.80);
}

TEST(CliSpeedup, HumanOutputShowsTwoDecimalRatios) {
  const RunResult r = run_command(quoted(cli_path()) + " speedup");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("63.99"), std::string::npos);
  EXPECT_NE(r.out.find("63.80"), std::string::npos);
}

TEST(CliSpeedup, TableEmitsFourRowsAndFlagsTheUnderivableOne) {
  const json doc = parse_stdout(run_command(quoted(cli_path()) + " speedup --table --json"));
  ASSERT_EQ(doc["table"].size(), 4u);
  EXPECT_EQ(doc["table"][0]["row"], "ResNet_XnODR");
  EXPECT_DOUBLE_EQ(doc["table"][0]["speedup"].get<double>(), 63.99);
  EXPECT_EQ(doc["table"][1]["row"], "ResNet_XnIDR");
  EXPECT_DOUBLE_EQ(doc["table"][1]["speedup"].get<double>(), 63.80);
  EXPECT_NE(doc["table"][1]["note"].get<std::string>().find("not derivable"), std::string::npos);
  EXPECT_DOUBLE_EQ(doc["table"][2]["speedup"].get<double>(), 63.99);
  EXPECT_DOUBLE_EQ(doc["table"][3]["speedup"].get<double>(), 63.80);
}

TEST(CliSpeedup, CustomDimensionsFlowThrough) {
  const json doc = parse_stdout(run_command(
      quoted(cli_path()) + " speedup --caps-in 1 --caps-out 1 --dim-in 8 --dim-out 8 --json"));
  EXPECT_EQ(doc["xnodr"]["float_ops"], 512);
  EXPECT_EQ(doc["xnodr"]["binary_ops"], 9);
}

TEST(CliSpeedup, StdoutIsDeterministic) {
  const RunResult a = run_command(quoted(cli_path()) + " speedup --table --json");
  const RunResult b = run_command(quoted(cli_path()) + " speedup --table --json");
  EXPECT_EQ(a.out, b.out);
}

TEST(CliFlops, PresetsMatchFrozenTotals) {
  const json resnet =
      parse_stdout(run_command(quoted(cli_path()) + " flops --preset resnet50-fc --json"));
  EXPECT_EQ(resnet["stack"]["flops"], 5'253'120);
  const json mobile =
      parse_stdout(run_command(quoted(cli_path()) + " flops --preset mobilenetv2-fc --json"));
  EXPECT_EQ(mobile["stack"]["flops"], 1'640'960);

  // floor consistency between the two representations of binary work
  for (const char* variant : {"xnodr", "xnidr"}) {
    const auto& row = resnet[variant];
    EXPECT_EQ(row["binary_ops_as_flops_floor"].get<std::uint64_t>(),
              std::uint64_t(std::floor(row["binary_ops_as_flops"].get<double>())));
  }
}

TEST(CliFlops, CustomStack) {
  const json doc =
      parse_stdout(run_command(quoted(cli_path()) + " flops --input 3 --widths 4 2 --json"));
  EXPECT_EQ(doc["stack"]["flops"], 40);
  EXPECT_EQ(doc["stack"]["name"], "");
}

TEST(CliForward, MatchesGoldenTranscripts) {
  for (const std::string layer : {"xnodr", "xnidr"}) {
    const json golden = json::parse(read_file(fixture("golden_forward_" + layer + ".json")));
    const json doc = parse_stdout(
        run_command(quoted(cli_path()) + " forward --layer " + layer + " --weights " +
                    quoted(fixture("weights_tiny.xncw")) + " --input " +
                    quoted(fixture("input_tiny.xncw")) + " --iterations " +
                    std::to_string(golden["iterations"].get<int>()) + " --json"));
    EXPECT_EQ(doc["layer"], layer);
    ASSERT_EQ(doc["scores"]["shape"].get<std::vector<std::size_t>>(),
              golden["scores_shape"].get<std::vector<std::size_t>>());
    const auto got = doc["scores"]["data"].get<std::vector<double>>();
    const auto want = golden["scores"].get<std::vector<double>>();
    const double tolerance = golden["tolerance"].get<double>();
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i)
      ASSERT_NEAR(got[i], want[i], tolerance) << layer << " score " << i;
  }
}

TEST(CliForward, WritesALoadableActivationArchive) {
  testutil::TempDir dir;
  const std::string out = dir.file("activations.xncw");
  const json doc = parse_stdout(run_command(
      quoted(cli_path()) + " forward --weights " + quoted(fixture("weights_tiny.xncw")) +
      " --input " + quoted(fixture("input_tiny.xncw")) + " --out " + quoted(out) + " --json"));

  const xncaps::WeightArchive archive = xncaps::load_weights(out);
  ASSERT_TRUE(archive.contains("v"));
  ASSERT_TRUE(archive.contains("scores"));
  const xncaps::DenseTensor& scores = archive.get("scores");
  const auto doc_scores = doc["scores"]["data"].get<std::vector<float>>();
  ASSERT_EQ(scores.numel(), doc_scores.size());
  for (std::size_t i = 0; i < doc_scores.size(); ++i)
    ASSERT_FLOAT_EQ(scores[i], doc_scores[i]);
}

TEST(CliForward, NamesTheOffendingTensorOnBadArchives) {
  // the input archive holds no W_Cap
  const RunResult missing = run_command(
      quoted(cli_path()) + " forward --weights " + quoted(fixture("input_tiny.xncw")) +
      " --input " + quoted(fixture("input_tiny.xncw")));
  EXPECT_EQ(missing.exit_code, 1);
  EXPECT_NE(missing.err.find("W_Cap"), std::string::npos);

  // weights whose caps_in/dim_in disagree with the fixture input
  testutil::TempDir dir;
  xncaps::WeightArchive bad;
  bad.add("W_Cap", xncaps::DenseTensor(xncaps::Shape{3, 3, 7, 5}));
  const std::string bad_path = dir.file("bad.xncw");
  xncaps::save_weights(bad, bad_path);
  const RunResult mismatch =
      run_command(quoted(cli_path()) + " forward --weights " + quoted(bad_path) + " --input " +
                  quoted(fixture("input_tiny.xncw")));
  EXPECT_EQ(mismatch.exit_code, 1);
  EXPECT_NE(mismatch.err.find("does not match"), std::string::npos);
}

TEST(CliForward, WorkerCountDoesNotChangeResults) {
  const std::string cmd = quoted(cli_path()) + " forward --weights " +
                          quoted(fixture("weights_tiny.xncw")) + " --input " +
                          quoted(fixture("input_tiny.xncw")) + " --json";
  const RunResult one = run_command("XNCAPS_WORKERS=1 " + cmd);
  const RunResult four = run_command("XNCAPS_WORKERS=4 " + cmd);
  EXPECT_EQ(one.exit_code, 0);
  EXPECT_EQ(four.exit_code, 0);
  EXPECT_EQ(one.out, four.out);
}

TEST(CliForward, InvalidWorkerCountWarnsAndProceeds) {
  const RunResult r = run_command("XNCAPS_WORKERS=abc " + quoted(cli_path()) + " speedup");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.err.find("ignoring invalid XNCAPS_WORKERS"), std::string::npos);
}

TEST(CliConfig, FileDrivesIterationsAndFlagsOverrideIt) {
  testutil::TempDir dir;
  const std::string cfg = dir.file("cfg.json");
  std::ofstream(cfg) << R"({"iterations": 1})";

  const std::string base = quoted(cli_path()) + " forward --weights " +
                           quoted(fixture("weights_tiny.xncw")) + " --input " +
                           quoted(fixture("input_tiny.xncw")) + " --json";
  const json from_config = parse_stdout(run_command(base + " --config " + quoted(cfg)));
  EXPECT_EQ(from_config["config"]["iterations"], 1);

  const json flag_wins =
      parse_stdout(run_command(base + " --config " + quoted(cfg) + " --iterations 3"));
  EXPECT_EQ(flag_wins["config"]["iterations"], 3);

  // a different iteration count must actually change the routing result
  EXPECT_NE(from_config["scores"]["data"].get<std::vector<double>>(),
            flag_wins["scores"]["data"].get<std::vector<double>>());
}

TEST(CliConfig, UnknownKeyExitsOne) {
  testutil::TempDir dir;
  const std::string cfg = dir.file("bad.json");
  std::ofstream(cfg) << R"({"bogus": 1})";
  const RunResult r = run_command(quoted(cli_path()) + " speedup --config " + quoted(cfg));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("unknown key"), std::string::npos);
}

TEST(CliTrainDemo, EmitsCurvesAndConvergenceSummary) {
  const RunResult r = run_command(quoted(cli_path()) +
                                  " train-demo --epochs 2 --samples 32 --batch 16 --seed 7 --json");
  const json doc = parse_stdout(r);
  ASSERT_EQ(doc["epoch_loss"].size(), 3u);  // entry 0 is the untrained model
  ASSERT_EQ(doc["epoch_accuracy"].size(), 3u);
  EXPECT_FLOAT_EQ(doc["final_loss"].get<float>(), doc["epoch_loss"].back().get<float>());
  EXPECT_FLOAT_EQ(doc["final_accuracy"].get<float>(), doc["epoch_accuracy"].back().get<float>());
  EXPECT_NE(r.err.find("epoch"), std::string::npos);  // progress goes to stderr
}

TEST(CliTrainDemo, AcceptsEveryLayerKind) {
  for (const std::string layer : {"caps-fc", "xnodr", "xnidr"}) {
    const RunResult r = run_command(quoted(cli_path()) + " train-demo --layer " + layer +
                                    " --epochs 1 --samples 16 --batch 8 --json");
    EXPECT_EQ(r.exit_code, 0) << layer << " stderr: " << r.err;
  }
}

TEST(CliBench, ReportsAnalyticAndMeasuredSpeedup) {
  const json doc =
      parse_stdout(run_command(quoted(cli_path()) + " bench --n 64 --trials 3 --json"));
  EXPECT_EQ(doc["n"], 64);
  EXPECT_DOUBLE_EQ(doc["analytic_speedup"].get<double>(), 32.0);
  EXPECT_GT(doc["packed_ns_median"].get<double>(), 0.0);
  EXPECT_GT(doc["float_ns_median"].get<double>(), 0.0);
  EXPECT_GT(doc["measured_speedup"].get<double>(), 0.0);
}

TEST(CliGenMultimnist, ComposesTheFixtureDeterministically) {
  testutil::TempDir dir;
  const std::string base = quoted(cli_path()) + " gen-multimnist --images " +
                           quoted(fixture("digits6-images.idx")) + " --labels " +
                           quoted(fixture("digits6-labels.idx")) + " --per-digit 2 --seed 5";

  const std::string img_a = dir.file("a-images.idx"), lab_a = dir.file("a-labels.idx");
  const json doc = parse_stdout(run_command(base + " --out-images " + quoted(img_a) +
                                            " --out-labels " + quoted(lab_a) + " --json"));
  EXPECT_EQ(doc["input_count"], 6);
  EXPECT_EQ(doc["output_count"], 12);

  const xncaps::IdxData images = xncaps::idx_read(img_a);
  EXPECT_EQ(images.dims, (std::vector<std::size_t>{12, 36, 36}));
  const xncaps::IdxData labels = xncaps::idx_read(lab_a);
  EXPECT_EQ(labels.dims, (std::vector<std::size_t>{12, 2}));
  for (std::size_t i = 0; i < 12; ++i)
    EXPECT_NE(labels.bytes[i * 2], labels.bytes[i * 2 + 1]) << "composite " << i;

  const std::string img_b = dir.file("b-images.idx"), lab_b = dir.file("b-labels.idx");
  ASSERT_EQ(run_command(base + " --out-images " + quoted(img_b) + " --out-labels " +
                        quoted(lab_b))
                .exit_code,
            0);
  EXPECT_EQ(read_file(img_a), read_file(img_b));
  EXPECT_EQ(read_file(lab_a), read_file(lab_b));

  const std::string img_c = dir.file("c-images.idx"), lab_c = dir.file("c-labels.idx");
  ASSERT_EQ(run_command(quoted(cli_path()) + " gen-multimnist --images " +
                        quoted(fixture("digits6-images.idx")) + " --labels " +
                        quoted(fixture("digits6-labels.idx")) + " --per-digit 2 --seed 6" +
                        " --out-images " + quoted(img_c) + " --out-labels " + quoted(lab_c))
                .exit_code,
            0);
  EXPECT_NE(read_file(img_a), read_file(img_c));
}

TEST(CliSelftest, PassesAndReportsEveryCheck) {
  const RunResult human = run_command(quoted(cli_path()) + " selftest");
  EXPECT_EQ(human.exit_code, 0) << human.err;
  EXPECT_NE(human.out.find("all checks passed"), std::string::npos);

  const json doc = parse_stdout(run_command(quoted(cli_path()) + " selftest --json"));
  EXPECT_TRUE(doc["pass"].get<bool>());
  EXPECT_GE(doc["checks"].size(), 5u);
  for (const auto& check : doc["checks"]) EXPECT_TRUE(check["pass"].get<bool>());
}
