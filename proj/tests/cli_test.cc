// Copyright 2026 The certseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "certseg/nseg.h"
#include "certseg/schedule.h"
#include "cli/commands.h"
#include "cli/dataset.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "test_util.h"

namespace certseg::cli {
namespace {

namespace fs = std::filesystem;
using ::certseg::testing::TempDir;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "certseg");
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every file under dir except run.log, keyed by relative path.
std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "run.log") continue;
    files[fs::relative(e.path(), dir).string()] = Slurp(e.path());
  }
  return files;
}

void Synth(const fs::path& dir, int count = 8, int size = 24) {
  ASSERT_EQ(Cli({"synth", "--out", dir.string(), "--count", std::to_string(count),
                 "--height", std::to_string(size), "--width", std::to_string(size),
                 "--classes", "3", "--seed", "4"})
                .code,
            kExitOk);
}

TEST(SynthCommandTest, WritesPairsAndManifest) {
  TempDir dir("synth");
  Synth(dir.path(), 3);
  EXPECT_EQ(ListIds(dir.path(), kImageSuffix),
            (std::vector<std::string>{"scene_0000", "scene_0001", "scene_0002"}));
  EXPECT_EQ(ListIds(dir.path(), kGroundTruthSuffix).size(), 3u);
  const auto manifest = nlohmann::json::parse(Slurp(dir.path() / "manifest.json"));
  EXPECT_EQ(manifest["count"], 3);
  EXPECT_EQ(manifest["scenes"].size(), 3u);
  const Image img = LoadImage(dir.path() / "scene_0001.image.nseg");
  EXPECT_EQ(img.shape(), (GridShape{24, 24, 1}));
}

TEST(CertifyCommandTest, FileCountContractAndRerunIsIdentical) {
  TempDir data("data"), out1("out1"), out2("out2");
  Synth(data.path());
  const std::vector<std::string> args{"certify", "--dataset", data.path().string(),
                                      "--model", "scene-prototype:3", "--sigma", "0.25"};
  auto with_out = [&](const fs::path& out) {
    auto a = args;
    a.insert(a.end(), {"--out", out.string()});
    return a;
  };
  const Result r = Cli(with_out(out1.path()));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(ListIds(out1.path(), kCertSuffix).size(), 8u);
  EXPECT_EQ(ListIds(out1.path(), kSidecarSuffix).size(), 8u);
  std::size_t csvs = 0;
  for (const auto& e : fs::directory_iterator(out1.path())) {
    csvs += e.path().extension() == ".csv";
  }
  EXPECT_EQ(csvs, 1u);
  EXPECT_TRUE(fs::exists(out1.path() / "metrics.csv"));
  EXPECT_TRUE(fs::exists(out1.path() / "manifest.json"));
  const std::string log = Slurp(out1.path() / "run.log");
  EXPECT_NE(log.find("seed=0"), std::string::npos);
  EXPECT_NE(log.find("total_seconds="), std::string::npos);

  ASSERT_EQ(Cli(with_out(out2.path())).code, kExitOk);
  EXPECT_EQ(Snapshot(out1.path()), Snapshot(out2.path()));

  const auto sidecar =
      nlohmann::json::parse(Slurp(out1.path() / "scene_0000.cert.json"));
  for (const char* key : {"radius", "sigma", "n0", "n", "alpha", "tau", "seed",
                          "abstain_fraction"}) {
    EXPECT_TRUE(sidecar.contains(key)) << key;
  }
  EXPECT_EQ(sidecar["n0"], 10);
  EXPECT_EQ(sidecar["n"], 100);
}

TEST(CertifyCommandTest, ManifestRerunReproducesOutputs) {
  TempDir data("data"), out1("out1"), out2("out2");
  Synth(data.path(), 2);
  ASSERT_EQ(Cli({"certify", "--dataset", data.path().string(), "--model",
                 "threshold:0.33,0.66", "--sigma", "0.12", "--seed", "5", "--n", "50",
                 "--out", out1.path().string()})
                .code,
            kExitOk);
  const Result r = Cli({"certify", "--config", (out1.path() / "manifest.json").string(),
                        "--out", out2.path().string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(Snapshot(out1.path()), Snapshot(out2.path()));
}

TEST(CertifyCommandTest, JobsDoNotChangeOutputs) {
  TempDir data("data"), out1("out1"), out8("out8");
  Synth(data.path(), 5);
  auto run = [&](const fs::path& out, const char* jobs) {
    return Cli({"certify", "--dataset", data.path().string(), "--model",
                "scene-prototype:3", "--sigma", "0.3", "--denoise-mode", "single_step",
                "--denoiser", "identity", "--dump-tests", "--jobs", jobs, "--out",
                out.string()});
  };
  ASSERT_EQ(run(out1.path(), "1").code, kExitOk);
  ASSERT_EQ(run(out8.path(), "8").code, kExitOk);
  EXPECT_EQ(Snapshot(out1.path()), Snapshot(out8.path()));
  EXPECT_TRUE(fs::exists(out1.path() / "scene_0003.tests.csv"));
}

TEST(CertifyCommandTest, ConfigErrorsExitTwo) {
  TempDir data("data"), out("out");
  Synth(data.path(), 1);
  const std::string d = data.path().string(), o = out.path().string();
  EXPECT_EQ(Cli({"certify", "--dataset", (data.path() / "missing").string(), "--model",
                 "scene-prototype:3", "--out", o})
                .code,
            kExitConfig);
  EXPECT_EQ(Cli({"certify", "--dataset", d, "--model", "banana", "--out", o}).code,
            kExitConfig);
  EXPECT_EQ(Cli({"certify", "--dataset", d, "--model", "scene-prototype:3", "--tau",
                 "0.5", "--out", o})
                .code,
            kExitConfig);
  EXPECT_EQ(Cli({"certify", "--dataset", d, "--model", "scene-prototype:3",
                 "--denoise-mode", "single_step", "--sigma", "100", "--out", o})
                .code,
            kExitConfig);
  EXPECT_EQ(Cli({"certify", "--dataset", d, "--model", "scene-prototype:3",
                 "--denoise-mode", "sideways", "--out", o})
                .code,
            kExitConfig);
  // Ground truth holds label 2, which a 2-class model cannot produce.
  EXPECT_EQ(Cli({"certify", "--dataset", d, "--model", "constant:2:0", "--out", o})
                .code,
            kExitConfig);
  EXPECT_EQ(Cli({"certify", "--bogus-flag"}).code, kExitConfig);
  const fs::path config = out.path() / "bad.json";
  std::ofstream(config) << "{\"sigmaa\": 0.3}";
  const Result r = Cli({"certify", "--dataset", d, "--model", "scene-prototype:3",
                        "--config", config.string(), "--out", o});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("sigmaa"), std::string::npos);
}

TEST(CertifyCommandTest, ConfigFileOverridesFlags) {
  TempDir data("data"), out("out");
  Synth(data.path(), 1);
  const fs::path config = data.path() / "sweep.json";
  std::ofstream(config) << "{\"sigma\": 0.5, \"n\": 40}";
  ASSERT_EQ(Cli({"certify", "--dataset", data.path().string(), "--model",
                 "scene-prototype:3", "--sigma", "0.25", "--config", config.string(),
                 "--out", out.path().string()})
                .code,
            kExitOk);
  const auto sidecar = nlohmann::json::parse(Slurp(out.path() / "scene_0000.cert.json"));
  EXPECT_EQ(sidecar["sigma"], 0.5);
  EXPECT_EQ(sidecar["n"], 40);
}

TEST(CertifyCommandTest, BridgeFailureExitsThree) {
  TempDir data("data"), out("out");
  Synth(data.path(), 1);
  const Result r = Cli({"certify", "--dataset", data.path().string(), "--model",
                        std::string("external:") + CERTSEG_FAKE_ADAPTER + " truncate 0.33,0.66",
                        "--out", out.path().string()});
  EXPECT_EQ(r.code, kExitBridge);
  EXPECT_NE(r.err.find("truncated"), std::string::npos) << r.err;
}

TEST(CertifyCommandTest, ExternalModelMatchesBuiltin) {
  TempDir data("data"), ext("ext"), builtin("builtin");
  Synth(data.path(), 2);
  const std::string d = data.path().string();
  ASSERT_EQ(Cli({"certify", "--dataset", d, "--model",
                 std::string("external:") + CERTSEG_FAKE_ADAPTER + " threshold 0.33,0.66",
                 "--bridge-procs", "2", "--jobs", "2", "--out", ext.path().string()})
                .code,
            kExitOk);
  ASSERT_EQ(Cli({"certify", "--dataset", d, "--model", "threshold:0.33,0.66", "--out",
                 builtin.path().string()})
                .code,
            kExitOk);
  for (const std::string& id : ListIds(ext.path(), kCertSuffix)) {
    EXPECT_EQ(Slurp(ext.path() / (id + kCertSuffix)),
              Slurp(builtin.path() / (id + kCertSuffix)));
  }
}

TEST(CertifyCommandTest, CompareModeWritesBothRuns) {
  TempDir data("data"), out("out");
  Synth(data.path(), 2);
  const Result r = Cli({"certify", "--dataset", data.path().string(), "--model",
                        "scene-prototype:3", "--denoiser", "oracle", "--compare", "--out",
                        out.path().string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(ListIds(out.path() / "none", kCertSuffix).size(), 2u);
  EXPECT_EQ(ListIds(out.path() / "single_step", kCertSuffix).size(), 2u);
  const std::string csv = Slurp(out.path() / "compare.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "dataset,model,sigma,radius,class,dice_none,iou_none,abstain_none,"
            "dice_single_step,iou_single_step,abstain_single_step");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  // The oracle denoiser removes all noise.
  const std::string single = Slurp(out.path() / "single_step" / "metrics.csv");
  EXPECT_NE(single.find(",0,1.000000,1.000000,0.000000"), std::string::npos) << single;
}

TEST(CertifyCommandTest, NoGroundTruthGivesHeaderOnlyMetrics) {
  TempDir data("data"), out("out");
  Synth(data.path(), 2);
  for (const auto& id : ListIds(data.path(), kGroundTruthSuffix)) {
    fs::remove(data.path() / (id + kGroundTruthSuffix));
  }
  ASSERT_EQ(Cli({"certify", "--dataset", data.path().string(), "--model",
                 "scene-prototype:3", "--out", out.path().string()})
                .code,
            kExitOk);
  EXPECT_EQ(Slurp(out.path() / "metrics.csv"),
            "dataset,model,sigma,radius,class,dice,iou,abstain_fraction\n");
}

TEST(MetricsCommandTest, RoundTripMatchesCertify) {
  TempDir data("data"), out("out");
  Synth(data.path(), 4);
  ASSERT_EQ(Cli({"certify", "--dataset", data.path().string(), "--model",
                 "scene-prototype:3", "--sigma", "0.3", "--out", out.path().string()})
                .code,
            kExitOk);
  const Result r = Cli({"metrics", "--cert-dir", out.path().string(), "--gt-dir",
                        data.path().string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, Slurp(out.path() / "metrics.csv"));

  // Files created in reverse order give the same report.
  TempDir shuffled("shuffled");
  const auto ids = ListIds(out.path(), kCertSuffix);
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
    for (const char* suffix : {kCertSuffix, kSidecarSuffix}) {
      fs::copy_file(out.path() / (*it + suffix), shuffled.path() / (*it + suffix));
    }
  }
  const fs::path csv = shuffled.path() / "again.csv";
  ASSERT_EQ(Cli({"metrics", "--cert-dir", shuffled.path().string(), "--gt-dir",
                 data.path().string(), "--out", csv.string()})
                .code,
            kExitOk);
  EXPECT_EQ(Slurp(csv), r.out);
}

TEST(MetricsCommandTest, PerfectMapsGiveOnes) {
  TempDir data("data"), out("out");
  Synth(data.path(), 2);
  ASSERT_EQ(Cli({"certify", "--dataset", data.path().string(), "--model",
                 "scene-prototype:3", "--sigma", "0.01", "--out", out.path().string()})
                .code,
            kExitOk);
  const Result r = Cli({"metrics", "--cert-dir", out.path().string(), "--gt-dir",
                        data.path().string()});
  ASSERT_EQ(r.code, kExitOk);
  std::istringstream rows(r.out);
  std::string line;
  std::getline(rows, line);
  int count = 0;
  while (std::getline(rows, line)) {
    EXPECT_NE(line.find(",1.000000,1.000000,0.000000"), std::string::npos) << line;
    ++count;
  }
  EXPECT_EQ(count, 3);
}

TEST(MetricsCommandTest, ShapeMismatchExitsTwo) {
  TempDir data("data"), other("other"), out("out");
  Synth(data.path(), 1, 24);
  Synth(other.path(), 1, 20);
  ASSERT_EQ(Cli({"certify", "--dataset", data.path().string(), "--model",
                 "scene-prototype:3", "--out", out.path().string()})
                .code,
            kExitOk);
  EXPECT_EQ(Cli({"metrics", "--cert-dir", out.path().string(), "--gt-dir",
                 other.path().string()})
                .code,
            kExitConfig);
}

TEST(ScheduleCommandTest, SigmaLookup) {
  const NoiseSchedule s = LinearSchedule();
  std::ostringstream exact;
  exact << std::setprecision(17) << SigmaAt(s, 137);
  const Result r = Cli({"schedule", "--sigma", "1e-9", "--sigma", exact.str()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream rows(r.out);
  std::string header, first, second;
  std::getline(rows, header);
  std::getline(rows, first);
  std::getline(rows, second);
  EXPECT_EQ(header, "sigma,t_star,alpha_bar,sigma_at");
  EXPECT_EQ(first.substr(0, first.find(',', first.find(',') + 1)), "1e-09,0");
  EXPECT_NE(second.find(",137,"), std::string::npos) << second;
}

TEST(ScheduleCommandTest, FullDumpAndOutOfRange) {
  const Result r = Cli({"schedule", "--steps", "10"});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 11);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "t,beta,alpha_bar,sigma_at");
  EXPECT_EQ(Cli({"schedule", "--sigma", "500"}).code, kExitConfig);
  const Result canon = Cli({"schedule", "--canonical", "--sigma", "0.25"});
  const Result doubled = Cli({"schedule", "--sigma", "0.5"});
  EXPECT_EQ(canon.out.substr(canon.out.find("\n0.25,") + 6),
            doubled.out.substr(doubled.out.find("\n0.5,") + 5));
}

}  // namespace
}  // namespace certseg::cli
