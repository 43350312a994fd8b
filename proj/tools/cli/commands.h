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
#ifndef CERTSEG_TOOLS_CLI_COMMANDS_H_
#define CERTSEG_TOOLS_CLI_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "certseg/schedule.h"
#include "certseg/types.h"
#include "cli/model_spec.h"

namespace certseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBridge = 3;

// Everything that determines the bytes of a certify run's outputs.
struct RunManifest {
  std::string dataset;
  std::string model;
  std::string denoiser = "identity";
  CertifyConfig config;
  std::size_t schedule_steps = kDefaultScheduleSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;
  std::string output;
  // Run denoise modes none and single_step side by side.
  bool compare = false;
  // Write a per-pixel test table next to each certified map.
  bool dump_tests = false;
};

// Flat JSON object; `output` is omitted because the copy written into an
// output directory should not name itself.
std::string ManifestJson(const RunManifest& manifest);
// Overrides fields of base with the keys present in the JSON file.
RunManifest ApplyManifestFile(const std::filesystem::path& path,
                              RunManifest base);

// Settings that affect speed only, never output bytes.
struct ExecutionSettings {
  std::size_t jobs = 1;
  BridgeSettings bridge;
};

int ExitCodeFor(const std::exception& e);

// Writes <id>.cert.nseg and <id>.cert.json per image, metrics.csv over the
// images with ground truth, manifest.json and run.log. Compare mode writes
// none/ and single_step/ subdirectories plus compare.csv.
int CmdCertify(const RunManifest& manifest, const ExecutionSettings& exec,
               std::ostream& err);

// Without sigmas: the full table t,beta,alpha_bar,sigma_at. With sigmas:
// sigma,t_star,alpha_bar,sigma_at per sigma. canonical applies the [0, 1]
// to [-1, 1] noise doubling before the lookup.
int CmdSchedule(std::size_t steps, double beta_start, double beta_end,
                const std::vector<double>& sigmas, bool canonical,
                std::ostream& out, std::ostream& err);

// Recomputes the metrics CSV from certified maps and ground truth. Output is
// byte-identical to the metrics.csv written by certify for the same maps.
int CmdMetrics(const std::filesystem::path& cert_dir,
               const std::filesystem::path& gt_dir, std::ostream& out,
               std::ostream& err);

struct SynthOptions {
  std::filesystem::path output;
  std::size_t count = 8;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t classes = 3;
  std::size_t shapes = 4;
  std::size_t channels = 1;
  std::uint64_t seed = 0;
};

// Writes scene_NNNN.image.nseg / scene_NNNN.gt.nseg pairs and manifest.json.
int CmdSynth(const SynthOptions& options, std::ostream& err);

// Entry point; args[0] is the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace certseg::cli

#endif  // CERTSEG_TOOLS_CLI_COMMANDS_H_
