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
#include "cli/commands.h"

#include <chrono>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "certseg/certifier.h"
#include "certseg/error.h"
#include "certseg/metrics.h"
#include "certseg/nseg.h"
#include "certseg/parallel.h"
#include "certseg/random.h"
#include "certseg/smoothing.h"
#include "certseg/synth.h"
#include "cli/dataset.h"
#include "json.hpp"

namespace certseg::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void WriteTextFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::string ReadTextFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void EnsureDirectory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  }
}

std::string ModelLabel(const RunManifest& manifest, DenoiseMode mode) {
  if (mode == DenoiseMode::kNone) return manifest.model;
  return manifest.model + "+" + std::string(DenoiseModeName(mode)) + ":" +
         manifest.denoiser;
}

std::string SidecarJson(const CertifiedSegmentation& cert,
                        const std::string& dataset, const std::string& model) {
  const CertifyConfig& c = cert.config();
  ordered_json j;
  j["radius"] = cert.radius();
  j["sigma"] = c.sigma;
  j["n0"] = c.n0;
  j["n"] = c.n;
  j["alpha"] = c.alpha;
  j["tau"] = c.tau;
  j["seed"] = c.seed;
  j["abstain_fraction"] = AbstainFraction(cert);
  j["num_classes"] = cert.num_classes();
  j["denoise_mode"] = DenoiseModeName(c.denoise_mode);
  j["dataset"] = dataset;
  j["model"] = model;
  return j.dump(2) + "\n";
}

std::string PixelTestCsv(const std::vector<PixelTest>& tests) {
  std::string out = "pixel,candidate,agree_count,p_value,certified\n";
  for (const PixelTest& t : tests) {
    out += fmt::format("{},{},{},{:.17g},{}\n", t.pixel_index,
                       t.candidate_class, t.agree_count, t.p_value,
                       t.certified ? 1 : 0);
  }
  return out;
}

struct ModeResult {
  ReportKey key;
  std::optional<MetricsReport> report;
};

std::string MetricsCsv(const ReportKey& key,
                       const std::optional<MetricsReport>& report) {
  std::ostringstream csv;
  csv << kMetricsCsvHeader;
  if (report) WriteMetricsRows(csv, key, *report);
  return csv.str();
}

ModeResult RunMode(const RunManifest& manifest, DenoiseMode mode,
                   const fs::path& out_dir,
                   const std::vector<DatasetEntry>& entries,
                   const Segmenter& segmenter,
                   const DenoiserFactory* denoisers,
                   const NoiseSchedule& schedule,
                   const ExecutionSettings& exec, std::ostream& log) {
  EnsureDirectory(out_dir);
  CertifyConfig config = manifest.config;
  config.denoise_mode = mode;
  if (mode != DenoiseMode::kNone) {
    // Surface SigmaOutOfRange before any sampling.
    const std::size_t t_star = TimestepForCanonicalSigma(schedule, config.sigma);
    log << "denoise_mode=" << DenoiseModeName(mode) << " t_star=" << t_star
        << "\n";
  }

  const std::string dataset = DatasetName(manifest.dataset);
  const std::string model = ModelLabel(manifest, mode);
  const std::size_t outer = std::min(exec.jobs, entries.size());
  const std::size_t inner = std::max<std::size_t>(1, exec.jobs / std::max<std::size_t>(outer, 1));

  std::vector<std::optional<MetricsReport>> reports(entries.size());
  std::vector<double> seconds(entries.size());
  ParallelFor(entries.size(), outer, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const DatasetEntry& entry = entries[i];
    const Image image = LoadImage(entry.image);
    std::optional<LabelMap> gt;
    if (entry.ground_truth) {
      gt = LoadLabels(*entry.ground_truth, segmenter.num_classes());
    }
    std::shared_ptr<const Denoiser> denoiser;
    if (mode != DenoiseMode::kNone) denoiser = denoisers->ForImage(image);

    Pipeline pipeline{&segmenter, denoiser.get(), &schedule};
    std::vector<PixelTest> tests;
    const CertifiedSegmentation cert = CertifyImage(
        pipeline, image, gt ? &*gt : nullptr, config,
        ExecutionOptions{inner, static_cast<std::uint64_t>(i)},
        manifest.dump_tests ? &tests : nullptr);

    WriteNsegFile(out_dir / (entry.id + kCertSuffix), ToTensor(cert));
    WriteTextFile(out_dir / (entry.id + kSidecarSuffix),
                  SidecarJson(cert, dataset, model));
    if (manifest.dump_tests) {
      WriteTextFile(out_dir / (entry.id + ".tests.csv"), PixelTestCsv(tests));
    }
    if (gt) reports[i] = EvaluateImage(cert, *gt);
    seconds[i] = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  });

  std::vector<MetricsReport> scored;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    log << "image " << entries[i].id << " index=" << i
        << fmt::format(" seconds={:.3f}", seconds[i]) << "\n";
    if (reports[i]) scored.push_back(*reports[i]);
  }

  ModeResult result;
  result.key = ReportKey{dataset, model, config.sigma,
                         CertifiedRadius(config.sigma, config.tau)};
  if (!scored.empty()) result.report = Aggregate(scored);
  WriteTextFile(out_dir / "metrics.csv", MetricsCsv(result.key, result.report));
  return result;
}

std::string CompareCsv(const RunManifest& manifest, const ModeResult& none,
                       const ModeResult& single) {
  std::string out =
      "dataset,model,sigma,radius,class,dice_none,iou_none,abstain_none,"
      "dice_single_step,iou_single_step,abstain_single_step\n";
  if (!none.report || !single.report) return out;
  for (std::size_t c = 0; c < none.report->per_class.size(); ++c) {
    const ClassScore& a = none.report->per_class[c];
    const ClassScore& b = single.report->per_class[c];
    out += fmt::format("{},{},{},{:.6f},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n",
                       none.key.dataset, manifest.model, none.key.sigma,
                       none.key.radius, a.class_id, a.dice, a.iou,
                       none.report->abstain_fraction, b.dice, b.iou,
                       single.report->abstain_fraction);
  }
  return out;
}

}  // namespace

std::string ManifestJson(const RunManifest& m) {
  ordered_json j;
  j["dataset"] = m.dataset;
  j["model"] = m.model;
  j["denoiser"] = m.denoiser;
  j["denoise_mode"] = DenoiseModeName(m.config.denoise_mode);
  j["sigma"] = m.config.sigma;
  j["n0"] = m.config.n0;
  j["n"] = m.config.n;
  j["alpha"] = m.config.alpha;
  j["tau"] = m.config.tau;
  j["seed"] = m.config.seed;
  j["schedule_steps"] = m.schedule_steps;
  j["beta_start"] = m.beta_start;
  j["beta_end"] = m.beta_end;
  j["compare"] = m.compare;
  j["dump_tests"] = m.dump_tests;
  return j.dump(2) + "\n";
}

RunManifest ApplyManifestFile(const fs::path& path, RunManifest m) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadTextFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError,
                "config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::kFormatError, "config must be a JSON object");
  }
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "dataset") m.dataset = value.get<std::string>();
      else if (key == "model") m.model = value.get<std::string>();
      else if (key == "denoiser") m.denoiser = value.get<std::string>();
      else if (key == "denoise_mode")
        m.config.denoise_mode = ParseDenoiseMode(value.get<std::string>());
      else if (key == "sigma") m.config.sigma = value.get<double>();
      else if (key == "n0") m.config.n0 = value.get<std::size_t>();
      else if (key == "n") m.config.n = value.get<std::size_t>();
      else if (key == "alpha") m.config.alpha = value.get<double>();
      else if (key == "tau") m.config.tau = value.get<double>();
      else if (key == "seed") m.config.seed = value.get<std::uint64_t>();
      else if (key == "schedule_steps") m.schedule_steps = value.get<std::size_t>();
      else if (key == "beta_start") m.beta_start = value.get<double>();
      else if (key == "beta_end") m.beta_end = value.get<double>();
      else if (key == "output") m.output = value.get<std::string>();
      else if (key == "compare") m.compare = value.get<bool>();
      else if (key == "dump_tests") m.dump_tests = value.get<bool>();
      else throw Error(ErrorCode::kFormatError, "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError,
                "config " + path.string() + ": " + e.what());
  }
  return m;
}

int ExitCodeFor(const std::exception& e) {
  if (const auto* error = dynamic_cast<const Error*>(&e)) {
    switch (error->code()) {
      case ErrorCode::kBridgeError:
        return kExitBridge;
      case ErrorCode::kModelOutputError:
        return kExitFailure;
      default:
        return kExitConfig;
    }
  }
  return kExitFailure;
}

int CmdCertify(const RunManifest& manifest, const ExecutionSettings& exec,
               std::ostream& err) {
  try {
    manifest.config.Validate();
    if (manifest.model.empty()) {
      throw Error(ErrorCode::kDomainError, "no model given");
    }
    if (manifest.output.empty()) {
      throw Error(ErrorCode::kDomainError, "no output directory given");
    }
    const auto start = std::chrono::steady_clock::now();
    const std::vector<DatasetEntry> entries = ListDataset(manifest.dataset);
    const NoiseSchedule schedule = LinearSchedule(
        manifest.schedule_steps, manifest.beta_start, manifest.beta_end);
    const fs::path out_dir = manifest.output;
    EnsureDirectory(out_dir);

    const bool needs_denoiser =
        manifest.compare || manifest.config.denoise_mode != DenoiseMode::kNone;
    const auto segmenter = MakeSegmenter(manifest.model, exec.bridge);
    std::optional<DenoiserFactory> denoisers;
    if (needs_denoiser) denoisers.emplace(manifest.denoiser, exec.bridge);

    std::ostringstream log;
    log << "seed=" << manifest.config.seed << "\n"
        << "jobs=" << exec.jobs << "\n"
        << "images=" << entries.size() << "\n";

    if (manifest.compare) {
      const ModeResult none =
          RunMode(manifest, DenoiseMode::kNone, out_dir / "none", entries,
                  *segmenter, nullptr, schedule, exec, log);
      const ModeResult single =
          RunMode(manifest, DenoiseMode::kSingleStep, out_dir / "single_step",
                  entries, *segmenter, &*denoisers, schedule, exec, log);
      WriteTextFile(out_dir / "compare.csv", CompareCsv(manifest, none, single));
    } else {
      RunMode(manifest, manifest.config.denoise_mode, out_dir, entries,
              *segmenter, denoisers ? &*denoisers : nullptr, schedule, exec,
              log);
    }

    WriteTextFile(out_dir / "manifest.json", ManifestJson(manifest));
    log << fmt::format("total_seconds={:.3f}\n",
                       std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count());
    WriteTextFile(out_dir / "run.log", log.str());
    return kExitOk;
  } catch (const std::exception& e) {
    err << "certseg certify: " << e.what() << "\n";
    return ExitCodeFor(e);
  }
}

int CmdSchedule(std::size_t steps, double beta_start, double beta_end,
                const std::vector<double>& sigmas, bool canonical,
                std::ostream& out, std::ostream& err) {
  try {
    const NoiseSchedule schedule = LinearSchedule(steps, beta_start, beta_end);
    std::string csv;
    if (sigmas.empty()) {
      csv = "t,beta,alpha_bar,sigma_at\n";
      for (std::size_t t = 0; t < schedule.steps(); ++t) {
        csv += fmt::format("{},{},{},{}\n", t, schedule.beta(t),
                           schedule.alpha_bar(t), SigmaAt(schedule, t));
      }
    } else {
      csv = "sigma,t_star,alpha_bar,sigma_at\n";
      for (double sigma : sigmas) {
        const std::size_t t = canonical
                                  ? TimestepForCanonicalSigma(schedule, sigma)
                                  : TimestepForSigma(schedule, sigma);
        csv += fmt::format("{},{},{},{}\n", sigma, t, schedule.alpha_bar(t),
                           SigmaAt(schedule, t));
      }
    }
    out << csv;
    return kExitOk;
  } catch (const std::exception& e) {
    err << "certseg schedule: " << e.what() << "\n";
    return ExitCodeFor(e);
  }
}

int CmdMetrics(const fs::path& cert_dir, const fs::path& gt_dir,
               std::ostream& out, std::ostream& err) {
  try {
    const auto ids = ListIds(cert_dir, kCertSuffix);
    if (ids.empty()) {
      throw Error(ErrorCode::kEmptyDataset,
                  "no certified maps in " + cert_dir.string());
    }
    ListIds(gt_dir, kGroundTruthSuffix);  // validates the directory

    using Key = std::tuple<std::string, std::string, double, double>;
    std::map<Key, std::vector<MetricsReport>> groups;
    for (const std::string& id : ids) {
      nlohmann::json sidecar;
      try {
        sidecar = nlohmann::json::parse(
            ReadTextFile(cert_dir / (id + kSidecarSuffix)));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kFormatError, "sidecar for " + id + ": " + e.what());
      }
      const auto k = sidecar.at("num_classes").get<std::size_t>();
      const Key key{sidecar.at("dataset").get<std::string>(),
                    sidecar.at("model").get<std::string>(),
                    sidecar.at("sigma").get<double>(),
                    sidecar.at("radius").get<double>()};
      const fs::path gt_path = gt_dir / (id + kGroundTruthSuffix);
      if (!fs::exists(gt_path)) {
        groups.try_emplace(key);
        continue;
      }
      const NsegTensor tensor = ReadNsegFile(cert_dir / (id + kCertSuffix));
      if (tensor.dtype() != NsegDtype::kU16 || tensor.shape.size() != 2) {
        throw Error(ErrorCode::kFormatError, id + ": not a certified map");
      }
      const CertifiedSegmentation cert(tensor.shape[0], tensor.shape[1], k,
                                       tensor.u16(), std::get<3>(key),
                                       CertifyConfig{});
      groups[key].push_back(EvaluateImage(cert, LoadLabels(gt_path, k)));
    }

    std::ostringstream csv;
    csv << kMetricsCsvHeader;
    for (const auto& [key, reports] : groups) {
      if (reports.empty()) continue;
      WriteMetricsRows(csv,
                       ReportKey{std::get<0>(key), std::get<1>(key),
                                 std::get<2>(key), std::get<3>(key)},
                       Aggregate(reports));
    }
    out << csv.str();
    return kExitOk;
  } catch (const nlohmann::json::exception& e) {
    err << "certseg metrics: malformed sidecar: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "certseg metrics: " << e.what() << "\n";
    return ExitCodeFor(e);
  }
}

int CmdSynth(const SynthOptions& options, std::ostream& err) {
  try {
    if (options.output.empty()) {
      throw Error(ErrorCode::kDomainError, "no output directory given");
    }
    EnsureDirectory(options.output);
    ordered_json manifest;
    manifest["count"] = options.count;
    manifest["height"] = options.height;
    manifest["width"] = options.width;
    manifest["classes"] = options.classes;
    manifest["channels"] = options.channels;
    manifest["shapes_per_scene"] = options.shapes;
    manifest["seed"] = options.seed;
    manifest["class_intensities"] = SceneClassIntensities(options.classes);
    ordered_json scenes = ordered_json::array();
    for (std::size_t i = 0; i < options.count; ++i) {
      const std::string id = fmt::format("scene_{:04d}", i);
      const std::uint64_t scene_seed = DeriveStreamSeed(options.seed, i, 0);
      const SyntheticScene scene =
          GenerateScene(scene_seed, options.height, options.width,
                        options.classes, options.shapes, options.channels);
      WriteNsegFile(options.output / (id + kImageSuffix),
                    ToTensor(scene.image.grid()));
      WriteNsegFile(options.output / (id + kGroundTruthSuffix),
                    ToTensor(scene.ground_truth));
      ordered_json shapes = ordered_json::array();
      for (const SceneShape& s : scene.spec.shapes) {
        ordered_json js;
        js["label"] = s.label;
        if (s.kind == ShapeKind::kRectangle) {
          js["kind"] = "rectangle";
          js["top"] = s.top;
          js["left"] = s.left;
          js["bottom"] = s.bottom;
          js["right"] = s.right;
        } else {
          js["kind"] = "disk";
          js["center_row"] = s.center_row;
          js["center_col"] = s.center_col;
          js["radius"] = s.radius;
        }
        shapes.push_back(std::move(js));
      }
      ordered_json entry;
      entry["id"] = id;
      entry["seed"] = scene_seed;
      entry["shapes"] = std::move(shapes);
      scenes.push_back(std::move(entry));
    }
    manifest["scenes"] = std::move(scenes);
    WriteTextFile(options.output / "manifest.json", manifest.dump(2) + "\n");
    return kExitOk;
  } catch (const std::exception& e) {
    err << "certseg synth: " << e.what() << "\n";
    return ExitCodeFor(e);
  }
}

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"certseg: certified segmentation by randomized smoothing"};
  app.require_subcommand(1);

  RunManifest manifest;
  ExecutionSettings exec;
  std::string denoise_mode = "none";
  std::string config_path;
  long long timeout_ms = 60000;
  auto* certify = app.add_subcommand("certify", "Certify every image in a dataset");
  certify->add_option("--dataset", manifest.dataset, "Dataset directory");
  certify->add_option("--out", manifest.output, "Output directory");
  certify->add_option("--model", manifest.model, "Segmenter spec");
  certify->add_option("--denoiser", manifest.denoiser, "Denoiser spec")
      ->capture_default_str();
  certify->add_option("--denoise-mode", denoise_mode,
                      "none | single_step | multi_step")
      ->capture_default_str();
  certify->add_option("--sigma", manifest.config.sigma, "Noise std (canonical [0,1] units)")
      ->capture_default_str();
  certify->add_option("--n0", manifest.config.n0, "Candidate samples")->capture_default_str();
  certify->add_option("--n", manifest.config.n, "Certification samples")->capture_default_str();
  certify->add_option("--alpha", manifest.config.alpha, "Family-wise error level")
      ->capture_default_str();
  certify->add_option("--tau", manifest.config.tau, "Per-pixel probability threshold")
      ->capture_default_str();
  certify->add_option("--seed", manifest.config.seed, "Master seed")->capture_default_str();
  certify->add_option("--schedule-steps", manifest.schedule_steps)->capture_default_str();
  certify->add_option("--beta-start", manifest.beta_start)->capture_default_str();
  certify->add_option("--beta-end", manifest.beta_end)->capture_default_str();
  certify->add_flag("--compare", manifest.compare,
                    "Run denoise modes none and single_step side by side");
  certify->add_flag("--dump-tests", manifest.dump_tests,
                    "Write per-pixel test tables");
  certify->add_option("--config", config_path,
                      "JSON run manifest; its keys override flags");
  certify->add_option("--jobs", exec.jobs, "Worker threads")->capture_default_str();
  certify->add_option("--bridge-procs", exec.bridge.processes,
                      "Processes per external model")
      ->capture_default_str();
  certify->add_option("--bridge-timeout-ms", timeout_ms)->capture_default_str();

  std::size_t steps = kDefaultScheduleSteps;
  double beta_start = kDefaultBetaStart;
  double beta_end = kDefaultBetaEnd;
  std::vector<double> sigmas;
  bool canonical = false;
  auto* schedule = app.add_subcommand("schedule", "Print the diffusion schedule as CSV");
  schedule->add_option("--steps", steps)->capture_default_str();
  schedule->add_option("--beta-start", beta_start)->capture_default_str();
  schedule->add_option("--beta-end", beta_end)->capture_default_str();
  schedule->add_option("--sigma", sigmas, "Map these sigmas to timesteps");
  schedule->add_flag("--canonical", canonical,
                     "Treat sigmas as [0,1]-domain noise (doubled for lookup)");

  std::string cert_dir;
  std::string gt_dir;
  std::string metrics_out;
  auto* metrics = app.add_subcommand("metrics", "Recompute certified metrics");
  metrics->add_option("--cert-dir", cert_dir)->required();
  metrics->add_option("--gt-dir", gt_dir)->required();
  metrics->add_option("--out", metrics_out, "Write the CSV here instead of stdout");

  SynthOptions synth_options;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--count", synth_options.count)->capture_default_str();
  synth->add_option("--height", synth_options.height)->capture_default_str();
  synth->add_option("--width", synth_options.width)->capture_default_str();
  synth->add_option("--classes", synth_options.classes)->capture_default_str();
  synth->add_option("--shapes", synth_options.shapes)->capture_default_str();
  synth->add_option("--channels", synth_options.channels)->capture_default_str();
  synth->add_option("--seed", synth_options.seed)->capture_default_str();

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "certseg: " << e.what() << "\n";
    if (app.get_subcommands().size() == 1) {
      err << app.get_subcommands().front()->help();
    }
    return kExitConfig;
  }

  if (*certify) {
    try {
      manifest.config.denoise_mode = ParseDenoiseMode(denoise_mode);
      if (!config_path.empty()) {
        manifest = ApplyManifestFile(config_path, manifest);
      }
    } catch (const std::exception& e) {
      err << "certseg certify: " << e.what() << "\n";
      return kExitConfig;
    }
    exec.bridge.timeout = std::chrono::milliseconds(timeout_ms);
    return CmdCertify(manifest, exec, err);
  }
  if (*schedule) {
    return CmdSchedule(steps, beta_start, beta_end, sigmas, canonical, out, err);
  }
  if (*metrics) {
    if (metrics_out.empty()) return CmdMetrics(cert_dir, gt_dir, out, err);
    std::ostringstream csv;
    const int rc = CmdMetrics(cert_dir, gt_dir, csv, err);
    if (rc == kExitOk) {
      try {
        WriteTextFile(metrics_out, csv.str());
      } catch (const std::exception& e) {
        err << "certseg metrics: " << e.what() << "\n";
        return kExitConfig;
      }
    }
    return rc;
  }
  synth_options.output = synth_out;
  return CmdSynth(synth_options, err);
}

}  // namespace certseg::cli
