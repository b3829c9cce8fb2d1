// Copyright (c) 2026 The h2nh-vc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// h2nh: preprocess, train, convert, evaluate, plot, config.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <glog/logging.h>
#include <nlohmann/json.hpp>

#include "h2nh/config.hpp"
#include "h2nh/conversion.hpp"
#include "h2nh/dsp.hpp"
#include "h2nh/errors.hpp"
#include "h2nh/evaluation.hpp"
#include "h2nh/features.hpp"
#include "h2nh/plot.hpp"
#include "h2nh/training.hpp"

namespace fs = std::filesystem;
using h2nh::ExitCode;

namespace {

struct ConfigArgs {
  std::string path;
  std::string preset = "default";
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.path, "JSON run config");
  cmd->add_option("--preset", args.preset, "defaults to start from")
      ->check(CLI::IsMember({"default", "tiny"}));
}

h2nh::RunConfig resolve_config(const ConfigArgs& args) {
  h2nh::RunConfig cfg;
  if (!args.path.empty()) {
    cfg = h2nh::load_run_config(args.path);
  } else {
    cfg = args.preset == "tiny" ? h2nh::RunConfig::tiny() : h2nh::RunConfig{};
    cfg.validate();
  }
  if (const char* env = std::getenv("H2NH_CACHE_DIR"); env && *env) cfg.paths.cache_dir = env;
  return cfg;
}

void print_hash(const h2nh::RunConfig& cfg) {
  std::cout << "config_hash " << h2nh::config_hash(cfg) << std::endl;
}

fs::path cache_file_for(const fs::path& dir, const fs::path& source) {
  return dir / (source.stem().string() + "_" +
                h2nh::fnv1a_hex(fs::absolute(source).lexically_normal().string()) + ".h2nf");
}

uint64_t seed_for(const fs::path& source) {
  return std::stoull(h2nh::fnv1a_hex(source.filename().string()), nullptr, 16);
}

// preprocess ---------------------------------------------------------------

struct PreprocessArgs {
  ConfigArgs config;
  std::string manifest;
  std::string out_dir;
};

int cmd_preprocess(const PreprocessArgs& a) {
  auto cfg = resolve_config(a.config);
  if (!a.out_dir.empty()) cfg.paths.cache_dir = a.out_dir;
  print_hash(cfg);
  const auto items = h2nh::load_manifest(a.manifest);
  const auto hash = h2nh::feature_hash(cfg);
  std::shared_ptr<const h2nh::linguistic::SslBackend> backend =
      h2nh::linguistic::make_backend(cfg.linguistic);
  h2nh::features::FeaturePipeline pipeline(cfg.pipeline(), backend);
  fs::create_directories(cfg.paths.cache_dir);

  int done = 0, skipped = 0, failed = 0;
  for (const auto& item : items) {
    const auto out = cache_file_for(cfg.paths.cache_dir, item.path);
    if (fs::exists(out)) {
      try {
        if (h2nh::features::read_cache_header(out).value("config_hash", "") == hash) {
          ++skipped;
          continue;
        }
      } catch (const h2nh::Error& e) {
        LOG(WARNING) << out << ": unreadable cache entry, recomputing (" << e.what() << ")";
      }
    }
    try {
      auto clip = h2nh::dsp::load_wav(item.path);
      clip.category = item.category;
      auto f = pipeline.extract(clip, seed_for(item.path));
      h2nh::features::write_cache(out, f, hash);
      ++done;
    } catch (const h2nh::Error& e) {
      LOG(ERROR) << item.path << ": skipped (" << e.what() << ")";
      ++failed;
    }
  }
  std::cout << "processed " << done << " skipped " << skipped << " failed " << failed
            << std::endl;
  return static_cast<int>(ExitCode::kOk);
}

// train ----------------------------------------------------------------------

struct TrainArgs {
  ConfigArgs config;
  std::string cache_dir;
  std::string checkpoint_dir;
  std::string resume;
  std::string metrics_log;
  int64_t steps = -1;
};

std::vector<h2nh::training::TrainItem> load_cache(const fs::path& dir, const std::string& hash) {
  if (!fs::is_directory(dir)) throw h2nh::FormatError("cache directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".h2nf") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<h2nh::training::TrainItem> items;
  for (const auto& f : files) {
    auto entry = h2nh::features::read_cache(f);
    if (entry.header.value("config_hash", "") != hash) {
      LOG(WARNING) << f << ": built with another feature config, ignored";
      continue;
    }
    items.push_back({entry.features.source_path.empty() ? f.string()
                                                         : entry.features.source_path,
                     std::move(entry.features)});
  }
  if (items.empty())
    throw h2nh::FormatError("no cache entries matching feature hash " + hash + " in " +
                            dir.string());
  return items;
}

int cmd_train(const TrainArgs& a) {
  auto cfg = resolve_config(a.config);
  if (!a.cache_dir.empty()) cfg.paths.cache_dir = a.cache_dir;
  if (!a.checkpoint_dir.empty()) cfg.paths.checkpoint_dir = a.checkpoint_dir;
  if (!a.metrics_log.empty()) cfg.paths.metrics_log = a.metrics_log;

  std::optional<h2nh::training::TrainState> state;
  if (!a.resume.empty()) {
    fs::path ckpt = a.resume;
    if (a.resume == "auto") {
      auto latest = h2nh::training::latest_checkpoint(cfg.paths.checkpoint_dir);
      if (!latest) throw h2nh::StateError("no checkpoint in " + cfg.paths.checkpoint_dir);
      ckpt = *latest;
    }
    state.emplace(h2nh::training::load_checkpoint(ckpt, &cfg));
    std::cout << "resumed " << ckpt.string() << " at step " << state->step() << std::endl;
  } else {
    state.emplace(cfg);
  }
  print_hash(state->config());
  const auto items = load_cache(cfg.paths.cache_dir, h2nh::feature_hash(state->config()));

  h2nh::training::LoopOptions opts;
  opts.until_step = a.steps >= 0 ? state->step() + a.steps : state->config().train.max_steps;
  opts.checkpoint_dir = cfg.paths.checkpoint_dir;
  opts.metrics_log = cfg.paths.metrics_log;
  const auto taken = h2nh::training::run_training(*state, items, opts);
  std::cout << "trained " << taken << " steps, now at step " << state->step() << std::endl;
  return static_cast<int>(ExitCode::kOk);
}

// convert --------------------------------------------------------------------

struct ConvertArgs {
  std::string checkpoint, source, reference, out;
  double temperature = h2nh::conversion::kDefaultTemperature;
  uint64_t seed = 0;
};

int cmd_convert(const ConvertArgs& a) {
  auto model = h2nh::conversion::VoiceModel::from_checkpoint(a.checkpoint);
  print_hash(model.config());
  h2nh::conversion::ConversionRequest req;
  req.source = h2nh::dsp::load_wav(a.source);
  req.reference = h2nh::dsp::load_wav(a.reference);
  req.temperature = a.temperature;
  req.seed = a.seed;
  auto out = model.convert(req);
  h2nh::dsp::save_wav(out, a.out);
  std::cout << "wrote " << a.out << " (" << out.size() << " samples, "
            << out.duration() << " s)" << std::endl;
  return static_cast<int>(ExitCode::kOk);
}

// evaluate -------------------------------------------------------------------

struct EvaluateArgs {
  ConfigArgs config;
  std::string pairs, out, asr_endpoint, asr_command;
};

std::vector<h2nh::evaluation::EvalPair> load_pairs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw h2nh::FormatError("cannot open pairs manifest " + path.string());
  std::vector<h2nh::evaluation::EvalPair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("source") || !j.contains("converted"))
      throw h2nh::FormatError("pairs record needs 'source' and 'converted': " + line);
    auto resolve = [&](const std::string& p) {
      fs::path q(p);
      return q.is_relative() ? path.parent_path() / q : q;
    };
    h2nh::evaluation::EvalPair p;
    p.source = h2nh::dsp::load_wav(resolve(j["source"].get<std::string>()));
    p.converted = h2nh::dsp::load_wav(resolve(j["converted"].get<std::string>()));
    p.id = j.value("id", j["converted"].get<std::string>());
    p.linguistic = j.value("linguistic", false);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

int cmd_evaluate(const EvaluateArgs& a) {
  auto cfg = resolve_config(a.config);
  print_hash(cfg);
  std::unique_ptr<h2nh::evaluation::AsrPlugin> asr;
  if (!a.asr_endpoint.empty())
    asr = std::make_unique<h2nh::evaluation::HttpAsrPlugin>(a.asr_endpoint);
  else if (!a.asr_command.empty())
    asr = std::make_unique<h2nh::evaluation::CommandAsrPlugin>(a.asr_command);
  auto report = h2nh::evaluation::evaluate_pairs(load_pairs(a.pairs), asr.get(), cfg.stft);
  h2nh::evaluation::write_report(report, a.out, h2nh::config_hash(cfg));
  std::cout << "pairs " << report.count;
  if (report.mean_pcc_e) std::cout << " mean_pcc_e " << *report.mean_pcc_e;
  if (report.mean_rmse_e) std::cout << " mean_rmse_e " << *report.mean_rmse_e;
  std::cout << std::endl;
  return static_cast<int>(ExitCode::kOk);
}

// plot -----------------------------------------------------------------------

struct PlotArgs {
  ConfigArgs config;
  std::string audio, out;
  double max_freq = 0.0;
};

int cmd_plot(const PlotArgs& a) {
  auto cfg = resolve_config(a.config);
  print_hash(cfg);
  h2nh::plot::PlotOptions opts;
  opts.max_freq = a.max_freq;
  opts.n_mels = cfg.n_mels;
  opts.stft = cfg.stft;
  auto img = h2nh::plot::plot_mel(h2nh::dsp::load_wav(a.audio), a.out, opts);
  std::cout << "wrote " << a.out << " (" << img.width << "x" << img.height << ", "
            << img.width * img.seconds_per_column << " s)" << std::endl;
  return static_cast<int>(ExitCode::kOk);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const h2nh::ConfigError*>(&e)) return static_cast<int>(ExitCode::kConfig);
  if (dynamic_cast<const h2nh::StateError*>(&e)) return static_cast<int>(ExitCode::kModelState);
  if (dynamic_cast<const h2nh::FormatError*>(&e) || dynamic_cast<const h2nh::DimensionError*>(&e) ||
      dynamic_cast<const h2nh::DomainError*>(&e))
    return static_cast<int>(ExitCode::kData);
  return static_cast<int>(ExitCode::kFailure);
}

}  // namespace

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;

  CLI::App app{"Human-to-non-human voice conversion"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "build the feature cache from a manifest");
  add_config_options(c_pre, pre.config);
  c_pre->add_option("--manifest", pre.manifest, "NDJSON manifest")->required();
  c_pre->add_option("--out", pre.out_dir, "cache directory (default: $H2NH_CACHE_DIR or config)");

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "train from the feature cache");
  add_config_options(c_tr, tr.config);
  c_tr->add_option("--cache", tr.cache_dir, "cache directory");
  c_tr->add_option("--checkpoint-dir", tr.checkpoint_dir, "checkpoint directory");
  c_tr->add_option("--resume", tr.resume, "checkpoint to resume, or 'auto' for the latest");
  c_tr->add_option("--metrics", tr.metrics_log, "NDJSON metrics log");
  c_tr->add_option("--steps", tr.steps, "steps to run (default: up to train.max_steps)");

  ConvertArgs cv;
  auto* c_cv = app.add_subcommand("convert", "convert a source clip to a reference timbre");
  c_cv->add_option("--checkpoint", cv.checkpoint)->required();
  c_cv->add_option("--source", cv.source)->required();
  c_cv->add_option("--reference", cv.reference)->required();
  c_cv->add_option("--out", cv.out)->required();
  c_cv->add_option("--temperature", cv.temperature, "prior noise scale")->check(CLI::NonNegativeNumber);
  c_cv->add_option("--seed", cv.seed);

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "energy metrics (and optional CER/WER) over pairs");
  add_config_options(c_ev, ev.config);
  c_ev->add_option("--pairs", ev.pairs, "NDJSON of {source, converted, id?, linguistic?}")
      ->required();
  c_ev->add_option("--out", ev.out, "report path")->required();
  auto* endpoint = c_ev->add_option("--asr-endpoint", ev.asr_endpoint, "http:// ASR endpoint");
  c_ev->add_option("--asr-command", ev.asr_command, "ASR command taking a WAV path")
      ->excludes(endpoint);

  PlotArgs pl;
  auto* c_pl = app.add_subcommand("plot", "render a mel spectrogram PNG");
  add_config_options(c_pl, pl.config);
  c_pl->add_option("--audio", pl.audio)->required();
  c_pl->add_option("--out", pl.out)->required();
  c_pl->add_option("--max-freq", pl.max_freq, "upper mel frequency in Hz");

  ConfigArgs dump;
  auto* c_cfg = app.add_subcommand("config", "print the resolved run config");
  add_config_options(c_cfg, dump);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (c_pre->parsed()) return cmd_preprocess(pre);
    if (c_tr->parsed()) return cmd_train(tr);
    if (c_cv->parsed()) return cmd_convert(cv);
    if (c_ev->parsed()) return cmd_evaluate(ev);
    if (c_pl->parsed()) return cmd_plot(pl);
    if (c_cfg->parsed()) {
      auto cfg = resolve_config(dump);
      std::cout << h2nh::to_json(cfg).dump(2) << std::endl;
      print_hash(cfg);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return exit_code_for(e);
  }
  return static_cast<int>(ExitCode::kFailure);
}
