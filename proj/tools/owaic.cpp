// owaic: simulation studies and streaming WAIC from the command line.
//
// Exit codes: 0 success, 1 usage, 2 data or format error, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "owaic/errors.hpp"
#include "owaic/models.hpp"
#include "owaic/stream.hpp"
#include "owaic/study.hpp"
#include "owaic/waic.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

std::string default_out_dir() {
  if (const char* env = std::getenv("OWAIC_OUT_DIR"); env && *env) return env;
  return "owaic-out";
}

nlohmann::json to_json(const owaic::WaicResult& r) {
  nlohmann::json doc;
  doc["mode"] = owaic::to_string(r.mode);
  doc["elements"] = r.elements;
  doc["samples"] = r.samples;
  doc["innerDraws"] = r.inner_draws;
  doc["fractions"] = nlohmann::json::array();
  for (const auto& f : r.fractions) {
    doc["fractions"].push_back({{"fraction", f.fraction}, {"waic", f.waic}, {"lppd", f.lppd}, {"pWaic", f.p_waic}});
  }
  return doc;
}

void print_result(const owaic::WaicResult& r, bool as_json) {
  if (as_json) {
    std::cout << to_json(r).dump(2) << '\n';
    return;
  }
  std::cout.precision(17);
  std::cout << "elements " << r.elements << ", samples " << r.samples << ", mode " << owaic::to_string(r.mode)
            << '\n';
  for (const auto& f : r.fractions) {
    std::cout << "fraction " << f.fraction << "  waic " << f.waic << "  lppd " << f.lppd << "  p_waic "
              << f.p_waic << '\n';
  }
}

struct StudyArgs {
  std::string config;
  bool full_scale = false;
  std::string out = default_out_dir();
  std::vector<std::string> formats{"csv", "json", "pretty"};
  std::optional<std::size_t> threads;
  std::optional<std::size_t> replicates;
  bool quiet = false;
};

int study_run(const StudyArgs& args) {
  owaic::StudyConfig config = owaic::load_study_config(args.config);
  if (args.full_scale) owaic::apply_full_scale(config);
  if (args.replicates) {
    config.replicates = *args.replicates;
    config.replicate_seeds.clear();
  }
  if (args.threads) config.threads = *args.threads;
  config.validate();
  std::vector<owaic::ReportFormat> formats;
  for (const auto& f : args.formats) formats.push_back(owaic::parse_report_format(f));

  owaic::ProgressCallback progress;
  if (!args.quiet) {
    progress = [](std::size_t done, std::size_t total) {
      std::cerr << "\rfits " << done << "/" << total << std::flush;
      if (done == total) std::cerr << '\n';
    };
  }
  const owaic::StudyReport report = owaic::run_study(config, progress);
  for (auto f : formats) {
    for (const auto& p : owaic::emit_report(report, f, args.out)) std::cerr << "wrote " << p.string() << '\n';
  }
  std::cout << owaic::format_pretty(report);
  return 0;
}

struct IngestArgs {
  std::string stream;
  std::optional<std::string> meta;
  std::optional<std::string> checkpoint_out;
  bool json = false;
};

int waic_ingest(const IngestArgs& args) {
  std::optional<fs::path> meta;
  if (args.meta) meta = *args.meta;
  const owaic::WaicState state = owaic::ingest_stream_state(args.stream, meta);
  if (args.checkpoint_out) owaic::save_checkpoint_file(*args.checkpoint_out, state);
  if (args.checkpoint_out && state.sample_count() < 2) return 0;
  print_result(state.finalize(), args.json);
  return 0;
}

struct ResumeArgs {
  std::string checkpoint;
  std::string stream;
  std::optional<std::string> save;
  bool json = false;
};

int waic_resume(const ResumeArgs& args) {
  owaic::WaicState state = owaic::load_checkpoint_file(args.checkpoint);
  std::ifstream in(args.stream);
  if (!in) throw owaic::FormatError("cannot open stream " + args.stream);
  owaic::StreamReader reader(in);
  owaic::feed_stream(reader, state);
  if (args.save) owaic::save_checkpoint_file(*args.save, state);
  print_result(state.finalize(), args.json);
  return 0;
}

int model_list() {
  for (const auto& m : owaic::model_catalog()) {
    std::cout << m.name << "  " << (m.family == owaic::Family::hier ? "hier" : "sv  ") << "  "
              << (m.has_latent ? "latent " : "       ") << "  " << m.description << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming WAIC engine and simulation-study harness"};
  app.require_subcommand(1);

  StudyArgs study_args;
  auto* study = app.add_subcommand("study", "simulation studies");
  study->require_subcommand(1);
  auto* run = study->add_subcommand("run", "run a study from a JSON config");
  run->add_option("--config", study_args.config, "study config file")->required()->check(CLI::ExistingFile);
  run->add_flag("--full-scale", study_args.full_scale, "use the full replicate count, keep and K");
  run->add_option("--out", study_args.out, "output directory (default $OWAIC_OUT_DIR or ./owaic-out)");
  run->add_option("--format", study_args.formats, "report formats: csv, json, pretty")->delimiter(',');
  run->add_option("--threads", study_args.threads, "worker threads (0: one per core)");
  run->add_option("--replicates", study_args.replicates, "override the replicate count");
  run->add_flag("--quiet", study_args.quiet, "no progress output");

  auto* waic = app.add_subcommand("waic", "online WAIC over h-vector streams");
  waic->require_subcommand(1);
  IngestArgs ingest_args;
  auto* ingest = waic->add_subcommand("ingest", "compute WAIC from a stream file");
  ingest->add_option("--stream", ingest_args.stream, "stream file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--meta", ingest_args.meta, "partition file, optionally with mode and innerDraws")
      ->check(CLI::ExistingFile);
  ingest->add_option("--checkpoint-out", ingest_args.checkpoint_out, "save the accumulated state");
  ingest->add_flag("--json", ingest_args.json, "print JSON");

  ResumeArgs resume_args;
  auto* resume = waic->add_subcommand("resume", "continue a checkpointed state with more samples");
  resume->add_option("--checkpoint", resume_args.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  resume->add_option("--stream", resume_args.stream, "stream file with the remaining samples")
      ->required()
      ->check(CLI::ExistingFile);
  resume->add_option("--save", resume_args.save, "save the updated state");
  resume->add_flag("--json", resume_args.json, "print JSON");

  auto* model = app.add_subcommand("model", "model catalog");
  model->require_subcommand(1);
  auto* list = model->add_subcommand("list", "list the available models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return study_run(study_args);
    if (*ingest) return waic_ingest(ingest_args);
    if (*resume) return waic_resume(resume_args);
    if (*list) return model_list();
  } catch (const owaic::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const owaic::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
