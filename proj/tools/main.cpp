#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gravamen/cli/commands.hpp"
#include "gravamen/cli/config.hpp"

namespace fs = std::filesystem;
using namespace gravamen::cli;

namespace {

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return resolve_data_path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complaint severity experiments: ingest, features, nested cross-validation runs and reports"};
  app.require_subcommand(1);

  std::string input, output, lexicon, clusters, config_path, out_dir = "runs";
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::vector<std::string> runs;

  auto* ingest = app.add_subcommand("ingest", "validate a corpus and print its label distribution");
  ingest->add_option("input", input, "corpus JSONL")->required();
  ingest->add_option("--out", output, "write the normalized corpus here");

  auto* features = app.add_subcommand("features", "extract emotion and topic features");
  features->add_option("input", input, "corpus JSONL")->required();
  features->add_option("--out", output, "feature table JSONL")->required();
  features->add_option("--lexicon", lexicon, "emotion lexicon JSON (builtin when omitted)");
  features->add_option("--clusters", clusters, "token<TAB>cluster TSV (fit on the corpus when omitted)");
  features->add_option("--seed", seed, "seed for cluster fitting");

  auto* run = app.add_subcommand("run", "nested cross-validation experiment");
  run->add_option("--config", config_path, "key = value or JSON config")->required();
  run->add_option("--seed", seed, "overrides both the training and the fold seed");
  run->add_option("--workers", workers, "outer folds trained concurrently")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "directory holding run directories");

  auto* compare = app.add_subcommand("compare", "paired t-test and prediction flips between two runs");
  compare->add_option("runs", runs, "two run directories")->required()->expected(2);

  auto* report = app.add_subcommand("report", "markdown metrics table and confusion CSVs");
  report->add_option("runs", runs, "run directories")->required()->expected(1, -1);
  report->add_option("--out", out_dir, "output directory")->required();

  auto* agree = app.add_subcommand("agreement", "Fleiss' kappa over annotator labels");
  agree->add_option("input", input, "corpus JSONL with annotators")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest) {
      cmd_ingest(resolve_data_path(input), output.empty() ? std::nullopt : std::optional<fs::path>(output), std::cout);
    } else if (*features) {
      cmd_features(resolve_data_path(input), output, optional_path(lexicon), optional_path(clusters), seed.value_or(0),
                   std::cout);
    } else if (*run) {
      ExperimentConfig config = load_config(config_path);
      if (seed) {
        config.experiment.train.seed = *seed;
        config.fold_seed = *seed;
      }
      cmd_run(config, out_dir, workers, std::cout);
    } else if (*compare) {
      cmd_compare(runs[0], runs[1], std::cout);
    } else if (*report) {
      std::vector<fs::path> dirs(runs.begin(), runs.end());
      cmd_report(dirs, out_dir, std::cout);
    } else if (*agree) {
      cmd_agreement(resolve_data_path(input), std::cout);
    }
  } catch (...) {
    return exit_code_for_current_exception(std::cerr);
  }
  return kExitOk;
}
