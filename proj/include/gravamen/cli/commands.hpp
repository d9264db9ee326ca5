#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gravamen/cli/config.hpp"
#include "gravamen/corpus/document.hpp"
#include "gravamen/eval/agreement.hpp"
#include "gravamen/eval/cv.hpp"
#include "gravamen/eval/stats.hpp"

namespace gravamen::cli {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitRuntime = 4,
};

// Maps the active exception to an exit code and prints its message to `err`.
int exit_code_for_current_exception(std::ostream& err);

// Files inside a run directory.
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kFoldPlanFile = "fold_plan.json";
inline constexpr const char* kMetricsFile = "metrics.json";
inline constexpr const char* kPredictionsFile = "predictions.csv";
inline constexpr const char* kIncompleteMarker = "INCOMPLETE";

struct IngestReport {
  std::size_t documents = 0;
  corpus::ClassDistribution binary;
  std::optional<corpus::ClassDistribution> severity;  // over complaints, when they carry severity
};

// Validates a corpus file, optionally rewrites it normalized to `output`, and prints the label
// distribution. Throws DataError naming the offending line.
IngestReport cmd_ingest(const std::filesystem::path& input, const std::optional<std::filesystem::path>& output,
                        std::ostream& log);

// Feature table for every document. Without `clusters` the topic clusters are fit on the corpus
// with `seed` and written next to the output as `<output>.clusters.tsv`.
void cmd_features(const std::filesystem::path& corpus_path, const std::filesystem::path& output,
                  const std::optional<std::filesystem::path>& lexicon,
                  const std::optional<std::filesystem::path>& clusters, std::uint64_t seed, std::ostream& log);

// Documents a task trains on: complaints with a severity label for task severity, all documents
// otherwise.
corpus::Corpus task_corpus(const corpus::Corpus& corpus, eval::Task task);

struct RunRecord {
  std::string id;  // <UTC timestamp>_<config hash>
  std::filesystem::path dir;
  eval::CvResult result;
};

// Nested cross-validation under a fresh directory in `runs_root`. The directory carries an
// INCOMPLETE marker until every artifact is written.
RunRecord cmd_run(const ExperimentConfig& config, const std::filesystem::path& runs_root, std::size_t workers,
                  std::ostream& log);

// A finalized run read back from disk. Throws DataError for incomplete runs, missing files and
// snapshots whose hash disagrees with the directory name.
struct StoredRun {
  std::string id;
  std::filesystem::path dir;
  ExperimentConfig config;
  corpus::FoldPlan plan;
  nlohmann::json metrics;
  std::vector<eval::PredictionRow> predictions;
};
StoredRun load_run(const std::filesystem::path& dir);

struct CompareReport {
  eval::TTestResult ttest;
  std::vector<double> f1_a, f1_b;
  eval::FlipReport flips;
  bool binary_flips = false;  // flip directions are meaningful
};

// Paired t-test on per-fold macro F1 and prediction flips a -> b. Runs must share the fold plan
// and documents, otherwise DataError before anything is printed.
CompareReport cmd_compare(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                          std::ostream& log);

// Markdown table (one row per run and label set, argument order) to `log` and `out_dir/report.md`,
// plus `out_dir/<run id>_confusion.csv` with row-normalized confusion matrices.
void cmd_report(std::span<const std::filesystem::path> runs, const std::filesystem::path& out_dir,
                std::ostream& log);

// Fleiss' kappa over the three annotator severity labels of every document that has them, and the
// documents whose labels all differ.
eval::AgreementReport cmd_agreement(const std::filesystem::path& corpus_path, std::ostream& log);

}  // namespace gravamen::cli
