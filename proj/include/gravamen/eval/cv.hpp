#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gravamen/corpus/document.hpp"
#include "gravamen/corpus/folds.hpp"
#include "gravamen/eval/metrics.hpp"
#include "gravamen/lingfeat/features.hpp"
#include "gravamen/models/spec.hpp"
#include "gravamen/mtl/mtl.hpp"

namespace gravamen::eval {

// severity: four complaint levels. binary: complaint vs non-complaint. mtl: joint training with
// five-way severity and the binary head.
enum class Task { Severity, Binary, Mtl };

std::string_view to_string(Task task);
// Throws ConfigError for anything but severity, binary, mtl.
Task parse_task(std::string_view text);

// Class count of the task's primary label.
std::size_t task_classes(Task task);

// Gold primary label per document (severity id, binary id, or five-way severity).
// Throws DataError naming the first document without one.
std::vector<int> task_labels(const corpus::Corpus& corpus, Task task);

struct Experiment {
  Task task = Task::Severity;
  models::ModelSpec model;
  models::TrainConfig train;
  mtl::MtlConfig mtl;  // task mtl only
  bool sample_std = false;

  // Throws ConfigError for inconsistent settings (e.g. an MTL task on a bag-of-words model).
  void validate() const;
};

struct PredictionRow {
  std::string doc_id;
  std::size_t fold = 0;
  int gold = -1;
  int pred = -1;
  int gold_binary = -1;  // task mtl only
  int pred_binary = -1;

  friend bool operator==(const PredictionRow&, const PredictionRow&) = default;
};

// What one outer fold trained on and how its model was chosen.
struct FoldRecord {
  std::size_t fold = 0;
  std::optional<std::size_t> selected_inner;  // none for the majority baseline
  std::vector<double> inner_val_loss;
  std::size_t best_epoch = 0;
  double train_accuracy = 0.0;  // percent, retained model on its own training documents
  std::vector<std::size_t> train, val, test;  // corpus indices seen by the retained model
};

struct CvResult {
  Task task = Task::Severity;
  std::vector<Scores> fold_scores;
  std::vector<Scores> fold_binary_scores;  // task mtl only
  MetricsReport metrics;
  std::optional<MetricsReport> binary_metrics;
  std::vector<PredictionRow> predictions;  // fold order, then corpus order
  std::vector<FoldRecord> folds;
};

// Nested cross-validation. Per outer fold every inner split trains one model, the model with the
// lowest validation loss is kept and scored once on the outer test fold. Neural models use a
// vocabulary built from the outer training documents. Results depend only on the experiment, the
// plan and the data; `workers` sets how many outer folds train concurrently.
// Throws DataError when the plan does not cover the corpus.
CvResult nested_cv_run(const corpus::Corpus& corpus, const lingfeat::FeatureTable* features,
                       const Experiment& experiment, const corpus::FoldPlan& plan, std::size_t workers = 1);

// CSV `doc_id,fold,gold,pred[,gold_binary,pred_binary]` with a header row.
void write_predictions(std::ostream& out, std::span<const PredictionRow> rows);
// Throws DataError naming the line for malformed rows.
std::vector<PredictionRow> read_predictions(std::istream& in);

nlohmann::json summary_to_json(const Summary& s);
nlohmann::json report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);
// Per-fold arrays and aggregates, keyed "severity" / "binary" by label.
nlohmann::json metrics_to_json(const CvResult& result);

}  // namespace gravamen::eval
