#include "gravamen/eval/cv.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include "gravamen/corpus/vocabulary.hpp"
#include "gravamen/error.hpp"
#include "gravamen/models/baselines.hpp"
#include "gravamen/models/batch.hpp"
#include "gravamen/models/model.hpp"
#include "gravamen/models/trainer.hpp"

namespace gravamen::eval {

using corpus::BinaryLabel;
using corpus::SeverityLabel;
using models::ModelKind;

std::string_view to_string(Task task) {
  switch (task) {
    case Task::Severity: return "severity";
    case Task::Binary: return "binary";
    case Task::Mtl: return "mtl";
  }
  return "?";
}

Task parse_task(std::string_view text) {
  for (auto t : {Task::Severity, Task::Binary, Task::Mtl}) {
    if (text == to_string(t)) return t;
  }
  throw ConfigError("unknown task '" + std::string(text) + "' (expected severity, binary or mtl)");
}

std::size_t task_classes(Task task) {
  switch (task) {
    case Task::Severity: return corpus::kSeverityClasses;
    case Task::Binary: return 2;
    case Task::Mtl: return corpus::kJointSeverityClasses;
  }
  return 0;
}

namespace {

int joint_severity(const corpus::Document& doc) {
  if (doc.severity_label) return static_cast<int>(*doc.severity_label);
  if (doc.binary_label == BinaryLabel::NonComplaint) return static_cast<int>(SeverityLabel::NoComplaintSeverity);
  return -1;
}

int binary_of(const corpus::Document& doc) {
  if (doc.binary_label) return static_cast<int>(*doc.binary_label);
  const int s = joint_severity(doc);
  if (s < 0) return -1;
  return static_cast<int>(s == static_cast<int>(SeverityLabel::NoComplaintSeverity) ? BinaryLabel::NonComplaint
                                                                                    : BinaryLabel::Complaint);
}

}  // namespace

std::vector<int> task_labels(const corpus::Corpus& corpus, Task task) {
  std::vector<int> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus) {
    int label = -1;
    switch (task) {
      case Task::Severity: {
        const int s = joint_severity(doc);
        if (s >= 0 && s < static_cast<int>(corpus::kSeverityClasses)) label = s;
        break;
      }
      case Task::Binary: label = binary_of(doc); break;
      case Task::Mtl: label = binary_of(doc) >= 0 ? joint_severity(doc) : -1; break;
    }
    if (label < 0) {
      throw DataError("document '" + doc.id + "' has no label for task " + std::string(to_string(task)));
    }
    out.push_back(label);
  }
  return out;
}

void Experiment::validate() const {
  model.validate();
  train.validate();
  if (task == Task::Mtl) {
    mtl.validate();
    const bool transformer = mtl.arch == mtl::MtlArch::MtlM || mtl.arch == mtl::MtlArch::MtlMDe;
    if (transformer && model.feature_mode == lingfeat::FeatureMode::None) {
      throw ConfigError("architecture " + std::string(mtl::to_string(mtl.arch)) + " needs a feature mode");
    }
    if (model.kind == ModelKind::Majority || model.kind == ModelKind::LrBow) {
      throw ConfigError("task mtl needs a neural model");
    }
  } else if (model.num_classes != task_classes(task) && model.kind != ModelKind::Majority &&
             model.kind != ModelKind::LrBow) {
    throw ConfigError("num_classes " + std::to_string(model.num_classes) + " does not match task " +
                      std::string(to_string(task)));
  }
}

namespace {

// SplitMix64 finalizer; keeps per-fold seeds independent of scheduling.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t fold_seed(std::uint64_t base, std::size_t outer, std::size_t inner) {
  return mix(mix(mix(base) ^ (outer + 1)) ^ (inner + 1));
}

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct FoldOutput {
  FoldRecord record;
  std::vector<int> pred, pred_binary;
};

void check_plan(const corpus::FoldPlan& plan, std::size_t n) {
  if (plan.corpus_size != n) {
    throw DataError("fold plan covers " + std::to_string(plan.corpus_size) + " documents, corpus has " +
                    std::to_string(n));
  }
  if (plan.outer_folds() == 0 || plan.inner.size() != plan.outer_folds()) {
    throw DataError("fold plan has no usable outer folds");
  }
  std::vector<int> seen(n, 0);
  for (const auto& fold : plan.outer_test) {
    for (auto i : fold) {
      if (i >= n) throw DataError("fold plan index " + std::to_string(i) + " outside the corpus");
      ++seen[i];
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
    throw DataError("fold plan outer folds do not partition the corpus");
  }
  for (std::size_t k = 0; k < plan.outer_folds(); ++k) {
    if (plan.inner[k].empty()) throw DataError("outer fold " + std::to_string(k) + " has no inner splits");
    for (const auto& split : plan.inner[k]) {
      for (const auto* part : {&split.train, &split.val}) {
        for (auto i : *part) {
          if (i >= n || std::binary_search(plan.outer_test[k].begin(), plan.outer_test[k].end(), i)) {
            throw DataError("inner split of outer fold " + std::to_string(k) + " uses a test document");
          }
        }
      }
    }
  }
}

class FoldRunner {
 public:
  FoldRunner(const corpus::Corpus& corpus, const lingfeat::FeatureTable* features, const Experiment& ex,
             const corpus::FoldPlan& plan)
      : corpus_(corpus), features_(features), ex_(ex), plan_(plan), labels_(task_labels(corpus, ex.task)) {}

  FoldOutput run(std::size_t k) const {
    switch (ex_.model.kind) {
      case ModelKind::Majority: return majority(k);
      case ModelKind::LrBow: return lr_bow(k);
      default: return neural(k);
    }
  }

 private:
  double accuracy_on(std::span<const std::size_t> idx, std::span<const int> pred) const {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) hit += pred[i] == labels_[idx[i]];
    return idx.empty() ? 0.0 : 100.0 * static_cast<double>(hit) / static_cast<double>(idx.size());
  }

  std::vector<int> labels_at(std::span<const std::size_t> idx) const {
    std::vector<int> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(labels_[i]);
    return out;
  }

  FoldOutput majority(std::size_t k) const {
    FoldOutput out;
    out.record.fold = k;
    out.record.train = plan_.outer_train(k);
    out.record.test = plan_.outer_test[k];
    const auto train_labels = labels_at(out.record.train);
    out.pred = models::majority_predict(train_labels, out.record.test.size());
    out.record.train_accuracy = accuracy_on(out.record.train, models::majority_predict(train_labels, train_labels.size()));
    return out;
  }

  FoldOutput lr_bow(std::size_t k) const {
    const auto outer_train = plan_.outer_train(k);
    std::vector<const corpus::Document*> docs;
    for (auto i : outer_train) docs.push_back(&corpus_[i]);
    const auto vocab = corpus::build_vocab(docs);
    std::vector<models::BagOfWords> bags(corpus_.size());
    for (auto i : outer_train) bags[i] = models::bag_of_words(corpus_[i].tokens, vocab);
    for (auto i : plan_.outer_test[k]) bags[i] = models::bag_of_words(corpus_[i].tokens, vocab);
    const auto gather = [&](std::span<const std::size_t> idx) {
      std::vector<models::BagOfWords> out;
      for (auto i : idx) out.push_back(bags[i]);
      return out;
    };
    const std::size_t classes = task_classes(ex_.task);
    FoldOutput out;
    out.record.fold = k;
    std::optional<models::LrBow> best;
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < plan_.inner[k].size(); ++j) {
      const auto& split = plan_.inner[k][j];
      const auto train_docs = gather(split.train);
      const auto val_docs = gather(split.val);
      auto model = models::LrBow::train(train_docs, labels_at(split.train), vocab.size(), classes, ex_.train.l2);
      const double loss = model.objective(val_docs, labels_at(split.val), 0.0);
      out.record.inner_val_loss.push_back(loss);
      if (loss < best_loss) {
        best_loss = loss;
        best = std::move(model);
        out.record.selected_inner = j;
        out.record.train = split.train;
        out.record.val = split.val;
      }
    }
    if (!best) throw NumericError("no inner model of outer fold " + std::to_string(k) + " has a finite loss");
    out.record.test = plan_.outer_test[k];
    for (auto i : out.record.test) out.pred.push_back(best->predict(bags[i]));
    std::vector<int> fit;
    for (auto i : out.record.train) fit.push_back(best->predict(bags[i]));
    out.record.train_accuracy = accuracy_on(out.record.train, fit);
    return out;
  }

  FoldOutput neural(std::size_t k) const {
    const auto outer_train = plan_.outer_train(k);
    std::vector<const corpus::Document*> docs;
    for (auto i : outer_train) docs.push_back(&corpus_[i]);
    const auto vocab = corpus::build_vocab(docs);
    const auto target = ex_.task == Task::Severity ? models::Target::Severity4
                        : ex_.task == Task::Binary ? models::Target::Binary
                                                   : models::Target::Severity5;
    const auto examples = models::make_examples(corpus_, vocab, ex_.model.max_len, target, ex_.model.feature_mode,
                                                features_);
    const auto gather = [&](std::span<const std::size_t> idx) {
      std::vector<models::Example> out;
      out.reserve(idx.size());
      for (auto i : idx) out.push_back(examples[i]);
      return out;
    };
    const models::ModelShape shape{vocab.size(), lingfeat::feature_dim(ex_.model.feature_mode)};
    FoldOutput out;
    out.record.fold = k;
    std::unique_ptr<models::Model> best;
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < plan_.inner[k].size(); ++j) {
      const auto& split = plan_.inner[k][j];
      const auto train = gather(split.train);
      const auto val = gather(split.val);
      const std::uint64_t seed = fold_seed(ex_.train.seed, k, j);
      auto cfg = ex_.train;
      cfg.seed = seed;
      std::unique_ptr<models::Model> model;
      models::TrainHistory history;
      if (ex_.task == Task::Mtl) {
        auto m = std::make_unique<mtl::MtlModel>(ex_.model, ex_.mtl, shape, seed);
        history = mtl::train_mtl(*m, cfg, train, val);
        model = std::move(m);
      } else {
        model = models::make_model(ex_.model, shape, seed);
        history = models::train_model(*model, cfg, train, val);
      }
      out.record.inner_val_loss.push_back(history.best_val_loss);
      if (history.best_val_loss < best_loss) {
        best_loss = history.best_val_loss;
        best = std::move(model);
        out.record.selected_inner = j;
        out.record.best_epoch = history.best_epoch;
        out.record.train = split.train;
        out.record.val = split.val;
      }
    }
    if (!best) throw NumericError("no inner model of outer fold " + std::to_string(k) + " has a finite loss");
    out.record.test = plan_.outer_test[k];
    const auto test = gather(out.record.test);
    for (const auto& p : models::predict_proba(*best, test)) out.pred.push_back(argmax(p));
    std::vector<int> fit;
    for (const auto& p : models::predict_proba(*best, gather(out.record.train))) fit.push_back(argmax(p));
    out.record.train_accuracy = accuracy_on(out.record.train, fit);
    if (ex_.task == Task::Mtl) {
      for (double p : models::predict_complaint_proba(*best, test)) {
        out.pred_binary.push_back(static_cast<int>(p > 0.5 ? BinaryLabel::Complaint : BinaryLabel::NonComplaint));
      }
    }
    return out;
  }

  const corpus::Corpus& corpus_;
  const lingfeat::FeatureTable* features_;
  const Experiment& ex_;
  const corpus::FoldPlan& plan_;
  std::vector<int> labels_;
};

}  // namespace

CvResult nested_cv_run(const corpus::Corpus& corpus, const lingfeat::FeatureTable* features,
                       const Experiment& experiment, const corpus::FoldPlan& plan, std::size_t workers) {
  experiment.validate();
  check_plan(plan, corpus.size());
  const FoldRunner runner(corpus, features, experiment, plan);
  const std::size_t folds = plan.outer_folds();
  std::vector<FoldOutput> outputs(folds);
  std::vector<std::exception_ptr> errors(folds);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t k = next++; k < folds; k = next++) {
      try {
        outputs[k] = runner.run(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(workers, 1, folds);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const auto gold = task_labels(corpus, experiment.task);
  const std::size_t classes = task_classes(experiment.task);
  CvResult result;
  result.task = experiment.task;
  for (auto& out : outputs) {
    const auto& test = out.record.test;
    std::vector<int> g, gb;
    for (std::size_t r = 0; r < test.size(); ++r) {
      const auto& doc = corpus[test[r]];
      PredictionRow row{doc.id, out.record.fold, gold[test[r]], out.pred[r], -1, -1};
      g.push_back(row.gold);
      if (experiment.task == Task::Mtl) {
        row.gold_binary = binary_of(doc);
        row.pred_binary = out.pred_binary[r];
        gb.push_back(row.gold_binary);
      }
      result.predictions.push_back(std::move(row));
    }
    result.fold_scores.push_back(compute_metrics(out.pred, g, classes));
    if (experiment.task == Task::Mtl) result.fold_binary_scores.push_back(compute_metrics(out.pred_binary, gb, 2));
    result.folds.push_back(std::move(out.record));
  }
  result.metrics = aggregate(result.fold_scores, experiment.sample_std);
  if (experiment.task == Task::Mtl) result.binary_metrics = aggregate(result.fold_binary_scores, experiment.sample_std);
  return result;
}

void write_predictions(std::ostream& out, std::span<const PredictionRow> rows) {
  const bool binary = !rows.empty() && rows.front().gold_binary >= 0;
  out << "doc_id,fold,gold,pred" << (binary ? ",gold_binary,pred_binary" : "") << '\n';
  for (const auto& r : rows) {
    out << r.doc_id << ',' << r.fold << ',' << r.gold << ',' << r.pred;
    if (binary) out << ',' << r.gold_binary << ',' << r.pred_binary;
    out << '\n';
  }
}

namespace {

int parse_int(const std::string& cell, std::size_t line) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (cell.empty() || used != cell.size() || v < 0) {
    throw DataError("predictions line " + std::to_string(line) + ": bad number '" + cell + "'");
  }
  return v;
}

}  // namespace

std::vector<PredictionRow> read_predictions(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("predictions file is empty");
  std::size_t width = 0;
  if (line == "doc_id,fold,gold,pred") {
    width = 4;
  } else if (line == "doc_id,fold,gold,pred,gold_binary,pred_binary") {
    width = 6;
  } else {
    throw DataError("predictions line 1: unexpected header '" + line + "'");
  }
  std::vector<PredictionRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != width || cells[0].empty()) {
      throw DataError("predictions line " + std::to_string(number) + ": expected " + std::to_string(width) +
                      " fields");
    }
    PredictionRow r;
    r.doc_id = cells[0];
    r.fold = static_cast<std::size_t>(parse_int(cells[1], number));
    r.gold = parse_int(cells[2], number);
    r.pred = parse_int(cells[3], number);
    if (width == 6) {
      r.gold_binary = parse_int(cells[4], number);
      r.pred_binary = parse_int(cells[5], number);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json summary_to_json(const Summary& s) {
  return {{"per_fold", s.per_fold}, {"mean", s.mean}, {"std", s.std}};
}

nlohmann::json report_to_json(const MetricsReport& r) {
  return {{"accuracy", summary_to_json(r.accuracy)},
          {"precision", summary_to_json(r.precision)},
          {"recall", summary_to_json(r.recall)},
          {"f1", summary_to_json(r.f1)}};
}

MetricsReport report_from_json(const nlohmann::json& j) {
  const auto read = [&](const char* key) {
    try {
      const auto& s = j.at(key);
      Summary out;
      out.per_fold = s.at("per_fold").get<std::vector<double>>();
      out.mean = s.at("mean").get<double>();
      out.std = s.at("std").get<double>();
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("metrics entry '") + key + "' is malformed: " + e.what());
    }
  };
  return {read("accuracy"), read("precision"), read("recall"), read("f1")};
}

nlohmann::json metrics_to_json(const CvResult& result) {
  nlohmann::json j;
  j["task"] = std::string(to_string(result.task));
  j["folds"] = result.fold_scores.size();
  j[result.task == Task::Binary ? "binary" : "severity"] = report_to_json(result.metrics);
  if (result.binary_metrics) j["binary"] = report_to_json(*result.binary_metrics);
  nlohmann::json selection = nlohmann::json::array();
  for (const auto& f : result.folds) {
    nlohmann::json row{{"fold", f.fold}, {"inner_val_loss", f.inner_val_loss}, {"best_epoch", f.best_epoch},
                        {"train_accuracy", f.train_accuracy}};
    row["selected_inner"] = f.selected_inner ? nlohmann::json(*f.selected_inner) : nlohmann::json(nullptr);
    selection.push_back(std::move(row));
  }
  j["selection"] = std::move(selection);
  return j;
}

}  // namespace gravamen::eval
