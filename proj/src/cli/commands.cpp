#include "gravamen/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "gravamen/error.hpp"
#include "gravamen/eval/metrics.hpp"
#include "gravamen/lingfeat/features.hpp"

namespace gravamen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void print_distribution(const corpus::ClassDistribution& dist, std::string_view title, std::ostream& log) {
  log << "\n" << title << " (" << dist.total << " documents)\n\n";
  log << "| Label | Count | Percent |\n|---|---:|---:|\n";
  for (const auto& c : dist.classes) log << "| " << c.label << " | " << c.count << " | " << fixed(c.percent) << " |\n";
}

bool has_severity(const corpus::Document& d) {
  return d.severity_label && *d.severity_label != corpus::SeverityLabel::NoComplaintSeverity;
}

std::string utc_stamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

fs::path fresh_run_dir(const fs::path& root, const std::string& hash, std::string& id) {
  fs::create_directories(root);
  for (;;) {
    id = utc_stamp() + "_" + hash;
    const fs::path dir = root / id;
    if (fs::create_directory(dir)) return dir;
  }
}

lingfeat::FeatureTable extract_table(const corpus::Corpus& corpus, const lingfeat::EmotionLexicon& lexicon,
                                     const lingfeat::TopicClusters& clusters) {
  lingfeat::FeatureTable table;
  for (const auto& doc : corpus) table.emplace(doc.id, lingfeat::extract(doc, lexicon, clusters));
  return table;
}

std::vector<std::string> class_names(eval::Task task, bool binary) {
  std::vector<std::string> names;
  if (binary || task == eval::Task::Binary) {
    for (int c = 0; c < 2; ++c) names.emplace_back(corpus::to_string(static_cast<corpus::BinaryLabel>(c)));
  } else {
    for (std::size_t c = 0; c < eval::task_classes(task); ++c) {
      names.emplace_back(corpus::to_string(static_cast<corpus::SeverityLabel>(c)));
    }
  }
  return names;
}

std::string primary_key(eval::Task task) { return task == eval::Task::Binary ? "binary" : "severity"; }

std::string model_label(const ExperimentConfig& c) {
  std::string label(models::to_string(c.experiment.model.kind));
  if (c.experiment.task == eval::Task::Mtl) label = std::string(mtl::to_string(c.experiment.mtl.arch)) + " (" + label + ")";
  if (c.experiment.model.feature_mode != lingfeat::FeatureMode::None) {
    label += " + " + std::string(lingfeat::to_string(c.experiment.model.feature_mode));
  }
  return label;
}

void make_read_only(const fs::path& path) {
  fs::permissions(path, fs::perms::owner_read | fs::perms::group_read | fs::perms::others_read,
                  fs::perm_options::replace);
}

}  // namespace

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (...) {
    err << "runtime error: unknown exception\n";
    return kExitRuntime;
  }
}

IngestReport cmd_ingest(const fs::path& input, const std::optional<fs::path>& output, std::ostream& log) {
  const corpus::Corpus corpus = corpus::load_corpus(input);
  IngestReport report;
  report.documents = corpus.size();
  if (std::all_of(corpus.begin(), corpus.end(), [](const auto& d) { return d.binary_label.has_value(); })) {
    report.binary = corpus::class_distribution(corpus, corpus::LabelKind::Binary);
  }
  corpus::Corpus complaints;
  for (const auto& d : corpus) {
    if (has_severity(d)) complaints.push_back(d);
  }
  if (!complaints.empty()) report.severity = corpus::class_distribution(complaints, corpus::LabelKind::Severity);
  if (output) {
    std::ostringstream out;
    corpus::write_corpus(corpus, out);
    write_file(*output, out.str());
  }
  log << input.string() << ": " << report.documents << " documents valid\n";
  if (!report.binary.classes.empty()) print_distribution(report.binary, "Complaint distribution", log);
  if (report.severity) print_distribution(*report.severity, "Severity distribution over complaints", log);
  return report;
}

void cmd_features(const fs::path& corpus_path, const fs::path& output, const std::optional<fs::path>& lexicon,
                  const std::optional<fs::path>& clusters, std::uint64_t seed, std::ostream& log) {
  const corpus::Corpus corpus = corpus::load_corpus(corpus_path);
  const auto lex = lexicon ? lingfeat::EmotionLexicon::load(*lexicon) : lingfeat::EmotionLexicon::builtin();
  lingfeat::TopicClusters topics;
  if (clusters) {
    topics = lingfeat::TopicClusters::load(*clusters);
  } else {
    topics = lingfeat::build_topic_clusters(corpus, seed);
    fs::path cluster_out = output;
    cluster_out += ".clusters.tsv";
    std::ostringstream out;
    topics.write(out);
    write_file(cluster_out, out.str());
    log << "topic clusters fit on the corpus: " << cluster_out.string() << "\n";
  }
  std::vector<lingfeat::LinguisticFeatures> features;
  features.reserve(corpus.size());
  for (const auto& doc : corpus) features.push_back(lingfeat::extract(doc, lex, topics));
  std::ostringstream out;
  lingfeat::write_feature_table(corpus, features, out);
  write_file(output, out.str());
  log << "features for " << corpus.size() << " documents: " << output.string() << "\n";
}

corpus::Corpus task_corpus(const corpus::Corpus& corpus, eval::Task task) {
  if (task != eval::Task::Severity) return corpus;
  corpus::Corpus out;
  for (const auto& d : corpus) {
    if (has_severity(d)) out.push_back(d);
  }
  return out;
}

RunRecord cmd_run(const ExperimentConfig& config, const fs::path& runs_root, std::size_t workers, std::ostream& log) {
  config.validate();
  if (workers == 0) throw ConfigError("workers must be at least 1");
  const eval::Experiment& ex = config.experiment;
  const corpus::Corpus full = corpus::load_corpus(resolve_data_path(config.dataset));
  const corpus::Corpus docs = task_corpus(full, ex.task);
  if (docs.empty()) throw DataError("no documents carry labels for task " + std::string(eval::to_string(ex.task)));
  corpus::FoldPlan plan;
  try {
    plan = corpus::make_folds(eval::task_labels(docs, ex.task), config.outer_folds, config.inner_folds, config.fold_seed);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("cannot build folds: ") + e.what());
  }

  std::optional<lingfeat::FeatureTable> features;
  if (ex.model.feature_mode != lingfeat::FeatureMode::None) {
    if (!config.features.empty()) {
      features = lingfeat::load_feature_table(resolve_data_path(config.features));
    } else {
      features = extract_table(docs, lingfeat::EmotionLexicon::builtin(),
                               lingfeat::build_topic_clusters(full, config.fold_seed));
    }
  }

  RunRecord record;
  record.dir = fresh_run_dir(runs_root, config_hash(config), record.id);
  const fs::path marker = record.dir / kIncompleteMarker;
  write_file(marker, "run started\n");
  write_file(record.dir / kConfigFile, config_to_json(config).dump(2) + "\n");
  write_file(record.dir / kFoldPlanFile, corpus::fold_plan_to_json(plan) + "\n");
  log << "run " << record.id << ": " << docs.size() << " documents, " << plan.outer_folds() << "x"
      << config.inner_folds << " folds\n";
  try {
    record.result = eval::nested_cv_run(docs, features ? &*features : nullptr, ex, plan, workers);
    write_file(record.dir / kMetricsFile, eval::metrics_to_json(record.result).dump(2) + "\n");
    std::ostringstream preds;
    eval::write_predictions(preds, record.result.predictions);
    write_file(record.dir / kPredictionsFile, preds.str());
  } catch (const std::exception& e) {
    write_file(marker, std::string("run failed: ") + e.what() + "\n");
    throw;
  }
  fs::remove(marker);
  for (const char* name : {kConfigFile, kFoldPlanFile, kMetricsFile, kPredictionsFile}) {
    make_read_only(record.dir / name);
  }

  const auto print = [&](const char* title, const eval::MetricsReport& r) {
    log << title << ": accuracy " << fixed(r.accuracy.mean) << " ± " << fixed(r.accuracy.std) << ", precision "
        << fixed(r.precision.mean) << " ± " << fixed(r.precision.std) << ", recall " << fixed(r.recall.mean) << " ± "
        << fixed(r.recall.std) << ", f1 " << fixed(r.f1.mean) << " ± " << fixed(r.f1.std) << "\n";
  };
  print(ex.task == eval::Task::Binary ? "binary" : "severity", record.result.metrics);
  if (record.result.binary_metrics) print("binary", *record.result.binary_metrics);
  log << "wrote " << record.dir.string() << "\n";
  return record;
}

StoredRun load_run(const fs::path& dir) {
  StoredRun run;
  run.dir = dir;
  run.id = dir.filename().string();
  if (run.id.empty()) run.id = dir.parent_path().filename().string();
  if (!fs::is_directory(dir)) throw DataError("run directory " + dir.string() + " does not exist");
  if (fs::exists(dir / kIncompleteMarker)) throw DataError("run " + run.id + " is incomplete");
  try {
    run.config = parse_config(read_file(dir / kConfigFile));
  } catch (const ConfigError& e) {
    throw DataError("run " + run.id + " has an invalid config snapshot: " + e.what());
  }
  const auto sep = run.id.rfind('_');
  if (sep == std::string::npos || run.id.substr(sep + 1) != config_hash(run.config)) {
    throw DataError("run " + run.id + ": config snapshot does not match the hash in its name");
  }
  try {
    run.plan = corpus::fold_plan_from_json(read_file(dir / kFoldPlanFile));
    run.metrics = json::parse(read_file(dir / kMetricsFile));
  } catch (const json::exception& e) {
    throw DataError("run " + run.id + ": " + e.what());
  }
  std::istringstream preds(read_file(dir / kPredictionsFile));
  run.predictions = eval::read_predictions(preds);
  return run;
}

CompareReport cmd_compare(const fs::path& run_a, const fs::path& run_b, std::ostream& log) {
  const StoredRun a = load_run(run_a);
  const StoredRun b = load_run(run_b);
  if (a.config.experiment.task != b.config.experiment.task) throw DataError("runs cover different tasks");
  if (!(a.plan == b.plan)) throw DataError("runs use different fold plans");
  if (a.predictions.size() != b.predictions.size()) throw DataError("runs predict different documents");
  std::map<std::string, const eval::PredictionRow*> by_id;
  for (const auto& row : b.predictions) by_id.emplace(row.doc_id, &row);
  if (by_id.size() != b.predictions.size()) throw DataError("run " + b.id + " predicts a document twice");

  const eval::Task task = a.config.experiment.task;
  const bool binary = task != eval::Task::Severity;
  std::vector<int> pa, pb, gold;
  for (const auto& row : a.predictions) {
    const auto it = by_id.find(row.doc_id);
    if (it == by_id.end() || it->second->fold != row.fold) throw DataError("runs predict different documents");
    const auto& other = *it->second;
    if (task == eval::Task::Mtl) {
      pa.push_back(row.pred_binary);
      pb.push_back(other.pred_binary);
      gold.push_back(row.gold_binary);
    } else {
      pa.push_back(row.pred);
      pb.push_back(other.pred);
      gold.push_back(row.gold);
    }
  }

  CompareReport report;
  report.binary_flips = binary;
  const std::string key = primary_key(task);
  try {
    report.f1_a = a.metrics.at(key).at("f1").at("per_fold").get<std::vector<double>>();
    report.f1_b = b.metrics.at(key).at("f1").at("per_fold").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("metrics file lacks per-fold f1: ") + e.what());
  }
  report.ttest = eval::paired_t_test(report.f1_a, report.f1_b);
  if (binary) {
    report.flips = eval::flip_analysis(pa, pb, gold);
  } else {
    auto& f = report.flips;
    f.total = gold.size();
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (pa[i] != pb[i]) ++f.flips;
      if (pa[i] == pb[i] && pa[i] != gold[i]) ++f.stable_wrong;
    }
    if (f.total > 0) {
      f.flip_percent = 100.0 * static_cast<double>(f.flips) / static_cast<double>(f.total);
      f.stable_wrong_percent = 100.0 * static_cast<double>(f.stable_wrong) / static_cast<double>(f.total);
    }
  }

  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  const auto& f = report.flips;
  log << "| Run | Model | Mean " << key << " F1 |\n|---|---|---:|\n";
  log << "| " << a.id << " | " << model_label(a.config) << " | " << fixed(mean(report.f1_a)) << " |\n";
  log << "| " << b.id << " | " << model_label(b.config) << " | " << fixed(mean(report.f1_b)) << " |\n\n";
  log << "paired t-test on per-fold F1: t = " << fixed(report.ttest.t, 4) << ", df = " << report.ttest.df
      << ", p = " << fixed(report.ttest.p, 4) << (report.ttest.p < 0.05 ? " (significant at 0.05)" : "") << "\n";
  log << "prediction flips: " << f.flips << " / " << f.total << " (" << fixed(f.flip_percent) << "%)\n";
  if (binary && f.flips > 0) {
    log << "  complaint -> non-complaint: " << fixed(f.complaint_to_non_percent) << "%, non-complaint -> complaint: "
        << fixed(f.non_to_complaint_percent) << "%\n";
  }
  log << "wrong in both runs: " << f.stable_wrong << " (" << fixed(f.stable_wrong_percent) << "%)\n";
  return report;
}

void cmd_report(std::span<const fs::path> runs, const fs::path& out_dir, std::ostream& log) {
  if (runs.empty()) throw ConfigError("report needs at least one run");
  std::vector<StoredRun> loaded;
  for (const auto& dir : runs) loaded.push_back(load_run(dir));

  std::ostringstream table;
  table << "| Run | Model | Labels | Acc | P | R | F1 |\n|---|---|---|---|---|---|---|\n";
  const auto cell = [](const eval::Summary& s) { return fixed(s.mean) + " ± " + fixed(s.std); };
  std::vector<std::pair<std::string, std::string>> csv_files;
  for (const auto& run : loaded) {
    const eval::Task task = run.config.experiment.task;
    std::vector<std::string> keys{primary_key(task)};
    if (task == eval::Task::Mtl) keys.emplace_back("binary");
    for (const auto& key : keys) {
      eval::MetricsReport r;
      try {
        r = eval::report_from_json(run.metrics.at(key));
      } catch (const json::exception& e) {
        throw DataError("run " + run.id + ": " + e.what());
      }
      table << "| " << run.id << " | " << model_label(run.config) << " | " << key << " | " << cell(r.accuracy)
            << " | " << cell(r.precision) << " | " << cell(r.recall) << " | " << cell(r.f1) << " |\n";
    }
    for (const auto& key : keys) {
      const bool binary_labels = key == "binary";
      const bool mtl_binary = binary_labels && task == eval::Task::Mtl;
      const auto names = class_names(task, binary_labels);
      std::vector<int> gold, pred;
      for (const auto& row : run.predictions) {
        gold.push_back(mtl_binary ? row.gold_binary : row.gold);
        pred.push_back(mtl_binary ? row.pred_binary : row.pred);
      }
      const auto matrix = eval::confusion(pred, gold, names.size());
      const auto norm = matrix.normalized();
      std::ostringstream csv;
      csv << "gold";
      for (const auto& n : names) csv << "," << n;
      csv << "\n";
      for (std::size_t g = 0; g < names.size(); ++g) {
        csv << names[g];
        for (std::size_t p = 0; p < names.size(); ++p) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.10g", norm[g * names.size() + p]);
          csv << "," << buf;
        }
        csv << "\n";
      }
      const std::string suffix = task == eval::Task::Mtl ? "_" + key : "";
      csv_files.emplace_back(run.id + suffix + "_confusion.csv", csv.str());
    }
  }

  fs::create_directories(out_dir);
  write_file(out_dir / "report.md", table.str());
  for (const auto& [name, text] : csv_files) write_file(out_dir / name, text);
  log << table.str() << "\nwrote " << (out_dir / "report.md").string() << " and " << csv_files.size()
      << " confusion file(s)\n";
}

eval::AgreementReport cmd_agreement(const fs::path& corpus_path, std::ostream& log) {
  const corpus::Corpus corpus = corpus::load_corpus(corpus_path);
  std::vector<std::vector<int>> labels;
  std::vector<std::string> ids;
  for (const auto& doc : corpus) {
    if (!doc.annotator_labels) continue;
    std::vector<int> item;
    for (const auto l : *doc.annotator_labels) item.push_back(static_cast<int>(l));
    labels.push_back(std::move(item));
    ids.push_back(doc.id);
  }
  if (labels.empty()) throw DataError("no document carries annotator labels");
  const auto report = eval::agreement(labels, corpus::kJointSeverityClasses);
  log << "documents with three annotations: " << labels.size() << "\n";
  log << "Fleiss' kappa: " << fixed(report.kappa, 4) << "\n";
  log << "needing adjudication: " << report.ties.size() << "\n";
  for (const auto i : report.ties) log << "  " << ids[i] << "\n";
  return report;
}

}  // namespace gravamen::cli
