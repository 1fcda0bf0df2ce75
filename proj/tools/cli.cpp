#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "instrec/audio_io.hpp"
#include "instrec/cluster.hpp"
#include "instrec/dataset.hpp"
#include "instrec/eval.hpp"
#include "instrec/features.hpp"
#include "instrec/learn.hpp"
#include "instrec/spectral.hpp"
#include "render.hpp"

namespace instrec::cli {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingClassDir:
    case ErrorCode::EmptyClassDir:
      return kLayout;
    case ErrorCode::MalformedHeader:
    case ErrorCode::UnsupportedEncoding:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::UnsupportedChannelCount:
    case ErrorCode::TruncatedData:
    case ErrorCode::EmptySignal:
    case ErrorCode::SampleOutOfRange:
      return kDecode;
    case ErrorCode::SchemaMismatch:
    case ErrorCode::InvalidDataset:
    case ErrorCode::SchemaVersionMismatch:
    case ErrorCode::CorruptModel:
    case ErrorCode::DimensionMismatch:
      return kSchema;
    case ErrorCode::SingleClassInput:
    case ErrorCode::NonFiniteFeature:
    case ErrorCode::NonFiniteInput:
    case ErrorCode::InvalidHyperparameter:
    case ErrorCode::DegenerateSplit:
    case ErrorCode::TooManyFolds:
    case ErrorCode::KTooLarge:
    case ErrorCode::InvalidClusterCount:
    case ErrorCode::LabelOutOfRange:
    case ErrorCode::EmptyInput:
      return kTraining;
    default:
      return kUsage;
  }
}

namespace {

class Failure : public std::runtime_error {
 public:
  Failure(int code, const std::string& message) : std::runtime_error(message), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

struct Shared {
  std::uint64_t seed = 42;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  bool verbose = false;
};

/// Resolved settings of one run. Entries marked `embed` go into output CSV
/// headers; the rest (paths of outputs, thread count) only into the log.
class Settings {
 public:
  template <typename T>
  void add(const std::string& key, const T& value, bool embed = true) {
    std::ostringstream s;
    if constexpr (std::is_same_v<T, double>) {
      s << format_double(value);
    } else if constexpr (std::is_same_v<T, bool>) {
      s << (value ? "true" : "false");
    } else {
      s << value;
    }
    entries_.push_back({key, s.str(), embed});
  }

  void print(std::ostream& log) const {
    log << "resolved configuration:\n";
    for (const auto& e : entries_) log << "  " << e.key << " = " << e.value << '\n';
  }

  std::vector<std::string> header_lines() const {
    std::vector<std::string> lines;
    for (const auto& e : entries_) {
      if (e.embed) lines.push_back(e.key + "=" + e.value);
    }
    return lines;
  }

 private:
  struct Entry {
    std::string key;
    std::string value;
    bool embed;
  };
  std::vector<Entry> entries_;
};

std::string join(const std::vector<std::string>& items, char sep = ',') {
  std::string s;
  for (const auto& item : items) s += (s.empty() ? "" : std::string(1, sep)) + item;
  return s;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. fn must not throw.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1), std::max<std::size_t>(n, 1));
  if (workers == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
}

template <typename Writer>
void write_file(const fs::path& path, Writer writer) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  writer(out);
  out.close();
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing " + path.string());
}

AudioClip load_audio(const fs::path& path) {
  try {
    return load_wav(path);
  } catch (const Error& e) {
    throw Failure(kDecode, e.what());
  }
}

LabeledDataset load_features(const fs::path& path) {
  try {
    return read_feature_csv(path);
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    throw Failure(code == kUsage ? kUsage : kSchema, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Option groups

void add_extraction_options(CLI::App* sub, ExtractionConfig& cfg) {
  sub->add_option("--frame-size", cfg.frame.frame_size, "STFT frame length in samples");
  sub->add_option("--hop-size", cfg.frame.hop_size, "STFT hop in samples");
  sub->add_option("--n-mels", cfg.n_mels, "mel filter count");
  sub->add_option("--rolloff", cfg.rolloff_fraction, "spectral rolloff fraction");
}

void describe_extraction(Settings& s, const ExtractionConfig& cfg) {
  s.add("frame_size", cfg.frame.frame_size);
  s.add("hop_size", cfg.frame.hop_size);
  s.add("centered", cfg.frame.centered);
  s.add("n_mels", cfg.n_mels);
  s.add("n_mfcc", cfg.n_mfcc);
  s.add("rolloff_fraction", cfg.rolloff_fraction);
  s.add("log_floor", cfg.log_floor);
  s.add("sample_rate_hz", kPipelineSampleRate);
}

struct ModelOptions {
  std::string name = "svm";
  double c = 0.0;
  std::string gamma;
  double tol = 0.0;
  std::size_t max_passes = 0;
  std::size_t trees = 0;
  std::size_t max_depth = 0;
  std::size_t min_leaf = 0;
  std::size_t features_per_split = 0;
  bool no_bootstrap = false;
  std::size_t rounds = 0;
  double learning_rate = 0.0;
  std::size_t tree_depth = 0;
  double l2 = 0.0;
  std::size_t epochs = 0;
  std::map<std::string, CLI::Option*> overrides;

  void attach(CLI::App* sub) {
    sub->add_option("--model", name, "model preset")
        ->check(CLI::IsMember(classifier_preset_names()));
    overrides["--c"] = sub->add_option("--c", c, "SVM penalty C");
    overrides["--gamma"] = sub->add_option("--gamma", gamma, "RBF gamma, a number or 'scale'");
    overrides["--tol"] = sub->add_option("--tol", tol, "convergence tolerance");
    overrides["--max-passes"] = sub->add_option("--max-passes", max_passes, "SMO iteration budget per row");
    overrides["--trees"] = sub->add_option("--trees", trees, "forest size");
    overrides["--max-depth"] = sub->add_option("--max-depth", max_depth, "tree depth limit, 0 = none");
    overrides["--min-leaf"] = sub->add_option("--min-leaf", min_leaf, "minimum rows per leaf");
    overrides["--features-per-split"] =
        sub->add_option("--features-per-split", features_per_split, "forest feature subset, 0 = sqrt(d)");
    overrides["--no-bootstrap"] = sub->add_flag("--no-bootstrap", no_bootstrap, "grow forest trees on all rows");
    overrides["--rounds"] = sub->add_option("--rounds", rounds, "boosting rounds");
    overrides["--learning-rate"] = sub->add_option("--learning-rate", learning_rate, "boosting or logistic step");
    overrides["--tree-depth"] = sub->add_option("--tree-depth", tree_depth, "boosting tree depth");
    overrides["--l2"] = sub->add_option("--l2", l2, "logistic L2 penalty");
    overrides["--epochs"] = sub->add_option("--epochs", epochs, "logistic epoch budget");
  }

  ClassifierSpec resolve(std::uint64_t seed) const {
    ClassifierSpec spec = classifier_preset(name, seed);
    std::set<std::string> used;
    auto take = [&](const char* flag, auto& field, const auto& value) {
      if (overrides.at(flag)->count() > 0) {
        field = value;
        used.insert(flag);
      }
    };
    std::visit(
        [&](auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, LogisticParams>) {
            take("--l2", p.l2, l2);
            take("--learning-rate", p.learning_rate, learning_rate);
            take("--epochs", p.epochs, epochs);
            take("--tol", p.tol, tol);
          } else if constexpr (std::is_same_v<P, TreeParams>) {
            take("--max-depth", p.max_depth, max_depth);
            take("--min-leaf", p.min_leaf, min_leaf);
          } else if constexpr (std::is_same_v<P, ForestParams>) {
            take("--trees", p.n_trees, trees);
            take("--max-depth", p.max_depth, max_depth);
            take("--min-leaf", p.min_leaf, min_leaf);
            take("--features-per-split", p.features_per_split, features_per_split);
            take("--no-bootstrap", p.bootstrap, !no_bootstrap);
          } else if constexpr (std::is_same_v<P, BoostedParams>) {
            take("--rounds", p.n_rounds, rounds);
            take("--learning-rate", p.learning_rate, learning_rate);
            take("--tree-depth", p.tree_depth, tree_depth);
            take("--min-leaf", p.min_leaf, min_leaf);
          } else {
            take("--c", p.c, c);
            take("--tol", p.tol, tol);
            take("--max-passes", p.max_passes, max_passes);
            if (overrides.at("--gamma")->count() > 0) {
              used.insert("--gamma");
              if (gamma == "scale") {
                p.gamma.reset();
              } else {
                try {
                  std::size_t consumed = 0;
                  p.gamma = std::stod(gamma, &consumed);
                  if (consumed != gamma.size()) throw std::invalid_argument(gamma);
                } catch (const std::exception&) {
                  throw Failure(kUsage, "--gamma must be a number or 'scale', got '" + gamma + "'");
                }
              }
            }
          }
        },
        spec.params);
    for (const auto& [flag, opt] : overrides) {
      if (opt->count() > 0 && !used.contains(flag)) {
        throw Failure(kUsage, flag + " does not apply to model '" + name + "'");
      }
    }
    spec.validate();
    return spec;
  }
};

void describe_model(Settings& s, const std::string& name, const ClassifierSpec& spec) {
  s.add("model", name);
  s.add("model.kind", to_string(spec.kind()));
  for (const auto& [key, value] : describe_hyperparams(spec.params)) s.add("model." + key, value);
}

void print_report(std::ostream& out, const EvalReport& r) {
  out << "model: " << r.model_name << '\n';
  out << std::left << std::setw(12) << "class" << std::right << std::setw(11) << "precision" << std::setw(9)
      << "recall" << std::setw(9) << "f1" << '\n';
  out << std::fixed << std::setprecision(4);
  for (std::size_t c = 0; c < r.confusion.n_classes(); ++c) {
    out << std::left << std::setw(12) << instrument_display_name(r.confusion.class_names[c]) << std::right
        << std::setw(11) << r.metrics.precision[c] << std::setw(9) << r.metrics.recall[c] << std::setw(9)
        << r.metrics.f1[c] << '\n';
  }
  out << "accuracy: " << r.accuracy << '\n';
  out << std::defaultfloat << std::setprecision(6);
}

void write_reports(const fs::path& dir, std::span<const EvalReport> reports, const std::vector<std::string>& header) {
  fs::create_directories(dir);
  write_file(dir / "per_class_metrics.csv",
             [&](std::ostream& o) { write_per_class_metrics_csv(o, reports, header); });
  write_file(dir / "model_accuracy.csv", [&](std::ostream& o) { write_model_accuracy_csv(o, reports, header); });
  for (const auto& r : reports) {
    write_file(dir / ("confusion_" + r.model_name + ".csv"),
               [&](std::ostream& o) { write_confusion_csv(o, r.confusion, header); });
    render::write_ppm(dir / ("confusion_" + r.model_name + ".ppm"), render::confusion_heatmap(r.confusion));
  }
  for (Metric m : {Metric::precision, Metric::recall, Metric::f1}) {
    write_file(dir / ("boxplot_" + std::string(to_string(m)) + ".csv"),
               [&](std::ostream& o) { write_boxplot_csv(o, reports, m, header); });
  }
}

// ---------------------------------------------------------------------------
// Commands

struct ExtractArgs {
  fs::path root;
  fs::path out;
  std::vector<std::string> classes = irmas_class_codes();
  ExtractionConfig config;
};

int cmd_extract(const Shared& shared, const ExtractArgs& a, std::ostream& out, std::ostream& log) {
  a.config.validate();
  Settings s;
  s.add("command", "extract");
  s.add("root", a.root.generic_string());
  s.add("out", a.out.generic_string(), false);
  s.add("classes", join(a.classes));
  describe_extraction(s, a.config);
  s.add("jobs", shared.jobs, false);
  s.print(log);

  const std::vector<ScanEntry> entries = scan_instrument_dirs(a.root, a.classes);
  log << "found " << entries.size() << " clips\n";
  const FeatureExtractor extractor(a.config);
  std::vector<std::array<double, kFeatureDim>> rows(entries.size());
  std::vector<std::exception_ptr> errors(entries.size());
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;
  parallel_for(entries.size(), shared.jobs, [&](std::size_t i) {
    try {
      rows[i] = extractor.extract(load_wav(entries[i].path)).values();
    } catch (...) {
      errors[i] = std::current_exception();
    }
    const std::size_t finished = ++done;
    if (shared.verbose) {
      const std::lock_guard lock(log_mutex);
      log << "[" << finished << "/" << entries.size() << "] " << entries[i].path.generic_string() << '\n';
    }
  });
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const Error& err) {
      throw Failure(kDecode, err.what());
    }
  }

  LabeledDataset ds;
  ds.class_names = a.classes;
  std::vector<std::size_t> per_class(a.classes.size(), 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    ds.features.push_row(rows[i]);
    ds.labels.push_back(entries[i].label);
    ds.paths.push_back(fs::relative(entries[i].path, a.root).generic_string());
    ++per_class[static_cast<std::size_t>(entries[i].label)];
  }
  write_file(a.out, [&](std::ostream& o) { write_feature_csv(o, ds, s.header_lines()); });
  for (std::size_t c = 0; c < a.classes.size(); ++c) {
    log << "  " << a.classes[c] << ": " << per_class[c] << '\n';
  }
  out << "extracted " << ds.size() << " clips into " << a.out.generic_string() << '\n';
  return kOk;
}

struct TrainArgs {
  fs::path features;
  fs::path out;
  std::optional<fs::path> report_dir;
  ModelOptions model;
  SplitSpec split;
};

int cmd_train(const Shared& shared, const TrainArgs& a, std::ostream& out, std::ostream& log) {
  const ClassifierSpec spec = a.model.resolve(shared.seed);
  SplitSpec split = a.split;
  split.seed = shared.seed;
  split.validate();
  Settings s;
  s.add("command", "train");
  s.add("features", a.features.generic_string());
  s.add("out", a.out.generic_string(), false);
  s.add("seed", shared.seed);
  s.add("test_fraction", split.test_fraction);
  s.add("stratified", split.stratified);
  describe_model(s, a.model.name, spec);
  s.print(log);

  const LabeledDataset ds = load_features(a.features);
  const auto [train_set, test_set] = train_test_split(ds, split);
  log << "train rows: " << train_set.size() << ", test rows: " << test_set.size() << '\n';
  const TrainedModel model = train(spec, train_set);
  save_model(model, a.out);
  const std::vector<int> predicted = predict_labels(model, test_set.features);
  const EvalReport report =
      make_report(a.model.name, confusion(test_set.labels, predicted, ds.n_classes(), ds.class_names));
  print_report(out, report);
  if (a.report_dir) write_reports(*a.report_dir, std::span(&report, 1), s.header_lines());
  return kOk;
}

struct EvaluateArgs {
  fs::path features;
  fs::path out_dir;
  std::vector<std::string> models = {"logistic", "tree", "lgbm", "xgboost", "forest", "svm"};
  SplitSpec split;
};

int cmd_evaluate(const Shared& shared, const EvaluateArgs& a, std::ostream& out, std::ostream& log) {
  SplitSpec split = a.split;
  split.seed = shared.seed;
  split.validate();
  std::vector<ClassifierSpec> specs;
  Settings s;
  s.add("command", "evaluate");
  s.add("features", a.features.generic_string());
  s.add("out_dir", a.out_dir.generic_string(), false);
  s.add("seed", shared.seed);
  s.add("test_fraction", split.test_fraction);
  s.add("stratified", split.stratified);
  s.add("models", join(a.models));
  for (const auto& name : a.models) {
    specs.push_back(classifier_preset(name, shared.seed));
    for (const auto& [key, value] : describe_hyperparams(specs.back().params)) s.add(name + "." + key, value);
  }
  s.add("jobs", shared.jobs, false);
  s.print(log);

  const LabeledDataset ds = load_features(a.features);
  const auto [train_set, test_set] = train_test_split(ds, split);
  std::vector<std::optional<EvalReport>> reports(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());
  parallel_for(specs.size(), shared.jobs, [&](std::size_t i) {
    try {
      reports[i] = evaluate_holdout(a.models[i], specs[i], train_set, test_set);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<EvalReport> done;
  for (auto& r : reports) done.push_back(std::move(*r));
  for (const auto& r : done) print_report(out, r);
  write_reports(a.out_dir, done, s.header_lines());
  out << "reports written to " << a.out_dir.generic_string() << '\n';
  return kOk;
}

struct CrossvalArgs {
  fs::path features;
  ModelOptions model;
  std::size_t folds = 10;
};

int cmd_crossval(const Shared& shared, const CrossvalArgs& a, std::ostream& out, std::ostream& log) {
  const ClassifierSpec spec = a.model.resolve(shared.seed);
  Settings s;
  s.add("command", "crossval");
  s.add("features", a.features.generic_string());
  s.add("seed", shared.seed);
  s.add("folds", a.folds);
  describe_model(s, a.model.name, spec);
  s.add("jobs", shared.jobs, false);
  s.print(log);

  const LabeledDataset ds = load_features(a.features);
  const CrossValResult cv = cross_validate(spec, ds, a.folds, shared.seed, {}, shared.jobs);
  for (std::size_t f = 0; f < cv.fold_accuracies.size(); ++f) {
    out << "fold " << (f + 1) << ": " << format_double(cv.fold_accuracies[f]) << '\n';
  }
  out << "mean accuracy: " << format_double(cv.mean) << " (stdev " << format_double(cv.stdev) << ")\n";
  return kOk;
}

struct PredictArgs {
  fs::path model;
  fs::path wav;
  ExtractionConfig config;
};

int cmd_predict(const Shared&, const PredictArgs& a, std::ostream& out, std::ostream& log) {
  a.config.validate();
  Settings s;
  s.add("command", "predict");
  s.add("model", a.model.generic_string());
  s.add("wav", a.wav.generic_string());
  describe_extraction(s, a.config);
  s.print(log);

  TrainedModel model;
  try {
    model = load_model(a.model);
  } catch (const Error& e) {
    throw Failure(e.code() == ErrorCode::IoFailure ? kUsage : kSchema, e.what());
  }
  const AudioClip clip = load_audio(a.wav);
  const auto features = FeatureExtractor(a.config).extract(clip).values();
  const Prediction p = predict(model, features);
  out << instrument_display_name(model.class_names[static_cast<std::size_t>(p.label)]) << '\n';
  for (std::size_t c = 0; c < p.scores.size(); ++c) {
    out << "  " << model.class_names[c] << ' ' << format_double(p.scores[c]) << '\n';
  }
  return kOk;
}

struct ClusterArgs {
  fs::path features;
  fs::path out_dir;
  std::string method = "hier";
  std::vector<std::string> classes;
  std::size_t k = 0;
  std::size_t cut = 30;
  std::string linkage = "ward";
  std::size_t n_init = 10;
  std::size_t max_iter = 300;
};

int cmd_cluster(const Shared& shared, const ClusterArgs& a, std::ostream& out, std::ostream& log) {
  LabeledDataset ds = load_features(a.features);
  if (!a.classes.empty()) {
    std::vector<std::size_t> keep;
    std::vector<int> remap(ds.n_classes(), -1);
    for (std::size_t c = 0; c < a.classes.size(); ++c) {
      const auto it = std::find(ds.class_names.begin(), ds.class_names.end(), a.classes[c]);
      if (it == ds.class_names.end()) throw Failure(kSchema, "class '" + a.classes[c] + "' is not in the dataset");
      remap[static_cast<std::size_t>(it - ds.class_names.begin())] = static_cast<int>(c);
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (remap[static_cast<std::size_t>(ds.labels[i])] >= 0) keep.push_back(i);
    }
    ds = ds.subset(keep);
    for (int& label : ds.labels) label = remap[static_cast<std::size_t>(label)];
    ds.class_names = a.classes;
  }
  const bool hierarchical = a.method == "hier";
  const std::size_t k = hierarchical ? a.cut : (a.k > 0 ? a.k : ds.n_classes());
  const Linkage linkage = parse_linkage(a.linkage);

  Settings s;
  s.add("command", "cluster");
  s.add("features", a.features.generic_string());
  s.add("out_dir", a.out_dir.generic_string(), false);
  s.add("method", a.method);
  s.add("classes", join(ds.class_names));
  if (hierarchical) {
    s.add("linkage", to_string(linkage));
    s.add("cut", a.cut);
  } else {
    s.add("seed", shared.seed);
    s.add("k", k);
    s.add("n_init", a.n_init);
    s.add("max_iter", a.max_iter);
  }
  s.print(log);

  const Matrix x = apply_scaler(fit_scaler(ds.features), ds.features);
  ClusterAssignment assignment;
  std::optional<Dendrogram> dendrogram;
  if (hierarchical) {
    dendrogram = agglomerate(x, linkage);
    assignment = cut_dendrogram(*dendrogram, k);
  } else {
    assignment = kmeans(x, KMeansParams{k, a.max_iter, a.n_init, shared.seed}).assignment;
  }

  fs::create_directories(a.out_dir);
  const auto header = s.header_lines();
  write_file(a.out_dir / "assignments.csv", [&](std::ostream& o) {
    for (const auto& line : header) o << "# " << line << '\n';
    o << "path,label,cluster\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
      o << csv_quote(ds.paths[i]) << ',' << csv_quote(ds.class_names[static_cast<std::size_t>(ds.labels[i])]) << ','
        << assignment.labels[i] << '\n';
    }
  });
  if (dendrogram) {
    write_file(a.out_dir / "dendrogram.csv", [&](std::ostream& o) {
      for (const auto& line : header) o << "# " << line << '\n';
      write_dendrogram_csv(o, *dendrogram);
    });
  }
  const std::set<int> nonempty(assignment.labels.begin(), assignment.labels.end());
  out << "clusters: " << nonempty.size() << '\n';
  out << "purity: " << format_double(cluster_purity(assignment.labels, ds.labels)) << '\n';
  if (!hierarchical) out << "inertia: " << format_double(assignment.inertia) << '\n';
  return kOk;
}

struct SpectrogramArgs {
  fs::path wav;
  fs::path out;
  FramePlan frame;
};

int cmd_spectrogram(const Shared&, const SpectrogramArgs& a, std::ostream& out, std::ostream& log) {
  a.frame.validate();
  Settings s;
  s.add("command", "spectrogram");
  s.add("wav", a.wav.generic_string());
  s.add("out", a.out.generic_string(), false);
  s.add("frame_size", a.frame.frame_size);
  s.add("hop_size", a.frame.hop_size);
  s.add("db_floor", 1e-10);
  s.print(log);

  const AudioClip clip = load_audio(a.wav);
  const render::GrayImage img = render::spectrogram_image(power_spectrogram(clip, a.frame));
  if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
  render::write_pgm(a.out, img);
  out << "wrote " << img.width << "x" << img.height << " image to " << a.out.generic_string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Instrument recognition from short audio clips"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "read options from a TOML/INI file; command-line flags win");

  Shared shared;
  app.add_option("--seed", shared.seed, "seed for every random choice");
  app.add_option("--jobs", shared.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", shared.verbose, "log per-item progress");

  ExtractArgs extract_args;
  auto* extract = app.add_subcommand("extract", "compute the feature CSV for a dataset folder");
  extract->add_option("--root", extract_args.root, "folder holding one sub-folder per class")->required();
  extract->add_option("--out", extract_args.out, "feature CSV to write")->required();
  extract->add_option("--classes", extract_args.classes, "class folder names, in label order")->delimiter(',');
  add_extraction_options(extract, extract_args.config);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "fit one model on a shuffled split and report on the held-out part");
  train_cmd->add_option("--features", train_args.features, "feature CSV")->required();
  train_cmd->add_option("--out", train_args.out, "model JSON to write")->required();
  train_cmd->add_option("--report-dir", train_args.report_dir, "also write report CSVs here");
  train_cmd->add_option("--test-fraction", train_args.split.test_fraction, "held-out share");
  train_cmd->add_flag("--stratified", train_args.split.stratified, "split each class separately");
  train_args.model.attach(train_cmd);

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "train every model on one split and write the report tables");
  evaluate->add_option("--features", eval_args.features, "feature CSV")->required();
  evaluate->add_option("--out-dir", eval_args.out_dir, "report folder")->required();
  evaluate->add_option("--models", eval_args.models, "model presets")
      ->delimiter(',')
      ->check(CLI::IsMember(classifier_preset_names()));
  evaluate->add_option("--test-fraction", eval_args.split.test_fraction, "held-out share");
  evaluate->add_flag("--stratified", eval_args.split.stratified, "split each class separately");

  CrossvalArgs cv_args;
  auto* crossval = app.add_subcommand("crossval", "k-fold cross-validated accuracy");
  crossval->add_option("--features", cv_args.features, "feature CSV")->required();
  crossval->add_option("--folds", cv_args.folds, "fold count");
  cv_args.model.attach(crossval);

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "classify one WAV file");
  predict_cmd->add_option("--model", predict_args.model, "model JSON")->required();
  predict_cmd->add_option("--wav", predict_args.wav, "audio clip")->required();
  add_extraction_options(predict_cmd, predict_args.config);

  ClusterArgs cluster_args;
  auto* cluster = app.add_subcommand("cluster", "k-means or hierarchical clustering of the features");
  cluster->add_option("--features", cluster_args.features, "feature CSV")->required();
  cluster->add_option("--out-dir", cluster_args.out_dir, "output folder")->required();
  cluster->add_option("--method", cluster_args.method, "kmeans or hier")->check(CLI::IsMember({"kmeans", "hier"}));
  cluster->add_option("--classes", cluster_args.classes, "only use these classes")->delimiter(',');
  cluster->add_option("--k", cluster_args.k, "k-means cluster count, 0 = class count");
  cluster->add_option("--cut", cluster_args.cut, "hierarchical flat cluster count");
  cluster->add_option("--linkage", cluster_args.linkage, "ward, average, complete or single")
      ->check(CLI::IsMember({"ward", "average", "complete", "single"}));
  cluster->add_option("--n-init", cluster_args.n_init, "k-means restarts");
  cluster->add_option("--max-iter", cluster_args.max_iter, "k-means iteration cap");

  SpectrogramArgs spec_args;
  auto* spectrogram = app.add_subcommand("spectrogram", "write a dB spectrogram as a PGM image");
  spectrogram->add_option("--wav", spec_args.wav, "audio clip")->required();
  spectrogram->add_option("--out", spec_args.out, "image to write")->required();
  spectrogram->add_option("--frame-size", spec_args.frame.frame_size, "STFT frame length");
  spectrogram->add_option("--hop-size", spec_args.frame.hop_size, "STFT hop");

  std::vector<const char*> argv{"instrec"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*extract) return cmd_extract(shared, extract_args, out, err);
    if (*train_cmd) return cmd_train(shared, train_args, out, err);
    if (*evaluate) return cmd_evaluate(shared, eval_args, out, err);
    if (*crossval) return cmd_crossval(shared, cv_args, out, err);
    if (*predict_cmd) return cmd_predict(shared, predict_args, out, err);
    if (*cluster) return cmd_cluster(shared, cluster_args, out, err);
    if (*spectrogram) return cmd_spectrogram(shared, spec_args, out, err);
  } catch (const Failure& f) {
    err << "error: " << f.what() << '\n';
    return f.code();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace instrec::cli
