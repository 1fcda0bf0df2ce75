#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "instrec/error.hpp"
#include "instrec/learn.hpp"

namespace instrec {

using nlohmann::json;

namespace {

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::CorruptModel, what); }

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) corrupt("matrix data has the wrong length");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data().begin());
  return m;
}

json tree_to_json(const DecisionTree& tree) {
  json nodes = json::array();
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) {
      nodes.push_back({{"value", node.value}});
    } else {
      nodes.push_back({{"feature", node.feature}, {"threshold", node.threshold},
                       {"left", node.left}, {"right", node.right}});
    }
  }
  return nodes;
}

DecisionTree tree_from_json(const json& j) {
  DecisionTree tree;
  for (const auto& jn : j) {
    TreeNode node;
    if (jn.contains("value")) {
      node.value = jn.at("value").get<std::vector<double>>();
    } else {
      node.feature = jn.at("feature").get<int>();
      node.threshold = jn.at("threshold").get<double>();
      node.left = jn.at("left").get<int>();
      node.right = jn.at("right").get<int>();
    }
    tree.nodes.push_back(std::move(node));
  }
  const auto count = static_cast<int>(tree.nodes.size());
  if (count == 0) corrupt("empty tree");
  for (int i = 0; i < count; ++i) {
    const auto& node = tree.nodes[static_cast<std::size_t>(i)];
    // children always follow their parent, which also rules out cycles
    if (!node.is_leaf() && (node.left <= i || node.right <= i || node.left >= count || node.right >= count)) {
      corrupt("tree node " + std::to_string(i) + " has invalid children");
    }
  }
  return tree;
}

json hyperparams_to_json(const Hyperparams& h) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LogisticParams>) {
          return {{"l2", p.l2}, {"learning_rate", p.learning_rate}, {"epochs", p.epochs}, {"tol", p.tol}};
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          return {{"max_depth", p.max_depth}, {"min_leaf", p.min_leaf}};
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          return {{"n_trees", p.n_trees}, {"max_depth", p.max_depth}, {"min_leaf", p.min_leaf},
                  {"features_per_split", p.features_per_split}, {"bootstrap", p.bootstrap}};
        } else if constexpr (std::is_same_v<P, BoostedParams>) {
          return {{"n_rounds", p.n_rounds}, {"learning_rate", p.learning_rate},
                  {"tree_depth", p.tree_depth}, {"min_leaf", p.min_leaf}};
        } else {
          json j = {{"c", p.c}, {"tol", p.tol}, {"max_passes", p.max_passes}};
          j["gamma"] = p.gamma ? json(*p.gamma) : json("scale");
          return j;
        }
      },
      h);
}

Hyperparams hyperparams_from_json(ClassifierKind kind, const json& j) {
  switch (kind) {
    case ClassifierKind::logistic:
      return LogisticParams{j.at("l2").get<double>(), j.at("learning_rate").get<double>(),
                            j.at("epochs").get<std::size_t>(), j.at("tol").get<double>()};
    case ClassifierKind::tree:
      return TreeParams{j.at("max_depth").get<std::size_t>(), j.at("min_leaf").get<std::size_t>()};
    case ClassifierKind::forest:
      return ForestParams{j.at("n_trees").get<std::size_t>(), j.at("max_depth").get<std::size_t>(),
                          j.at("min_leaf").get<std::size_t>(), j.at("features_per_split").get<std::size_t>(),
                          j.at("bootstrap").get<bool>()};
    case ClassifierKind::boosted:
      return BoostedParams{j.at("n_rounds").get<std::size_t>(), j.at("learning_rate").get<double>(),
                           j.at("tree_depth").get<std::size_t>(), j.at("min_leaf").get<std::size_t>()};
    case ClassifierKind::svm_rbf: {
      SvmParams p{j.at("c").get<double>(), std::nullopt, j.at("tol").get<double>(),
                  j.at("max_passes").get<std::size_t>()};
      if (j.at("gamma").is_number()) p.gamma = j.at("gamma").get<double>();
      return p;
    }
  }
  corrupt("unknown kind");
}

json params_to_json(const ModelParams& params) {
  return std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LogisticModel>) {
          return {{"weights", matrix_to_json(m.weights)}, {"bias", m.bias}};
        } else if constexpr (std::is_same_v<M, TreeModel>) {
          return {{"tree", tree_to_json(m.tree)}};
        } else if constexpr (std::is_same_v<M, ForestModel>) {
          json trees = json::array();
          for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
          return {{"trees", trees}};
        } else if constexpr (std::is_same_v<M, BoostedModel>) {
          json rounds = json::array();
          for (const auto& round : m.rounds) {
            json per_class = json::array();
            for (const auto& t : round) per_class.push_back(tree_to_json(t));
            rounds.push_back(per_class);
          }
          return {{"initial_scores", m.initial_scores}, {"learning_rate", m.learning_rate}, {"rounds", rounds}};
        } else {
          json machines = json::array();
          for (const auto& bm : m.machines) {
            machines.push_back({{"positive_class", bm.positive_class},
                                {"negative_class", bm.negative_class},
                                {"support_vectors", matrix_to_json(bm.support_vectors)},
                                {"coefficients", bm.coefficients},
                                {"bias", bm.bias}});
          }
          return {{"gamma", m.gamma}, {"c", m.c}, {"machines", machines}};
        }
      },
      params);
}

ModelParams params_from_json(ClassifierKind kind, const json& j, std::size_t k, std::size_t d) {
  auto check_tree = [&](const DecisionTree& tree, std::size_t value_size) {
    for (const auto& node : tree.nodes) {
      if (node.is_leaf() ? node.value.size() != value_size : static_cast<std::size_t>(node.feature) >= d) {
        corrupt("tree does not match the model dimensions");
      }
    }
  };
  switch (kind) {
    case ClassifierKind::logistic: {
      LogisticModel m{matrix_from_json(j.at("weights")), j.at("bias").get<std::vector<double>>()};
      if (m.weights.rows() != k || m.weights.cols() != d || m.bias.size() != k) corrupt("weight shape");
      return m;
    }
    case ClassifierKind::tree: {
      TreeModel m{tree_from_json(j.at("tree"))};
      check_tree(m.tree, k);
      return m;
    }
    case ClassifierKind::forest: {
      ForestModel m;
      for (const auto& jt : j.at("trees")) {
        m.trees.push_back(tree_from_json(jt));
        check_tree(m.trees.back(), k);
      }
      if (m.trees.empty()) corrupt("forest has no trees");
      return m;
    }
    case ClassifierKind::boosted: {
      BoostedModel m;
      m.initial_scores = j.at("initial_scores").get<std::vector<double>>();
      m.learning_rate = j.at("learning_rate").get<double>();
      if (m.initial_scores.size() != k) corrupt("initial score count");
      for (const auto& jr : j.at("rounds")) {
        std::vector<DecisionTree> round;
        for (const auto& jt : jr) {
          round.push_back(tree_from_json(jt));
          check_tree(round.back(), 1);
        }
        if (round.size() != k) corrupt("boosting round has the wrong tree count");
        m.rounds.push_back(std::move(round));
      }
      return m;
    }
    case ClassifierKind::svm_rbf: {
      SvmModel m;
      m.gamma = j.at("gamma").get<double>();
      m.c = j.at("c").get<double>();
      for (const auto& jm : j.at("machines")) {
        BinarySvm bm;
        bm.positive_class = jm.at("positive_class").get<int>();
        bm.negative_class = jm.at("negative_class").get<int>();
        bm.support_vectors = matrix_from_json(jm.at("support_vectors"));
        bm.coefficients = jm.at("coefficients").get<std::vector<double>>();
        bm.bias = jm.at("bias").get<double>();
        const auto in_range = [&](int c) { return c >= 0 && static_cast<std::size_t>(c) < k; };
        if (!in_range(bm.positive_class) || !in_range(bm.negative_class) ||
            bm.coefficients.size() != bm.support_vectors.rows() || bm.support_vectors.cols() != d) {
          corrupt("support vector machine does not match the model dimensions");
        }
        m.machines.push_back(std::move(bm));
      }
      return m;
    }
  }
  corrupt("unknown kind");
}

json model_body(const TrainedModel& model) {
  json meta = {{"seed", model.meta.seed},
               {"hyperparams", hyperparams_to_json(model.meta.hyperparams)},
               {"dataset_sha", model.meta.dataset_sha}};
  return {{"schema_version", kModelSchemaVersion},
          {"kind", std::string(to_string(model.kind()))},
          {"class_names", model.class_names},
          {"scaler", {{"means", model.scaler.means}, {"stdevs", model.scaler.stdevs}}},
          {"params", params_to_json(model.params)},
          {"meta", meta}};
}

}  // namespace

std::vector<std::pair<std::string, std::string>> describe_hyperparams(const Hyperparams& params) {
  std::vector<std::pair<std::string, std::string>> out;
  const json j = hyperparams_to_json(params);
  for (const auto& item : j.items()) {
    const json& v = item.value();
    out.emplace_back(item.key(), v.is_string() ? v.get<std::string>() : v.dump());
  }
  return out;
}

std::string model_to_json(const TrainedModel& model) {
  json doc = model_body(model);
  doc["checksum"] = sha256_hex(doc.dump());
  return doc.dump(1) + "\n";
}

TrainedModel model_from_json(std::string_view text) {
  json doc = json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) corrupt("model file is not valid JSON");
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer()) {
    corrupt("missing schema_version");
  }
  const int version = doc["schema_version"].get<int>();
  if (version != kModelSchemaVersion) {
    throw Error(ErrorCode::SchemaVersionMismatch, "model schema version " + std::to_string(version) +
                                                      ", expected " + std::to_string(kModelSchemaVersion));
  }
  if (!doc.contains("checksum") || !doc["checksum"].is_string()) corrupt("missing checksum");
  const std::string stored = doc["checksum"].get<std::string>();
  doc.erase("checksum");
  if (sha256_hex(doc.dump()) != stored) corrupt("checksum mismatch");

  try {
    TrainedModel model;
    const ClassifierKind kind = parse_classifier_kind(doc.at("kind").get<std::string>());
    model.class_names = doc.at("class_names").get<std::vector<std::string>>();
    model.scaler.means = doc.at("scaler").at("means").get<std::vector<double>>();
    model.scaler.stdevs = doc.at("scaler").at("stdevs").get<std::vector<double>>();
    if (model.scaler.stdevs.size() != model.scaler.means.size()) corrupt("scaler shape");
    model.params = params_from_json(kind, doc.at("params"), model.n_classes(), model.n_features());
    const json& meta = doc.at("meta");
    model.meta.seed = meta.at("seed").get<std::uint64_t>();
    model.meta.hyperparams = hyperparams_from_json(kind, meta.at("hyperparams"));
    model.meta.dataset_sha = meta.at("dataset_sha").get<std::string>();
    return model;
  } catch (const json::exception& e) {
    corrupt(std::string("malformed model: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptModel) throw;
    corrupt(e.detail());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  const std::string text = model_to_json(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace instrec
