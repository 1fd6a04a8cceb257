#include "propdetect/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "propdetect/errors.hpp"
#include "propdetect/parallel.hpp"

namespace propdetect {
namespace {

using nlohmann::json;

void check_hyperparameters(double gamma, double C) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be positive");
  if (!(C > 0.0) || !std::isfinite(C)) throw ValidationError("C must be positive");
}

std::vector<double> box_bounds(std::span<const int> targets, double C, bool balanced) {
  std::vector<double> c(targets.size(), C);
  if (!balanced) return c;
  std::size_t pos = 0;
  for (int t : targets) pos += t > 0;
  const std::size_t neg = targets.size() - pos;
  const double n = static_cast<double>(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double count = static_cast<double>(targets[i] > 0 ? pos : neg);
    c[i] = C * n / (2.0 * count);
  }
  return c;
}

BinarySvm train_machine(const Matrix& x, std::span<const int> targets, double gamma, double C,
                        const TrainOptions& options) {
  const auto c = box_bounds(targets, C, options.balanced);
  return solve_smo(x, targets, c, gamma, options.smo).machine;
}

json machine_to_json(const BinarySvm& m, int cls) {
  json svs = json::array();
  for (std::size_t i = 0; i < m.support_vectors.rows(); ++i) {
    const auto row = m.support_vectors.row(i);
    svs.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"class", cls}, {"bias", m.bias}, {"coef", m.coef}, {"support_vectors", svs}};
}

BinarySvm machine_from_json(const json& j, std::size_t n_features) {
  BinarySvm m;
  m.bias = j.at("bias").get<double>();
  m.coef = j.at("coef").get<std::vector<double>>();
  for (const auto& sv : j.at("support_vectors")) {
    const auto row = sv.get<std::vector<double>>();
    if (row.size() != n_features) throw ValidationError("support vector has the wrong dimension");
    m.support_vectors.append_row(row);
  }
  if (m.support_vectors.rows() != m.coef.size()) {
    throw ValidationError("support vectors and coefficients differ in count");
  }
  return m;
}

AblationRow score_row(std::string name, const AggregateMetrics& m) {
  AblationRow row;
  row.dropped = std::move(name);
  row.precision = m.precision;
  row.recall = m.recall;
  row.f1 = m.f1;
  return row;
}

}  // namespace

std::string_view to_string(TaskMode mode) {
  return mode == TaskMode::Binary ? "binary" : "multiclass";
}

TaskMode parse_mode(std::string_view text) {
  if (text == "binary") return TaskMode::Binary;
  if (text == "multiclass") return TaskMode::Multiclass;
  throw ValidationError("unknown mode '" + std::string(text) + "' (binary|multiclass)");
}

std::vector<int> to_binary(std::span<const TechniqueLabel> labels) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (auto l : labels) out.push_back(is_propaganda(l) ? 1 : 0);
  return out;
}

TrainedModel train_svm(const Matrix& x, std::span<const int> y, double gamma, double C,
                       const TrainOptions& options) {
  check_hyperparameters(gamma, C);
  if (x.rows() != y.size()) {
    throw ValidationError("training data has " + std::to_string(x.rows()) + " rows but " +
                          std::to_string(y.size()) + " labels");
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw ValidationError("training data contains non-finite values");
  }
  const std::set<int> distinct(y.begin(), y.end());
  if (distinct.size() < 2) throw ValidationError("training labels hold fewer than two classes");

  TrainedModel model;
  model.gamma = gamma;
  model.C = C;
  model.classes.assign(distinct.begin(), distinct.end());
  model.n_features = x.cols();
  model.mode = model.classes.size() == 2 ? TaskMode::Binary : TaskMode::Multiclass;

  std::vector<int> targets(y.size());
  if (model.classes.size() == 2) {
    for (std::size_t i = 0; i < y.size(); ++i) targets[i] = y[i] == model.classes[1] ? 1 : -1;
    model.machines.push_back(train_machine(x, targets, gamma, C, options));
    return model;
  }
  for (int cls : model.classes) {
    for (std::size_t i = 0; i < y.size(); ++i) targets[i] = y[i] == cls ? 1 : -1;
    model.machines.push_back(train_machine(x, targets, gamma, C, options));
  }
  return model;
}

std::vector<Prediction> predict(const TrainedModel& model, const Matrix& x) {
  if (x.cols() != model.n_features) {
    throw ValidationError("model expects " + std::to_string(model.n_features) +
                          " feature columns, got " + std::to_string(x.cols()));
  }
  const bool binary = model.machines.size() == 1 && model.classes.size() == 2;
  if (!binary && model.machines.size() != model.classes.size()) {
    throw StateError("model has " + std::to_string(model.machines.size()) + " machines for " +
                     std::to_string(model.classes.size()) + " classes");
  }
  std::vector<Prediction> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto& p = out[r];
    const auto row = x.row(r);
    if (binary) {
      const double f = model.machines[0].decision(row, model.gamma);
      p.scores = {-f, f};
    } else {
      for (const auto& m : model.machines) p.scores.push_back(m.decision(row, model.gamma));
    }
    // max_element returns the first maximum, so ties go to the earlier class.
    const auto best = std::max_element(p.scores.begin(), p.scores.end()) - p.scores.begin();
    p.label = model.classes[static_cast<std::size_t>(best)];
  }
  return out;
}

std::vector<int> task_targets(std::span<const TechniqueLabel> labels, TaskMode mode) {
  return mode == TaskMode::Binary ? to_binary(labels) : label_ids(labels);
}

TrainedModel fit_model(const FeatureTable& train, TaskMode mode, double gamma, double C,
                       const TrainOptions& options, std::uint64_t seed) {
  if (train.rows() == 0) throw ValidationError("training table is empty");
  const auto labels = train.labels();
  const auto y = task_targets(labels, mode);
  auto standardizer = Standardizer::fit(train.values);
  auto model = train_svm(standardizer.transform(train.values), y, gamma, C, options);
  model.mode = mode;
  model.standardizer = std::move(standardizer);
  model.schema = train.schema;
  model.seed = seed;
  return model;
}

std::vector<Prediction> predict(const TrainedModel& model, const FeatureTable& table) {
  if (table.schema.fingerprint() != model.schema.fingerprint()) {
    throw ValidationError("feature schema " + table.schema.fingerprint() +
                          " does not match the model's " + model.schema.fingerprint());
  }
  if (!model.standardizer.fitted()) return predict(model, table.values);
  return predict(model, model.standardizer.transform(table.values));
}

std::vector<int> predicted_labels(std::span<const Prediction> predictions) {
  std::vector<int> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) out.push_back(p.label);
  return out;
}

AggregateMetrics task_scores(std::span<const int> y_true, std::span<const int> y_pred,
                             TaskMode mode) {
  if (mode == TaskMode::Binary) {
    const auto m = prf(y_true, y_pred, 1);
    return {m.precision, m.recall, m.f1, m.support};
  }
  std::vector<ClassMetrics> rows;
  for (int c = 0; c < static_cast<int>(kNumLabels); ++c) rows.push_back(prf(y_true, y_pred, c));
  return weighted_average(rows);
}

std::string TrainedModel::to_json() const {
  json machines_json = json::array();
  const bool binary = machines.size() == 1 && classes.size() == 2;
  for (std::size_t k = 0; k < machines.size(); ++k) {
    machines_json.push_back(machine_to_json(machines[k], binary ? classes[1] : classes[k]));
  }
  json root{{"version", kVersion},
            {"mode", std::string(propdetect::to_string(mode))},
            {"gamma", gamma},
            {"C", C},
            {"seed", seed},
            {"n_features", n_features},
            {"classes", classes},
            {"machines", machines_json}};
  if (standardizer.fitted()) {
    root["standardizer"] = {{"mean", standardizer.mean()}, {"stddev", standardizer.stddev()}};
  } else {
    root["standardizer"] = nullptr;
  }
  root["schema"] = json::parse(schema.to_json());
  root["schema_fingerprint"] = schema.fingerprint();
  return root.dump(1) + "\n";
}

TrainedModel TrainedModel::from_json(std::string_view text) {
  try {
    const auto root = json::parse(text);
    const int version = root.at("version").get<int>();
    if (version != kVersion) {
      throw ValidationError("unsupported model version " + std::to_string(version));
    }
    TrainedModel m;
    m.mode = parse_mode(root.at("mode").get<std::string>());
    m.gamma = root.at("gamma").get<double>();
    m.C = root.at("C").get<double>();
    check_hyperparameters(m.gamma, m.C);
    m.seed = root.at("seed").get<std::uint64_t>();
    m.n_features = root.at("n_features").get<std::size_t>();
    m.classes = root.at("classes").get<std::vector<int>>();
    for (const auto& mj : root.at("machines")) {
      m.machines.push_back(machine_from_json(mj, m.n_features));
    }
    const bool binary = m.machines.size() == 1 && m.classes.size() == 2;
    if (!binary && m.machines.size() != m.classes.size()) {
      throw ValidationError("model machines do not match its classes");
    }
    if (const auto& s = root.at("standardizer"); !s.is_null()) {
      m.standardizer = Standardizer(s.at("mean").get<std::vector<double>>(),
                                    s.at("stddev").get<std::vector<double>>());
    }
    m.schema = FeatureSchema::from_json(root.at("schema").dump());
    if (m.schema.fingerprint() != root.at("schema_fingerprint").get<std::string>()) {
      throw ValidationError("model schema does not match its recorded fingerprint");
    }
    if (m.schema.size() != 0 && m.schema.size() != m.n_features) {
      throw ValidationError("model schema width does not match n_features");
    }
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad model JSON: ") + e.what());
  }
}

Grid Grid::from_json(std::string_view text) {
  Grid g;
  try {
    const auto root = json::parse(text);
    g.gammas = root.at("gamma").get<std::vector<double>>();
    g.Cs = root.at("C").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad grid JSON: ") + e.what());
  }
  if (g.gammas.empty() || g.Cs.empty()) throw ValidationError("hyperparameter grid is empty");
  for (double v : g.gammas) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("grid gamma must be positive");
  }
  for (double v : g.Cs) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("grid C must be positive");
  }
  return g;
}

GridResult grid_search(const FeatureTable& train, const FeatureTable& dev,
                       const ExperimentConfig& config) {
  if (config.grid.gammas.empty() || config.grid.Cs.empty()) {
    throw ValidationError("hyperparameter grid is empty");
  }
  if (dev.rows() == 0) throw ValidationError("dev table is empty");
  std::vector<double> gammas = config.grid.gammas;
  std::vector<double> Cs = config.grid.Cs;
  std::sort(gammas.begin(), gammas.end());
  gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());
  std::sort(Cs.begin(), Cs.end());
  Cs.erase(std::unique(Cs.begin(), Cs.end()), Cs.end());

  GridResult result;
  for (double C : Cs) {
    for (double g : gammas) {
      check_hyperparameters(g, C);
      result.table.push_back({g, C, {}});
    }
  }
  const auto y_dev = task_targets(dev.labels(), config.mode);
  TrainOptions options;
  options.balanced = config.balanced;
  std::vector<TrainedModel> models(result.table.size());
  parallel_for(result.table.size(), config.workers, [&](std::size_t k) {
    auto& point = result.table[k];
    models[k] = fit_model(train, config.mode, point.gamma, point.C, options, config.seed);
    point.dev = task_scores(y_dev, predicted_labels(predict(models[k], dev)), config.mode);
  });

  std::size_t best = 0;
  for (std::size_t k = 1; k < result.table.size(); ++k) {
    if (result.table[k].dev.f1 > result.table[best].dev.f1) best = k;
  }
  result.gamma = result.table[best].gamma;
  result.C = result.table[best].C;
  result.model = std::move(models[best]);
  return result;
}

double best_threshold(std::span<const double> scores, std::span<const int> y) {
  if (scores.size() != y.size() || scores.empty()) {
    throw ValidationError("threshold search needs equal, non-empty inputs");
  }
  std::vector<double> candidates(scores.begin(), scores.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  double best_t = candidates.front();
  double best_f1 = -1.0;
  std::vector<int> pred(y.size());
  for (double t : candidates) {
    for (std::size_t i = 0; i < y.size(); ++i) pred[i] = scores[i] >= t ? 1 : 0;
    const double f1 = prf(y, pred, 1).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return best_t;
}

std::vector<AblationRow> run_ablation(const FeatureTable& train, const FeatureTable& dev,
                                      const FeatureTable& eval, const ExperimentConfig& config,
                                      std::span<const FeatureGroup> drops) {
  for (auto g : drops) {
    if (!train.schema.has_group(g)) {
      throw ValidationError("cannot drop group '" + std::string(to_string(g)) +
                            "': not in the feature schema");
    }
  }
  const auto y_eval = task_targets(eval.labels(), config.mode);

  // Each row trains on its own; grid points inside a row run serially.
  ExperimentConfig inner = config;
  inner.workers = 1;
  std::vector<AblationRow> rows(drops.size() + 1);
  parallel_for(rows.size(), config.workers, [&](std::size_t k) {
    if (k == 0) {
      const auto gs = grid_search(train, dev, inner);
      const auto pred = predicted_labels(predict(gs.model, eval));
      rows[0] = score_row("none", task_scores(y_eval, pred, config.mode));
      rows[0].gamma = gs.gamma;
      rows[0].C = gs.C;
      return;
    }
    const FeatureGroup g = drops[k - 1];
    if (g == FeatureGroup::Sent && config.mode == TaskMode::Binary && config.sent_doc_rule) {
      const auto doc = train.schema.index_of("doc");
      if (!doc) throw ValidationError("the sent ablation row needs the doc feature");
      const double t = best_threshold(dev.values.column(*doc), to_binary(dev.labels()));
      const auto scores = eval.values.column(*doc);
      std::vector<int> pred(scores.size());
      for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= t ? 1 : 0;
      rows[k] = score_row(std::string(to_string(g)), task_scores(y_eval, pred, config.mode));
      rows[k].doc_threshold = t;
      return;
    }
    const auto tr = drop_group(train, g);
    const auto gs = grid_search(tr, drop_group(dev, g), inner);
    const auto pred = predicted_labels(predict(gs.model, drop_group(eval, g)));
    rows[k] = score_row(std::string(to_string(g)), task_scores(y_eval, pred, config.mode));
    rows[k].gamma = gs.gamma;
    rows[k].C = gs.C;
  });
  return rows;
}

}  // namespace propdetect
