#include "propdetect/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "propdetect/analysis.hpp"
#include "propdetect/corpus.hpp"
#include "propdetect/errors.hpp"
#include "propdetect/eval.hpp"
#include "propdetect/explain.hpp"
#include "propdetect/features.hpp"
#include "propdetect/model.hpp"
#include "propdetect/providers.hpp"
#include "propdetect/util.hpp"

namespace propdetect {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 13;
constexpr std::string_view kDefaultGroups = "rp,sim,stn,dp,sent,doc";
constexpr std::string_view kDefaultDrops = "rp,sim,stn,dp,sent";

struct Shared {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned workers = 1;
};

struct Options {
  Shared shared;
  std::string articles;
  std::string spans;
  std::string splits;
  std::string sentences;
  std::string groups;
  std::string features;
  std::string mode;
  std::string grid;
  std::string model;
  std::string covariance;
  std::string split;
  std::string on;
  std::string drop;
  std::string format = "json";
  std::size_t topk = 5;
  std::string ids;
};

std::string digest(const fs::path& path) {
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) return hex64(fnv1a64(read_file(path)));
  if (!fs::is_directory(path, ec)) throw IoError("no such file or directory: " + path.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = kFnvOffset;
  for (const auto& f : files) {
    h = fnv1a64(fs::relative(f, path).generic_string(), h);
    h = fnv1a64(std::string_view("\0", 1), h);
    h = fnv1a64(read_file(f), h);
  }
  return hex64(h);
}

// One stage run: resolved configuration, recorded inputs and the files written.
class Run {
 public:
  Run(std::string command, const Shared& shared) : command_(std::move(command)) {
    if (!shared.config.empty()) {
      const fs::path path(shared.config);
      try {
        config_ = json::parse(read_file(path));
      } catch (const json::exception& e) {
        throw ValidationError("bad config " + path.string() + ": " + e.what());
      }
      if (!config_.is_object()) throw ValidationError("config must be a JSON object");
      config_dir_ = path.parent_path();
      input("config", path);
    } else {
      config_ = json::object();
    }
    if (shared.seed) {
      seed_ = *shared.seed;
    } else if (config_.contains("seed")) {
      seed_ = config_.at("seed").get<std::uint64_t>();
    }
    if (shared.out.empty()) throw ValidationError("--out is required");
    out_ = shared.out;
    workers_ = std::max(1u, shared.workers);
    settings_["workers"] = workers_;
  }

  std::uint64_t seed() const { return seed_; }
  unsigned workers() const { return workers_; }
  const json& config() const { return config_; }

  /// Flag value, else the config entry `key` resolved against the config's directory.
  std::string path_option(const std::string& flag, const char* key) const {
    if (!flag.empty()) return flag;
    if (config_.contains(key) && config_.at(key).is_string()) {
      fs::path p = config_.at(key).get<std::string>();
      if (p.is_relative() && !config_dir_.empty()) p = config_dir_ / p;
      return p.string();
    }
    return {};
  }

  /// Required input path; records its digest in the manifest.
  fs::path require(const std::string& value, const char* flag) {
    if (value.empty()) throw ValidationError(std::string("--") + flag + " is required");
    const fs::path p(value);
    std::error_code ec;
    if (!fs::exists(p, ec)) throw IoError(std::string("--") + flag + ": no such path " + value);
    input(flag, p);
    return p;
  }

  std::string experiment_string(const std::string& flag, const char* key,
                                std::string_view fallback) const {
    if (!flag.empty()) return flag;
    if (const auto* e = experiment(); e && e->contains(key) && e->at(key).is_string()) {
      return e->at(key).get<std::string>();
    }
    return std::string(fallback);
  }

  bool experiment_flag(const char* key, bool fallback) const {
    if (const auto* e = experiment(); e && e->contains(key)) return e->at(key).get<bool>();
    return fallback;
  }

  Grid grid(const std::string& flag) {
    if (!flag.empty() && flag != "default") {
      const fs::path p(flag);
      input("grid", p);
      auto g = Grid::from_json(read_file(p));
      setting("grid", json{{"gamma", g.gammas}, {"C", g.Cs}});
      return g;
    }
    Grid g;
    if (const auto* e = experiment(); flag.empty() && e && e->contains("grid")) {
      g = Grid::from_json(e->at("grid").dump());
    }
    setting("grid", json{{"gamma", g.gammas}, {"C", g.Cs}});
    return g;
  }

  ProviderConfig providers() {
    ProviderConfig pc = config_.contains("providers")
                            ? provider_config_from_json(config_.at("providers").dump())
                            : ProviderConfig{};
    apply_environment(pc);
    return pc;
  }

  void record_providers(const ProviderConfig& pc) {
    static const char* kBackends[] = {"reference", "subprocess", "http"};
    setting("providers", json{{"backend", kBackends[static_cast<int>(pc.backend)]},
                              {"endpoint", pc.endpoint},
                              {"dimension", pc.dimension},
                              {"timeout_ms", pc.timeout_ms}});
  }

  void setting(const std::string& key, json value) { settings_[key] = std::move(value); }

  void write(const std::string& name, std::string_view contents) {
    write_file(out_ / name, contents);
    outputs_.push_back(name);
  }

  void finish() {
    json manifest{{"command", command_},
                  {"seed", seed_},
                  {"settings", settings_},
                  {"inputs", inputs_},
                  {"outputs", outputs_}};
    write_file(out_ / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  const json* experiment() const {
    if (config_.contains("experiment") && config_.at("experiment").is_object()) {
      return &config_.at("experiment");
    }
    return nullptr;
  }

  void input(const std::string& name, const fs::path& p) {
    inputs_[name] = {{"path", p.generic_string()}, {"digest", digest(p)}};
  }

  std::string command_;
  json config_;
  fs::path config_dir_;
  std::uint64_t seed_ = kDefaultSeed;
  fs::path out_;
  unsigned workers_ = 1;
  json settings_ = json::object();
  json inputs_ = json::object();
  std::vector<std::string> outputs_;
};

// A features directory holds features.csv and schema.json; a path to the CSV also works.
FeatureTable load_features(Run& run, const std::string& value) {
  const auto p = run.require(value, "features");
  const fs::path csv = fs::is_directory(p) ? p / "features.csv" : p;
  const fs::path schema_path = csv.parent_path() / "schema.json";
  if (!fs::exists(csv)) throw IoError("missing " + csv.string());
  if (!fs::exists(schema_path)) throw IoError("missing " + schema_path.string());
  const auto schema = FeatureSchema::from_json(read_file(schema_path));
  return FeatureTable::from_csv(read_file(csv), schema);
}

fs::path in_dir_or_file(const fs::path& p, const char* name) {
  return fs::is_directory(p) ? p / name : p;
}

std::vector<Split> parse_splits(std::string_view list) {
  std::vector<Split> out;
  for (auto part : split(list, ',')) {
    const auto s = parse_split(trim(part));
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  if (out.empty()) throw ValidationError("empty split list");
  return out;
}

FeatureTable require_rows(FeatureTable table, std::string_view what) {
  if (table.rows() == 0) throw ValidationError("no feature rows in the " + std::string(what) + " split");
  return table;
}

FeatureTable part(const FeatureTable& table, Split s) {
  const Split one[] = {s};
  return require_rows(table.select(one), to_string(s));
}

std::vector<SentenceRecord> records_of(const FeatureTable& table) {
  std::vector<SentenceRecord> out;
  for (const auto& k : table.keys) out.push_back({k.article_id, k.index, k.n, "", k.label, k.split});
  return out;
}

std::string pct(double v) { return format_fixed(100.0 * v, 2); }

void cmd_prepare(const Options& o) {
  Run run("prepare", o.shared);
  const auto articles_dir = run.require(run.path_option(o.articles, "articles"), "articles");
  const auto spans_path = run.require(run.path_option(o.spans, "spans"), "spans");
  const auto splits_value = run.path_option(o.splits, "splits");

  const auto articles = load_articles(articles_dir);
  const auto spans = load_spans(spans_path);
  auto records = project_corpus(articles, spans, run.seed());

  json split_counts = json::object();
  if (!splits_value.empty()) {
    const auto spec = load_split_spec(run.require(splits_value, "splits"));
    const auto parts = split_dataset(records, spec);
    for (auto s : {Split::Train, Split::Dev, Split::Test}) {
      split_counts[std::string(to_string(s))] = parts.part(s).size();
    }
    for (auto& r : records) r.split = spec.at(r.article_id);
  }

  const auto stats = corpus_stats(records);
  json per_label = json::object();
  for (auto label : all_labels()) {
    per_label[std::string(to_string(label))] = stats.per_label[label_index(label)];
  }
  json stats_json{{"articles", stats.articles},
                  {"sentences", stats.total},
                  {"propaganda", stats.propaganda},
                  {"per_label", per_label},
                  {"behavior",
                   {{"first5", stats.behavior.first5},
                    {"first3", stats.behavior.first3},
                    {"title", stats.behavior.title}}},
                  {"splits", split_counts}};
  run.write("sentences.jsonl", records_to_jsonl(records));
  run.write("sentences.tsv", records_to_tsv(records));
  run.write("stats.json", stats_json.dump(2) + "\n");
  run.finish();
}

void cmd_features(const Options& o) {
  Run run("features", o.shared);
  const auto sentences =
      in_dir_or_file(run.require(run.path_option(o.sentences, "sentences"), "sentences"),
                     "sentences.jsonl");
  const auto articles_dir = run.require(run.path_option(o.articles, "articles"), "articles");
  const auto groups = parse_groups(run.experiment_string(o.groups, "groups", kDefaultGroups));

  auto pc = run.providers();
  run.record_providers(pc);
  const auto schema = FeatureSchema::make(groups, pc.dimension);
  std::string group_list;
  for (auto g : kAllGroups) {
    if (schema.has_group(g)) group_list += (group_list.empty() ? "" : ",") + std::string(to_string(g));
  }
  run.setting("groups", group_list);

  const auto records = records_from_jsonl(read_file(sentences));
  const auto articles = load_articles(articles_dir);
  auto providers = make_providers(pc);
  const auto table = assemble_table(articles, records, providers, schema, run.workers());
  run.write("features.csv", table.to_csv());
  run.write("schema.json", schema.to_json());
  run.finish();
}

void cmd_covariance(const Options& o) {
  Run run("covariance", o.shared);
  const auto table = load_features(run, run.path_option(o.features, "features"));
  const std::string on = o.on.empty() ? "train,dev" : o.on;
  run.setting("on", on);
  FeatureTable rows = table;
  if (on != "all") {
    const auto splits = parse_splits(on);
    rows = require_rows(table.select(splits), on);
  }
  const auto cm = covariance_matrix(rows);
  run.write("covariance.csv", heatmap_csv(cm));
  run.write("covariance.svg", heatmap_svg(cm));
  run.write("covariance.json", cm.to_json());
  const auto b = behavior_stats(records_of(rows));
  run.write("behavior.json",
            json{{"first5", b.first5}, {"first3", b.first3}, {"title", b.title}}.dump(2) + "\n");
  run.finish();
}

ExperimentConfig experiment_config(Run& run, const Options& o) {
  ExperimentConfig config;
  config.mode = parse_mode(run.experiment_string(o.mode, "mode", "binary"));
  config.seed = run.seed();
  config.grid = run.grid(o.grid);
  config.balanced = run.experiment_flag("balanced", false);
  config.sent_doc_rule = run.experiment_flag("sent_doc_rule", true);
  config.workers = run.workers();
  run.setting("mode", std::string(to_string(config.mode)));
  run.setting("balanced", config.balanced);
  return config;
}

void cmd_train(const Options& o) {
  Run run("train", o.shared);
  const auto config = experiment_config(run, o);
  const auto table = load_features(run, run.path_option(o.features, "features"));
  const auto result = grid_search(part(table, Split::Train), part(table, Split::Dev), config);

  std::string csv = "gamma,C,precision,recall,f1,selected\n";
  std::vector<ScoreRow> rows;
  for (const auto& p : result.table) {
    const bool selected = p.gamma == result.gamma && p.C == result.C;
    csv += format_double(p.gamma) + "," + format_double(p.C) + "," + pct(p.dev.precision) + "," +
           pct(p.dev.recall) + "," + pct(p.dev.f1) + "," + (selected ? "1" : "0") + "\n";
    rows.push_back({"gamma=" + format_double(p.gamma) + " C=" + format_double(p.C) +
                        (selected ? " *" : ""),
                    p.dev.precision, p.dev.recall, p.dev.f1});
  }
  run.write("model.json", result.model.to_json());
  run.write("grid.csv", csv);
  run.write("grid.txt", render_score_table_text("Dev scores by grid point", "Grid point", rows));
  run.finish();
}

void cmd_evaluate(const Options& o) {
  Run run("evaluate", o.shared);
  const auto table = load_features(run, run.path_option(o.features, "features"));
  const auto model_path = in_dir_or_file(run.require(run.path_option(o.model, "model"), "model"),
                                         "model.json");
  const auto model = TrainedModel::from_json(read_file(model_path));
  const Split split = parse_split(o.split.empty() ? "test" : o.split);
  run.setting("split", std::string(to_string(split)));
  const auto rows = part(table, split);
  const auto labels = rows.labels();
  const auto pred = predicted_labels(predict(model, rows));

  json results;
  std::string text;
  std::string csv;
  if (model.mode == TaskMode::Binary) {
    const auto r = evaluate_binary(to_binary(labels), pred);
    results = json::parse(r.to_json());
    const ScoreRow row{"Proposed", r.weighted.precision, r.weighted.recall, r.weighted.f1};
    text = render_score_table_text("Binary propaganda detection", "Model", {&row, 1});
    csv = render_score_table_csv("Model", {&row, 1});
  } else {
    std::vector<TechniqueLabel> predicted;
    for (int id : pred) predicted.push_back(label_from_index(id));
    const auto r = evaluate_multiclass(labels, predicted);
    results = json::parse(r.to_json());
    const auto diag = evaluate_binary(to_binary(labels), to_binary(predicted));
    results["binary_consistency"] = {{"precision", diag.weighted.precision},
                                     {"recall", diag.weighted.recall},
                                     {"f1", diag.weighted.f1}};
    text = render_class_table_text(r.per_class, r.weighted);
    csv = render_class_table_csv(r.per_class, r.weighted);
  }
  results["mode"] = std::string(to_string(model.mode));
  results["split"] = std::string(to_string(split));

  std::string predictions = "article_id,index,gold,predicted\n";
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto& k = rows.keys[i];
    const std::string gold = model.mode == TaskMode::Binary
                                 ? std::to_string(is_propaganda(k.label) ? 1 : 0)
                                 : std::string(to_string(k.label));
    predictions += k.article_id + "," + std::to_string(k.index) + ",\"" + gold + "\",\"" +
                   class_name(model, pred[i]) + "\"\n";
  }
  run.write("results.json", results.dump(2) + "\n");
  run.write("table.txt", text);
  run.write("table.csv", csv);
  run.write("predictions.csv", predictions);
  run.finish();
}

void cmd_ablate(const Options& o) {
  Run run("ablate", o.shared);
  const auto config = experiment_config(run, o);
  const auto drops = parse_groups(o.drop.empty() ? kDefaultDrops : o.drop);
  const Split split = parse_split(o.split.empty() ? "test" : o.split);
  run.setting("split", std::string(to_string(split)));
  std::string drop_list;
  for (auto g : drops) drop_list += (drop_list.empty() ? "" : ",") + std::string(to_string(g));
  run.setting("drop", drop_list);
  const auto table = load_features(run, run.path_option(o.features, "features"));

  const auto rows = run_ablation(part(table, Split::Train), part(table, Split::Dev),
                                 part(table, split), config, drops);
  std::vector<ScoreRow> score_rows;
  json rows_json = json::array();
  for (const auto& r : rows) {
    score_rows.push_back(
        {r.dropped == "none" ? "All" : "- " + r.dropped, r.precision, r.recall, r.f1});
    json j{{"dropped", r.dropped}, {"precision", r.precision}, {"recall", r.recall},
           {"f1", r.f1}};
    if (r.doc_threshold) {
      j["doc_threshold"] = *r.doc_threshold;
    } else {
      j["gamma"] = r.gamma;
      j["C"] = r.C;
    }
    rows_json.push_back(j);
  }
  run.write("ablation.json", rows_json.dump(2) + "\n");
  run.write("ablation.csv", render_score_table_csv("Ablations", score_rows));
  run.write("ablation.txt", render_score_table_text("Ablation study", "Ablations", score_rows));
  run.finish();
}

void cmd_explain(const Options& o) {
  Run run("explain", o.shared);
  if (o.format != "json" && o.format != "html") {
    throw ValidationError("unknown report format '" + o.format + "' (json|html)");
  }
  const auto articles_dir = run.require(run.path_option(o.articles, "articles"), "articles");
  const auto model_path = in_dir_or_file(run.require(run.path_option(o.model, "model"), "model"),
                                         "model.json");
  const auto cov_path = in_dir_or_file(
      run.require(run.path_option(o.covariance, "covariance"), "covariance"), "covariance.json");
  const auto model = TrainedModel::from_json(read_file(model_path));
  const auto cm = CovarianceMatrix::from_json(read_file(cov_path));
  run.setting("format", o.format);
  run.setting("topk", o.topk);

  auto pc = run.providers();
  if (model.schema.has_group(FeatureGroup::Emb)) pc.dimension = model.schema.embedding_dim();
  run.record_providers(pc);
  auto providers = make_providers(pc);

  auto articles = load_articles(articles_dir);
  if (!o.ids.empty()) {
    std::set<std::string> wanted;
    for (auto id : split(o.ids, ',')) wanted.insert(std::string(trim(id)));
    std::erase_if(articles, [&](const Article& a) { return !wanted.contains(a.id); });
    run.setting("ids", o.ids);
  }
  std::vector<DocumentExplanation> docs;
  for (const auto& a : articles) {
    docs.push_back(explain_document(a, model, cm, providers, o.topk, run.workers()));
  }
  run.write("report." + o.format, render_report(docs, o.format));
  run.finish();
}

void add_shared(CLI::App* sub, Shared& s) {
  sub->add_option("--config", s.config, "JSON config file");
  sub->add_option("--seed", s.seed, "Random seed");
  sub->add_option("--out", s.out, "Output directory");
  sub->add_option("--workers", s.workers, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sentence-level propaganda detection with interpretable features", "propdetect"};
  app.require_subcommand(1, 1);
  Options o;

  auto* prepare = app.add_subcommand("prepare", "Project span labels onto sentences");
  add_shared(prepare, o.shared);
  prepare->add_option("--articles", o.articles, "Directory of article<ID>.txt files");
  prepare->add_option("--spans", o.spans, "Span annotation file or directory");
  prepare->add_option("--splits", o.splits, "Article split assignment file");

  auto* features = app.add_subcommand("features", "Extract feature vectors");
  add_shared(features, o.shared);
  features->add_option("--sentences", o.sentences, "sentences.jsonl or a prepare output dir");
  features->add_option("--articles", o.articles, "Directory of article<ID>.txt files");
  features->add_option("--groups", o.groups, "Feature groups, e.g. rp,sim,stn,dp,sent,doc[,emb]");

  auto* covariance = app.add_subcommand("covariance", "Feature and technique covariance heatmap");
  add_shared(covariance, o.shared);
  covariance->add_option("--features", o.features, "Features directory or CSV");
  covariance->add_option("--on", o.on, "Splits to use (default train,dev; 'all' for every row)");

  auto* train = app.add_subcommand("train", "Grid-search and train the SVM");
  add_shared(train, o.shared);
  train->add_option("--features", o.features, "Features directory or CSV");
  train->add_option("--mode", o.mode, "binary|multiclass");
  train->add_option("--grid", o.grid, "default|<grid.json>");

  auto* evaluate = app.add_subcommand("evaluate", "Score a trained model");
  add_shared(evaluate, o.shared);
  evaluate->add_option("--features", o.features, "Features directory or CSV");
  evaluate->add_option("--model", o.model, "model.json or a train output dir");
  evaluate->add_option("--split", o.split, "train|dev|test (default test)");

  auto* ablate = app.add_subcommand("ablate", "Feature group ablations");
  add_shared(ablate, o.shared);
  ablate->add_option("--features", o.features, "Features directory or CSV");
  ablate->add_option("--mode", o.mode, "binary|multiclass");
  ablate->add_option("--grid", o.grid, "default|<grid.json>");
  ablate->add_option("--drop", o.drop, "Groups to drop, comma separated");
  ablate->add_option("--split", o.split, "Split to score on (default test)");

  auto* explain = app.add_subcommand("explain", "Per-sentence explanation report");
  add_shared(explain, o.shared);
  explain->add_option("--articles", o.articles, "Directory of article<ID>.txt files");
  explain->add_option("--model", o.model, "model.json or a train output dir");
  explain->add_option("--covariance", o.covariance, "covariance.json or its directory");
  explain->add_option("--format", o.format, "json|html");
  explain->add_option("--topk", o.topk, "Rationale length");
  explain->add_option("--ids", o.ids, "Only these article ids, comma separated");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 1;
  }

  try {
    if (prepare->parsed()) cmd_prepare(o);
    else if (features->parsed()) cmd_features(o);
    else if (covariance->parsed()) cmd_covariance(o);
    else if (train->parsed()) cmd_train(o);
    else if (evaluate->parsed()) cmd_evaluate(o);
    else if (ablate->parsed()) cmd_ablate(o);
    else if (explain->parsed()) cmd_explain(o);
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const StateError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const ProviderError& e) {
    err << "provider error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace propdetect
