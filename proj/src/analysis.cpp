#include "propdetect/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "propdetect/util.hpp"

namespace propdetect {
namespace fs = std::filesystem;

namespace {

std::string column_title(const CovarianceMatrix& cm, std::size_t j) {
  return std::string(display_name(cm.techniques[j])) + " (" + std::to_string(cm.counts[j]) + ")";
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

double mixed_covariance(std::span<const double> f, std::span<const int> t) {
  if (f.size() != t.size()) {
    throw ValidationError("covariance inputs differ in length: " + std::to_string(f.size()) +
                          " vs " + std::to_string(t.size()));
  }
  if (f.empty()) throw ValidationError("covariance of empty columns");
  double sum1 = 0.0;
  double sum0 = 0.0;
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (t[i] == 1) {
      sum1 += f[i];
      ++n1;
    } else if (t[i] == 0) {
      sum0 += f[i];
    } else {
      throw ValidationError("indicator column must hold 0 or 1");
    }
  }
  const std::size_t n0 = f.size() - n1;
  if (n1 == 0 || n0 == 0) return 0.0;
  const double p = static_cast<double>(n1) / static_cast<double>(f.size());
  return p * (1.0 - p) * (sum1 / static_cast<double>(n1) - sum0 / static_cast<double>(n0));
}

std::size_t CovarianceMatrix::technique_column(TechniqueLabel label) const {
  for (std::size_t j = 0; j < techniques.size(); ++j) {
    if (techniques[j] == label) return j;
  }
  throw ValidationError("no covariance column for " + std::string(to_string(label)));
}

CovarianceMatrix covariance_matrix(const Matrix& standardized, const FeatureSchema& schema,
                                   std::span<const TechniqueLabel> labels, double threshold) {
  if (standardized.rows() != labels.size()) {
    throw ValidationError("covariance inputs misaligned: " + std::to_string(standardized.rows()) +
                          " rows vs " + std::to_string(labels.size()) + " labels");
  }
  if (standardized.cols() != schema.size()) {
    throw ValidationError("covariance matrix has " + std::to_string(standardized.cols()) +
                          " columns, schema has " + std::to_string(schema.size()));
  }
  CovarianceMatrix cm;
  cm.threshold = threshold;
  cm.features = schema.names();
  for (const auto& c : schema.columns()) cm.groups.push_back(c.group);
  cm.values = Matrix(schema.size(), kNumTechniques);

  std::vector<std::vector<int>> indicators(kNumTechniques, std::vector<int>(labels.size(), 0));
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (!is_propaganda(labels[r])) continue;
    const auto j = static_cast<std::size_t>(label_index(labels[r]) - 1);
    indicators[j][r] = 1;
    ++cm.counts[j];
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto column = standardized.column(i);
    for (std::size_t j = 0; j < kNumTechniques; ++j) {
      cm.values(i, j) = std::fabs(mixed_covariance(column, indicators[j]));
    }
  }
  return cm;
}

CovarianceMatrix covariance_matrix(const FeatureTable& table, double threshold) {
  const auto standardizer = Standardizer::fit(table.values);
  const auto labels = table.labels();
  return covariance_matrix(standardizer.transform(table.values), table.schema, labels, threshold);
}

BehaviorStats behavior_stats(const std::vector<SentenceRecord>& records) {
  return compute_behavior_stats(records);
}

std::string CovarianceMatrix::to_json() const {
  nlohmann::json root;
  root["threshold"] = threshold;
  nlohmann::json techs = nlohmann::json::array();
  for (std::size_t j = 0; j < techniques.size(); ++j) {
    techs.push_back({{"label", std::string(to_string(techniques[j]))}, {"count", counts[j]}});
  }
  root["techniques"] = techs;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < features.size(); ++i) {
    std::vector<double> vals(values.row(i).begin(), values.row(i).end());
    std::vector<bool> mask;
    for (std::size_t j = 0; j < kNumTechniques; ++j) mask.push_back(passes(i, j));
    rows.push_back({{"feature", features[i]},
                    {"group", std::string(to_string(groups[i]))},
                    {"values", vals},
                    {"mask", mask}});
  }
  root["features"] = rows;
  return root.dump(2) + "\n";
}

CovarianceMatrix CovarianceMatrix::from_json(std::string_view text) {
  try {
    const auto root = nlohmann::json::parse(text);
    CovarianceMatrix cm;
    cm.threshold = root.at("threshold").get<double>();
    const auto& techs = root.at("techniques");
    if (techs.size() != kNumTechniques) throw ValidationError("covariance JSON needs 18 techniques");
    for (std::size_t j = 0; j < kNumTechniques; ++j) {
      cm.techniques[j] = parse_label(techs[j].at("label").get<std::string>());
      cm.counts[j] = techs[j].at("count").get<std::size_t>();
    }
    const auto& rows = root.at("features");
    cm.values = Matrix(rows.size(), kNumTechniques);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      cm.features.push_back(rows[i].at("feature").get<std::string>());
      cm.groups.push_back(parse_group(rows[i].at("group").get<std::string>()));
      const auto vals = rows[i].at("values").get<std::vector<double>>();
      if (vals.size() != kNumTechniques) throw ValidationError("covariance row needs 18 values");
      for (std::size_t j = 0; j < kNumTechniques; ++j) cm.values(i, j) = vals[j];
    }
    return cm;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad covariance JSON: ") + e.what());
  }
}

std::string heatmap_csv(const CovarianceMatrix& cm) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  };
  std::string out = "feature";
  for (std::size_t j = 0; j < cm.techniques.size(); ++j) out += "," + quote(column_title(cm, j));
  out += '\n';
  for (std::size_t i = 0; i < cm.features.size(); ++i) {
    out += quote(cm.features[i]);
    for (std::size_t j = 0; j < cm.techniques.size(); ++j) {
      out += ',';
      if (cm.passes(i, j)) out += format_fixed(cm.values(i, j), 6);
    }
    out += '\n';
  }
  return out;
}

std::string heatmap_svg(const CovarianceMatrix& cm) {
  constexpr int kCell = 18;
  constexpr int kLeft = 140;
  constexpr int kTop = 190;
  const int width = kLeft + kCell * static_cast<int>(cm.techniques.size()) + 20;
  const int height = kTop + kCell * static_cast<int>(cm.features.size()) + 20;

  double peak = 0.0;
  for (std::size_t i = 0; i < cm.features.size(); ++i) {
    for (std::size_t j = 0; j < cm.techniques.size(); ++j) {
      if (cm.passes(i, j)) peak = std::max(peak, cm.values(i, j));
    }
  }

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  for (std::size_t j = 0; j < cm.techniques.size(); ++j) {
    const int x = kLeft + kCell * static_cast<int>(j) + kCell / 2;
    out += "<text class=\"col\" transform=\"translate(" + std::to_string(x) + "," +
           std::to_string(kTop - 6) + ") rotate(-60)\">" + xml_escape(column_title(cm, j)) +
           "</text>\n";
  }
  for (std::size_t i = 0; i < cm.features.size(); ++i) {
    const int y = kTop + kCell * static_cast<int>(i);
    out += "<text class=\"row\" x=\"" + std::to_string(kLeft - 6) + "\" y=\"" +
           std::to_string(y + kCell - 5) + "\" text-anchor=\"end\">" + xml_escape(cm.features[i]) +
           "</text>\n";
    for (std::size_t j = 0; j < cm.techniques.size(); ++j) {
      const int x = kLeft + kCell * static_cast<int>(j);
      const std::string pos = "x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) +
                              "\" width=\"" + std::to_string(kCell) + "\" height=\"" +
                              std::to_string(kCell) + "\"";
      if (!cm.passes(i, j)) {
        out += "<rect class=\"cell masked\" " + pos + " fill=\"#ffffff\" stroke=\"#eeeeee\"/>\n";
        continue;
      }
      const double shade = peak > 0.0 ? cm.values(i, j) / peak : 0.0;
      const int level = 255 - static_cast<int>(std::lround(shade * 200.0));
      char color[8];
      std::snprintf(color, sizeof(color), "#ff%02x%02x", level, level);
      out += "<rect class=\"cell\" " + pos + " fill=\"" + color + "\" stroke=\"#eeeeee\"><title>" +
             xml_escape(cm.features[i]) + " / " + xml_escape(column_title(cm, j)) + ": " +
             format_fixed(cm.values(i, j), 6) + "</title></rect>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

std::vector<fs::path> export_heatmap(const CovarianceMatrix& cm, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create directory " + out_dir.string());
  const std::vector<fs::path> paths{out_dir / "covariance.csv", out_dir / "covariance.svg",
                                    out_dir / "covariance.json"};
  write_file(paths[0], heatmap_csv(cm));
  write_file(paths[1], heatmap_svg(cm));
  write_file(paths[2], cm.to_json());
  return paths;
}

}  // namespace propdetect
