#include "propdetect/providers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "propdetect/reference_providers.hpp"
#include "propdetect/remote_provider.hpp"

namespace propdetect {

const std::array<std::string_view, kNumSyntaxLabels>& syntax_labels() {
  static constexpr std::array<std::string_view, kNumSyntaxLabels> kLabels{
      "S",    "SBAR", "SBARQ", "SINV", "SQ",                                    // clause
      "ADJP", "ADVP", "CONJP", "FRAG", "INTJ", "LST",    "NAC",    "NP",  "NX",  // phrase
      "PP",   "PRN",  "PRT",   "QP",   "RRC",  "UCP",    "VP",     "WHADJP",
      "WHADVP", "WHNP", "WHPP", "X",
      "unknown"};
  return kLabels;
}

std::size_t syntax_label_index(std::string_view label) {
  const auto& labels = syntax_labels();
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return kNumSyntaxLabels - 1;
  return static_cast<std::size_t>(it - labels.begin());
}

int SyntaxProfile::total() const {
  int sum = 0;
  for (int c : counts) sum += c;
  return sum;
}

void StanceDistribution::validate() const {
  for (double p : {unrelated, agree, disagree, discuss}) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("stance probabilities must be finite and non-negative");
    }
  }
  const double sum = unrelated + agree + disagree + discuss;
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw ValidationError("stance probabilities sum to " + std::to_string(sum));
  }
}

StanceClass argmax(const StanceDistribution& dist) {
  const double values[4] = {dist.unrelated, dist.agree, dist.disagree, dist.discuss};
  int best = 0;
  for (int i = 1; i < 4; ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<StanceClass>(best);
}

void SentimentScores::validate() const {
  for (double p : {positive, neutral, negative}) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw ValidationError("sentiment class scores must lie in [0, 1]");
    }
  }
  if (!std::isfinite(compound) || compound < -1.0 || compound > 1.0) {
    throw ValidationError("compound sentiment must lie in [-1, 1]");
  }
  if (std::fabs(positive + neutral + negative - 1.0) > 1e-6) {
    throw ValidationError("sentiment class scores must sum to 1");
  }
}

ProviderConfig provider_config_from_json(std::string_view json_text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("provider config is not valid JSON: ") + e.what());
  }
  if (root.contains("providers")) root = root["providers"];
  if (!root.is_object()) throw ValidationError("provider config must be a JSON object");

  ProviderConfig config;
  const std::string backend = root.value("backend", std::string("reference"));
  if (backend == "reference") {
    config.backend = BackendKind::Reference;
  } else if (backend == "subprocess") {
    config.backend = BackendKind::Subprocess;
  } else if (backend == "http") {
    config.backend = BackendKind::Http;
  } else {
    throw ValidationError("unknown provider backend '" + backend + "'");
  }
  config.endpoint = root.value("endpoint", std::string());
  const auto dimension = root.value("dimension", 64LL);
  if (dimension <= 0) throw ValidationError("provider dimension must be positive");
  config.dimension = static_cast<std::size_t>(dimension);
  config.timeout_ms = root.value("timeout_ms", 30000);
  if (config.timeout_ms <= 0) throw ValidationError("provider timeout must be positive");
  return config;
}

void apply_environment(ProviderConfig& config) {
  if (const char* url = std::getenv("PROVIDER_URL"); url != nullptr && *url != '\0') {
    config.endpoint = url;
    if (config.backend == BackendKind::Reference) config.backend = BackendKind::Http;
  }
}

Providers make_providers(const ProviderConfig& config) {
  const std::chrono::milliseconds timeout(config.timeout_ms);
  switch (config.backend) {
    case BackendKind::Reference:
      return make_reference_providers(config.dimension);
    case BackendKind::Subprocess:
      return make_remote_providers(
          std::make_shared<SubprocessTransport>(config.endpoint, timeout), config.dimension);
    case BackendKind::Http:
      if (config.endpoint.empty()) throw ValidationError("http provider needs an endpoint URL");
      return make_remote_providers(std::make_shared<HttpTransport>(config.endpoint, timeout),
                                   config.dimension);
  }
  return make_reference_providers(config.dimension);
}

}  // namespace propdetect
