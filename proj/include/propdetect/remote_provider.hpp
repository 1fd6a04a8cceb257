#pragma once

// Remote providers speak newline-delimited JSON, either over the stdio pipes of a child process
// or as HTTP POST bodies. Requests:
//
//   {"op": "encode",    "text": "..."}                          -> {"vector": [..]}
//   {"op": "stance",    "sentence": "...", "title": "..."}      -> {"unrelated", "agree",
//                                                                   "disagree", "discuss"}
//   {"op": "syntax",    "text": "..."}                          -> {"counts": {"NP": 2, ..}}
//   {"op": "sentiment", "text": "..."}                          -> {"positive", "neutral",
//                                                                   "negative", "compound"}
//   {"op": "doc_score", "article_id": "...", "title": "...",
//                       "sentences": ["...", ..]}               -> {"score": 0.7}
//
// Any response carrying an "error" key is a failure. Unknown ops answer
// {"error": "unknown_op"}.

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <sys/types.h>

#include <json.hpp>

#include "propdetect/providers.hpp"

namespace propdetect {

using Json = nlohmann::json;

/// One request, one response. Implementations serialize calls on a single connection.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Json call(const Json& request) = 0;
};

/// Runs `command` through /bin/sh and exchanges one JSON line per request over its stdio.
class SubprocessTransport : public Transport {
 public:
  SubprocessTransport(std::string command, std::chrono::milliseconds timeout);
  ~SubprocessTransport() override;
  SubprocessTransport(const SubprocessTransport&) = delete;
  SubprocessTransport& operator=(const SubprocessTransport&) = delete;

  Json call(const Json& request) override;

 private:
  void start();
  void stop();
  std::string read_line();

  std::string command_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string pending_;
};

/// POSTs each request as a JSON body to `url` (scheme://host[:port]/path).
class HttpTransport : public Transport {
 public:
  HttpTransport(std::string url, std::chrono::milliseconds timeout);
  Json call(const Json& request) override;

 private:
  std::string base_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
};

// Response validation. Each throws ProtocolError on a schema violation and ProviderError when
// the response carries an "error" key.
SentenceEncoding parse_encode_response(const Json& response, std::size_t dimension);
StanceDistribution parse_stance_response(const Json& response);
SyntaxProfile parse_syntax_response(const Json& response);
SentimentScores parse_sentiment_response(const Json& response);
DocScore parse_doc_score_response(const Json& response);

/// Implements all five provider interfaces on top of one transport.
class RemoteProvider : public SentenceEncoder,
                       public StanceClassifier,
                       public SyntaxAnalyzer,
                       public SentimentAnalyzer,
                       public DocumentScorer {
 public:
  RemoteProvider(std::shared_ptr<Transport> transport, std::size_t dimension);

  std::size_t dimension() const override { return dimension_; }
  SentenceEncoding encode(std::string_view text) override;
  StanceDistribution stance(std::string_view sentence, std::string_view title) override;
  SyntaxProfile syntax(std::string_view sentence) override;
  SentimentScores sentiment(std::string_view sentence) override;
  DocScore doc_score(const Article& article) override;

 private:
  std::shared_ptr<Transport> transport_;
  std::size_t dimension_;
};

Providers make_remote_providers(std::shared_ptr<Transport> transport, std::size_t dimension);

/// Server side of the protocol: answers one request with the given providers. Never throws;
/// failures become {"error": ...} responses.
Json handle_provider_request(const Json& request, Providers& providers);

}  // namespace propdetect
