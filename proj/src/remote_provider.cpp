#include "propdetect/remote_provider.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

#include "propdetect/errors.hpp"

namespace propdetect {
namespace {

void check_error(const Json& response) {
  if (!response.is_object()) throw ProtocolError("provider response is not a JSON object");
  if (response.contains("error")) {
    const auto& err = response["error"];
    throw ProviderError("provider error: " + (err.is_string() ? err.get<std::string>()
                                                              : err.dump()));
  }
}

double number_field(const Json& response, const char* key) {
  if (!response.contains(key) || !response[key].is_number()) {
    throw ProtocolError(std::string("provider response lacks numeric field '") + key + "'");
  }
  const double value = response[key].get<double>();
  if (!std::isfinite(value)) {
    throw ProtocolError(std::string("provider field '") + key + "' is not finite");
  }
  return value;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

SubprocessTransport::SubprocessTransport(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  if (command_.empty()) throw ValidationError("subprocess provider needs a command");
}

SubprocessTransport::~SubprocessTransport() { stop(); }

void SubprocessTransport::start() {
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw ProviderError("pipe() failed: " + std::string(strerror(errno)));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw ProviderError("pipe() failed: " + std::string(strerror(errno)));
  }
  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw ProviderError("fork() failed: " + std::string(strerror(errno)));
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
  fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  pending_.clear();
}

void SubprocessTransport::stop() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, &status, 0);
    }
  }
  pid_ = -1;
  pending_.clear();
}

std::string SubprocessTransport::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  while (true) {
    const auto newline = pending_.find('\n');
    if (newline != std::string::npos) {
      std::string line = pending_.substr(0, newline);
      pending_.erase(0, newline + 1);
      return line;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) throw ProviderTimeout("provider timed out: " + command_);
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ProviderError("poll() failed: " + std::string(strerror(errno)), true);
    }
    if (ready == 0) throw ProviderTimeout("provider timed out: " + command_);
    char buf[4096];
    const ssize_t got = read(from_child_, buf, sizeof(buf));
    if (got < 0) {
      if (errno == EINTR) continue;
      throw ProviderError("read from provider failed: " + std::string(strerror(errno)), true);
    }
    if (got == 0) throw ProviderError("provider process exited: " + command_, true);
    pending_.append(buf, static_cast<std::size_t>(got));
  }
}

Json SubprocessTransport::call(const Json& request) {
  std::lock_guard lock(mutex_);
  if (pid_ < 0) start();
  const std::string line = request.dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      stop();
      throw ProviderError("write to provider failed: " + std::string(strerror(errno)), true);
    }
    written += static_cast<std::size_t>(n);
  }
  std::string reply;
  try {
    reply = read_line();
  } catch (const ProviderError&) {
    // The stream is out of step with our requests now; start over on the next call.
    stop();
    throw;
  }
  try {
    return Json::parse(reply);
  } catch (const Json::exception& e) {
    throw ProtocolError(std::string("provider sent invalid JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------------------------

HttpTransport::HttpTransport(std::string url, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ValidationError("provider URL lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme + 3);
  if (path_start == std::string::npos) {
    base_ = url;
    path_ = "/";
  } else {
    base_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
}

Json HttpTransport::call(const Json& request) {
  std::lock_guard lock(mutex_);
  httplib::Client client(base_);
  const auto seconds = timeout_.count() / 1000;
  const auto micros = (timeout_.count() % 1000) * 1000;
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  auto res = client.Post(path_, request.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const std::string what = httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw ProviderTimeout("provider at " + base_ + " timed out: " + what);
    }
    throw ProviderError("provider at " + base_ + " unreachable: " + what, true);
  }
  Json body;
  try {
    body = Json::parse(res->body);
  } catch (const Json::exception& e) {
    throw ProtocolError("provider sent invalid JSON (HTTP " + std::to_string(res->status) +
                        "): " + e.what());
  }
  if (res->status != 200 && !(body.is_object() && body.contains("error"))) {
    throw ProtocolError("provider answered HTTP " + std::to_string(res->status));
  }
  return body;
}

// ---------------------------------------------------------------------------------------------

SentenceEncoding parse_encode_response(const Json& response, std::size_t dimension) {
  check_error(response);
  if (!response.contains("vector") || !response["vector"].is_array()) {
    throw ProtocolError("encode response lacks a 'vector' array");
  }
  const auto& values = response["vector"];
  if (values.size() != dimension) {
    throw ProtocolError("encode response has dimension " + std::to_string(values.size()) +
                        ", configured " + std::to_string(dimension));
  }
  SentenceEncoding out;
  out.vector.reserve(dimension);
  for (const auto& v : values) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw ProtocolError("encode response has a non-numeric entry");
    }
    out.vector.push_back(v.get<double>());
  }
  return out;
}

StanceDistribution parse_stance_response(const Json& response) {
  check_error(response);
  StanceDistribution dist;
  dist.unrelated = number_field(response, "unrelated");
  dist.agree = number_field(response, "agree");
  dist.disagree = number_field(response, "disagree");
  dist.discuss = number_field(response, "discuss");
  try {
    dist.validate();
  } catch (const ValidationError& e) {
    throw ProtocolError(std::string("stance response: ") + e.what());
  }
  return dist;
}

SyntaxProfile parse_syntax_response(const Json& response) {
  check_error(response);
  if (!response.contains("counts") || !response["counts"].is_object()) {
    throw ProtocolError("syntax response lacks a 'counts' object");
  }
  SyntaxProfile profile;
  const auto& labels = syntax_labels();
  for (const auto& [label, count] : response["counts"].items()) {
    if (!count.is_number_integer() || count.get<long long>() < 0) {
      throw ProtocolError("syntax count for '" + label + "' is not a non-negative integer");
    }
    // Labels outside the fixed set accrue to `unknown`.
    const bool known = std::find(labels.begin(), labels.end(), label) != labels.end();
    profile.counts[known ? syntax_label_index(label) : kNumSyntaxLabels - 1] +=
        static_cast<int>(count.get<long long>());
  }
  return profile;
}

SentimentScores parse_sentiment_response(const Json& response) {
  check_error(response);
  SentimentScores s;
  s.positive = number_field(response, "positive");
  s.neutral = number_field(response, "neutral");
  s.negative = number_field(response, "negative");
  s.compound = number_field(response, "compound");
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ProtocolError(std::string("sentiment response: ") + e.what());
  }
  return s;
}

DocScore parse_doc_score_response(const Json& response) {
  check_error(response);
  const double score = number_field(response, "score");
  if (score < 0.0 || score > 1.0) {
    throw ProtocolError("doc_score outside [0, 1]: " + std::to_string(score));
  }
  return {score};
}

// ---------------------------------------------------------------------------------------------

RemoteProvider::RemoteProvider(std::shared_ptr<Transport> transport, std::size_t dimension)
    : transport_(std::move(transport)), dimension_(dimension) {
  if (!transport_) throw ValidationError("remote provider needs a transport");
}

SentenceEncoding RemoteProvider::encode(std::string_view text) {
  return parse_encode_response(transport_->call({{"op", "encode"}, {"text", text}}), dimension_);
}

StanceDistribution RemoteProvider::stance(std::string_view sentence, std::string_view title) {
  return parse_stance_response(
      transport_->call({{"op", "stance"}, {"sentence", sentence}, {"title", title}}));
}

SyntaxProfile RemoteProvider::syntax(std::string_view sentence) {
  return parse_syntax_response(transport_->call({{"op", "syntax"}, {"text", sentence}}));
}

SentimentScores RemoteProvider::sentiment(std::string_view sentence) {
  return parse_sentiment_response(transport_->call({{"op", "sentiment"}, {"text", sentence}}));
}

DocScore RemoteProvider::doc_score(const Article& article) {
  Json sentences = Json::array();
  for (const auto& s : article.sentences) sentences.push_back(s.text);
  return parse_doc_score_response(transport_->call({{"op", "doc_score"},
                                                    {"article_id", article.id},
                                                    {"title", article.title},
                                                    {"sentences", sentences}}));
}

Providers make_remote_providers(std::shared_ptr<Transport> transport, std::size_t dimension) {
  auto remote = std::make_shared<RemoteProvider>(std::move(transport), dimension);
  Providers p;
  p.encoder = remote;
  p.stance = remote;
  p.syntax = remote;
  p.sentiment = remote;
  p.document = remote;
  return p;
}

// ---------------------------------------------------------------------------------------------

Json handle_provider_request(const Json& request, Providers& providers) {
  try {
    if (!request.is_object() || !request.contains("op") || !request["op"].is_string()) {
      return {{"error", "bad_request: missing op"}};
    }
    const std::string op = request["op"].get<std::string>();
    auto text = [&](const char* key) -> std::string {
      if (!request.contains(key) || !request[key].is_string()) {
        throw ValidationError(std::string("missing string field '") + key + "'");
      }
      return request[key].get<std::string>();
    };
    if (op == "encode") {
      return {{"vector", providers.encoder->encode(text("text")).vector}};
    }
    if (op == "stance") {
      const auto d = providers.stance->stance(text("sentence"), text("title"));
      return {{"unrelated", d.unrelated},
              {"agree", d.agree},
              {"disagree", d.disagree},
              {"discuss", d.discuss}};
    }
    if (op == "syntax") {
      const auto profile = providers.syntax->syntax(text("text"));
      Json counts = Json::object();
      const auto& labels = syntax_labels();
      for (std::size_t i = 0; i < kNumSyntaxLabels; ++i) {
        if (profile.counts[i] != 0) counts[std::string(labels[i])] = profile.counts[i];
      }
      return {{"counts", counts}};
    }
    if (op == "sentiment") {
      const auto s = providers.sentiment->sentiment(text("text"));
      return {{"positive", s.positive},
              {"neutral", s.neutral},
              {"negative", s.negative},
              {"compound", s.compound}};
    }
    if (op == "doc_score") {
      Article article;
      article.id = request.value("article_id", std::string());
      article.title = request.value("title", std::string());
      if (!request.contains("sentences") || !request["sentences"].is_array()) {
        throw ValidationError("missing array field 'sentences'");
      }
      int index = 0;
      for (const auto& s : request["sentences"]) {
        if (!s.is_string()) throw ValidationError("sentences must be strings");
        article.sentences.push_back({++index, s.get<std::string>(), 0, 0});
      }
      return {{"score", providers.document->doc_score(article).score}};
    }
    return {{"error", "unknown_op"}};
  } catch (const std::exception& e) {
    return {{"error", std::string("bad_request: ") + e.what()}};
  }
}

}  // namespace propdetect
