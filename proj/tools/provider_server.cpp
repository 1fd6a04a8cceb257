// Serves the reference providers over the remote protocol, for wiring tests and as a template
// for real model servers. Default transport is NDJSON on stdin/stdout; --http serves POST /.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "propdetect/reference_providers.hpp"
#include "propdetect/remote_provider.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Reference provider server", "propdetect-provider"};
  std::size_t dimension = 64;
  int port = 0;
  std::string host = "127.0.0.1";
  app.add_option("--dimension", dimension, "Embedding dimension")->check(CLI::PositiveNumber);
  app.add_option("--http", port, "Serve HTTP on this port instead of stdio");
  app.add_option("--host", host, "HTTP bind address");
  CLI11_PARSE(app, argc, argv);

  auto providers = propdetect::make_reference_providers(dimension);

  if (port > 0) {
    httplib::Server server;
    server.Post(".*", [&](const httplib::Request& req, httplib::Response& res) {
      propdetect::Json response;
      try {
        response = propdetect::handle_provider_request(propdetect::Json::parse(req.body), providers);
      } catch (const nlohmann::json::exception& e) {
        response = {{"error", std::string("bad request: ") + e.what()}};
      }
      res.set_content(response.dump(), "application/json");
    });
    std::cerr << "listening on " << host << ":" << port << "\n";
    return server.listen(host, port) ? 0 : 2;
  }

  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    propdetect::Json response;
    try {
      response = propdetect::handle_provider_request(propdetect::Json::parse(line), providers);
    } catch (const nlohmann::json::exception& e) {
      response = {{"error", std::string("bad request: ") + e.what()}};
    }
    std::cout << response.dump() << '\n' << std::flush;
  }
  return 0;
}
