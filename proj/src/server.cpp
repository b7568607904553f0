#include "excellence/server.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "excellence/results.hpp"
#include "httplib.h"

namespace excellence {

struct ResultsServer::Impl {
  httplib::Server http;
  std::string body;
};

namespace {

constexpr const char* kFallbackIndex =
    "<!doctype html><meta charset=\"utf-8\"><title>excellence-mapper</title>"
    "<p>No UI bundle configured. Results: <a href=\"/results.json\">/results.json</a></p>\n";

}  // namespace

ResultsServer::ResultsServer(std::filesystem::path results, std::optional<std::filesystem::path> ui_dir)
    : impl_(std::make_unique<Impl>()) {
  load_results(results);  // throws on a missing file or unsupported schema
  std::ifstream in(results, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  impl_->body = ss.str();

  impl_->http.Get("/results.json", [this](const httplib::Request&, httplib::Response& res) {
    res.set_header("Cache-Control", "no-cache");
    res.set_content(impl_->body, "application/json");
  });
  if (ui_dir) {
    if (!std::filesystem::is_directory(*ui_dir))
      throw std::runtime_error("UI directory '" + ui_dir->string() + "' does not exist");
    impl_->http.set_mount_point("/", ui_dir->string());
  } else {
    impl_->http.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kFallbackIndex, "text/html; charset=utf-8");
    });
  }
}

ResultsServer::~ResultsServer() { stop(); }

int ResultsServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  if (!impl_->http.bind_to_port(host, port))
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ResultsServer::listen() { impl_->http.listen_after_bind(); }

void ResultsServer::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

}  // namespace excellence
