#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace excellence {

/// Static HTTP server for the map UI: GET /results.json returns the results
/// document, every other path is served from `ui_dir` when one is given.
class ResultsServer {
 public:
  /// Validates the results file up front (schema_version included).
  ResultsServer(std::filesystem::path results, std::optional<std::filesystem::path> ui_dir);
  ~ResultsServer();
  ResultsServer(const ResultsServer&) = delete;
  ResultsServer& operator=(const ResultsServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace excellence
