#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace flim::app {

struct ServiceOptions {
  std::filesystem::path project;
  /// Static UI assets served from "/".
  std::optional<std::filesystem::path> ui_dir;
  /// Overrides the project's dataset root when set.
  std::optional<std::filesystem::path> dataset;
  std::string host = "127.0.0.1";
};

/// HTTP API over a project directory. Every mutation is persisted before the
/// response is sent; learning, projection, and classifier training run as
/// background jobs.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds `port` (0 picks a free port) and returns the bound port.
  int bind(int port);
  /// Blocks serving requests until stop().
  void listen();
  void stop();
  /// Blocks until every background job has finished.
  void wait_for_jobs();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace flim::app
