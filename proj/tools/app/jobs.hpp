#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "app/json_io.hpp"

namespace flim::app {

/// Background jobs, one thread each, observed by polling.
class JobManager {
 public:
  using Progress = std::function<void(double fraction, const std::string& stage)>;
  using Work = std::function<Json(const Progress&)>;

  JobManager() = default;
  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;
  ~JobManager();

  struct Started {
    std::string id;
    bool created = false;
  };
  /// Starts `work` unless a job of `kind` is already queued or running. In
  /// that case nothing starts and the running job's id is returned.
  Started start_exclusive(const std::string& kind, const std::string& key, Work work);

  /// {"v":1, id, kind, key, status, progress, stage, result | error}
  std::optional<Json> status(const std::string& id) const;
  /// Key of the active job of `kind`, if any.
  std::optional<std::pair<std::string, std::string>> active(const std::string& kind) const;
  void wait_all();

 private:
  struct Job {
    std::string kind;
    std::string key;
    std::string status = "running";
    double progress = 0.0;
    std::string stage;
    Json result;
    Json error;
  };
  mutable std::mutex mutex_;
  std::map<std::string, Job> jobs_;
  std::vector<std::thread> threads_;
  std::size_t next_ = 1;
};

}  // namespace flim::app
