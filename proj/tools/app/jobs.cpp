#include "app/jobs.hpp"

#include "flim/errors.hpp"

namespace flim::app {

JobManager::~JobManager() { wait_all(); }

JobManager::Started JobManager::start_exclusive(const std::string& kind, const std::string& key, Work work) {
  std::lock_guard lock(mutex_);
  for (const auto& [id, job] : jobs_) {
    if (job.kind == kind && job.status == "running") return {id, false};
  }
  const std::string id = "job-" + std::to_string(next_++);
  Job job;
  job.kind = kind;
  job.key = key;
  jobs_[id] = std::move(job);
  threads_.emplace_back([this, id, work = std::move(work)] {
    const Progress progress = [this, &id](double fraction, const std::string& stage) {
      std::lock_guard lock(mutex_);
      auto& job = jobs_.at(id);
      job.progress = fraction;
      job.stage = stage;
    };
    Json result;
    Json error;
    try {
      result = work(progress);
    } catch (const flim::Error& e) {
      error = Json{{"kind", e.kind()}, {"message", e.what()}};
    } catch (const std::exception& e) {
      error = Json{{"kind", "InternalError"}, {"message", e.what()}};
    }
    std::lock_guard lock(mutex_);
    auto& job = jobs_.at(id);
    if (error.is_null()) {
      job.status = "succeeded";
      job.progress = 1.0;
      job.result = std::move(result);
    } else {
      job.status = "failed";
      job.error = std::move(error);
    }
  });
  return {id, true};
}

std::optional<Json> JobManager::status(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  const auto& job = it->second;
  Json j{{"v", 1},   {"id", id}, {"kind", job.kind}, {"key", job.key}, {"status", job.status}, {"progress", job.progress},
         {"stage", job.stage}};
  if (!job.result.is_null()) j["result"] = job.result;
  if (!job.error.is_null()) j["error"] = job.error;
  return j;
}

std::optional<std::pair<std::string, std::string>> JobManager::active(const std::string& kind) const {
  std::lock_guard lock(mutex_);
  for (const auto& [id, job] : jobs_) {
    if (job.kind == kind && job.status == "running") return std::pair{id, job.key};
  }
  return std::nullopt;
}

void JobManager::wait_all() {
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mutex_);
    threads.swap(threads_);
  }
  for (auto& t : threads) {
    if (t.joinable()) t.join();
  }
}

}  // namespace flim::app
