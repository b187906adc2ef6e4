#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "peavs/datakit.hpp"

namespace httplib {
class Server;
}

namespace peavs::service {

enum class TaskState { Open, Complete, QAReopened };

std::string_view state_name(TaskState s);

struct TaskSpec {
  std::string task_id;
  std::string left_video;
  std::string right_video;
};

// CSV with header task_id,left,right.
std::vector<TaskSpec> read_tasks(const std::filesystem::path& path);
std::vector<TaskSpec> tasks_from_pairs(std::span<const datakit::VideoPair> pairs);
std::string tasks_to_csv(std::span<const TaskSpec> tasks);
// One annotator id per line; blank lines and '#' comments ignored.
std::vector<std::string> read_annotators(const std::filesystem::path& path);

struct AnnotationTask {
  std::string task_id;
  std::string left_video;
  std::string right_video;
  int revision = 0;
  int required_raters = 3;
  TaskState state = TaskState::Open;
};

nlohmann::json to_json(const AnnotationTask& t);

struct ServiceConfig {
  int required_raters = 3;
  int max_qa_rounds = 1;
  std::chrono::milliseconds assignment_ttl{30 * 60 * 1000};
};

struct SubmitAck {
  std::string task_id;
  datakit::Slot slot = datakit::Slot::Left;
  int revision = 0;
  bool assignment_complete = false;
  TaskState task_state = TaskState::Open;
};

struct Progress {
  std::map<TaskState, int> tasks;
  std::size_t ratings = 0;
  std::map<int, std::size_t> ratings_per_revision;
  // n ratings -> number of videos with that many ratings
  std::map<int, std::size_t> ratings_per_video;
};

nlohmann::json to_json(const Progress& p);

using Clock = std::function<std::int64_t()>;  // milliseconds

std::string_view guidelines_text();

class AnnotationService {
 public:
  // Replays any records already in the store.
  AnnotationService(std::vector<TaskSpec> tasks, std::vector<std::string> annotators, std::filesystem::path store_path,
                    ServiceConfig config = {}, Clock clock = {});

  void register_annotator(const std::string& id);
  std::optional<AnnotationTask> assign_task(const std::string& annotator);
  SubmitAck submit_rating(const std::string& annotator, const std::string& task_id, datakit::Slot slot, int score);
  Progress progress() const;
  std::optional<AnnotationTask> task(const std::string& task_id) const;
  std::vector<datakit::RatingRecord> records() const;

 private:
  struct TaskRuntime {
    TaskSpec spec;
    int revision = 0;
    int qa_rounds = 0;
    TaskState state = TaskState::Open;
    std::set<std::string> ever_rated;
    std::set<std::string> completed;  // at the current revision
    std::map<std::string, std::int64_t> in_flight;  // annotator -> assignment time
    std::map<std::string, std::map<datakit::Slot, int>> partial;  // current revision
  };

  AnnotationTask view(const TaskRuntime& t) const;
  void expire(TaskRuntime& t, std::int64_t now);
  void apply(const datakit::RatingRecord& r);
  void close_revision(TaskRuntime& t);
  TaskRuntime& find(const std::string& task_id);

  ServiceConfig config_;
  Clock clock_;
  datakit::RatingsStore store_;
  std::set<std::string> annotators_;
  std::vector<std::string> order_;
  std::map<std::string, TaskRuntime> tasks_;
  std::vector<datakit::RatingRecord> records_;
  mutable std::mutex mu_;
};

class HttpServer {
 public:
  HttpServer(AnnotationService& service, std::filesystem::path media_root);
  ~HttpServer();

  // Binds to `port` (0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void serve();
  void stop();

 private:
  AnnotationService& service_;
  std::filesystem::path media_root_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace peavs::service
