#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "peavs/error.hpp"
#include "peavs/service.hpp"
#include "peavs/textio.hpp"

namespace peavs::service {

using datakit::RatingRecord;
using datakit::Slot;

std::string_view state_name(TaskState s) {
  switch (s) {
    case TaskState::Open: return "open";
    case TaskState::Complete: return "complete";
    case TaskState::QAReopened: return "qa_reopened";
  }
  return "?";
}

std::string_view guidelines_text() {
  return R"(In each comparison view, you will see two videos side by side. Play both videos and rate them on a scale of 1-5  in terms of disruption caused by these distortions based on the following likert scale:

1. Score 1 when there is complete misalignment between audio and video OR the video/audio is totally incomprehensible due to disruptions.
2. Score 2 when only a few parts of audio/video are in alignment OR large portion of video/audio is incomprehensible due to disruptions.
3. Score 3 when there is moderate mis-alignment between audio/video OR some portion of video/audio is comprehensible but there are visible disruptions.
4. Score 4 when there is almost perfect alignment with minor mis-alignments in some parts of video OR most of the video and audio is comprehensible with minor disruptions.
5. Score 5 when there is perfect alignment and audio/video are flawlessly in sync, AND/OR have no disruptions at all.
)";
}

std::vector<TaskSpec> read_tasks(const std::filesystem::path& path) {
  const auto table = textio::parse_csv(textio::read_text(path));
  if (table.empty() || textio::join(table[0], ",") != "task_id,left,right") {
    throw Error(Errc::MalformedHeader, "tasks header must be 'task_id,left,right'", 0);
  }
  std::vector<TaskSpec> out;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (table[i].size() != 3) throw Error(Errc::MalformedHeader, "tasks row " + std::to_string(i));
    out.push_back({table[i][0], table[i][1], table[i][2]});
  }
  return out;
}

std::vector<TaskSpec> tasks_from_pairs(std::span<const datakit::VideoPair> pairs) {
  std::vector<TaskSpec> out;
  char buf[32];
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "t%06zu", i + 1);
    out.push_back({buf, pairs[i].first, pairs[i].second});
  }
  return out;
}

std::string tasks_to_csv(std::span<const TaskSpec> tasks) {
  std::string out = "task_id,left,right\n";
  for (const auto& t : tasks) {
    out += textio::csv_field(t.task_id) + ',' + textio::csv_field(t.left_video) + ',' + textio::csv_field(t.right_video) + '\n';
  }
  return out;
}

std::vector<std::string> read_annotators(const std::filesystem::path& path) {
  std::vector<std::string> out;
  const std::string text = textio::read_text(path);
  std::size_t at = 0;
  while (at <= text.size()) {
    std::size_t end = text.find('\n', at);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(at, end - at);
    line.erase(std::find(line.begin(), line.end(), '#'), line.end());
    const auto b = line.find_first_not_of(" \t\r");
    if (b != std::string::npos) out.push_back(line.substr(b, line.find_last_not_of(" \t\r") - b + 1));
    at = end + 1;
  }
  return out;
}

nlohmann::json to_json(const AnnotationTask& t) {
  auto media = [](const std::string& id) {
    return nlohmann::json{{"video_id", id},
                          {"audio", "/media/" + id + "/audio.wav"},
                          {"video", "/media/" + id + "/video.y4m"},
                          {"meta", "/media/" + id + "/meta.json"}};
  };
  return {{"task_id", t.task_id},     {"left", media(t.left_video)},     {"right", media(t.right_video)},
          {"revision", t.revision},   {"required_raters", t.required_raters}, {"state", state_name(t.state)}};
}

nlohmann::json to_json(const Progress& p) {
  nlohmann::json tasks = nlohmann::json::object();
  for (TaskState s : {TaskState::Open, TaskState::Complete, TaskState::QAReopened}) {
    const auto it = p.tasks.find(s);
    tasks[std::string(state_name(s))] = it == p.tasks.end() ? 0 : it->second;
  }
  nlohmann::json per_rev = nlohmann::json::object();
  for (const auto& [rev, n] : p.ratings_per_revision) per_rev[std::to_string(rev)] = n;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, n] : p.ratings_per_video) hist[std::to_string(k)] = n;
  return {{"tasks", tasks}, {"ratings", p.ratings}, {"ratings_per_revision", per_rev}, {"ratings_per_video", hist}};
}

AnnotationService::AnnotationService(std::vector<TaskSpec> tasks, std::vector<std::string> annotators,
                                     std::filesystem::path store_path, ServiceConfig config, Clock clock)
    : config_(config), clock_(std::move(clock)), store_(std::move(store_path)) {
  if (config_.required_raters < 1) throw Error(Errc::InvalidConfig, "required_raters must be positive");
  if (!clock_) {
    clock_ = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch()).count();
    };
  }
  for (auto& a : annotators) register_annotator(a);
  for (auto& t : tasks) {
    if (t.left_video == t.right_video) throw Error(Errc::InvalidConfig, "task " + t.task_id + " pairs a video with itself");
    const std::string id = t.task_id;
    TaskRuntime rt;
    rt.spec = std::move(t);
    if (!tasks_.emplace(id, std::move(rt)).second) throw Error(Errc::InvalidConfig, "duplicate task id " + id);
    order_.push_back(id);
  }
  for (const auto& r : store_.load()) {
    records_.push_back(r);
    apply(r);
  }
}

void AnnotationService::register_annotator(const std::string& id) {
  if (id.empty()) throw Error(Errc::InvalidConfig, "empty annotator id");
  std::lock_guard lock(mu_);
  annotators_.insert(id);
}

AnnotationService::TaskRuntime& AnnotationService::find(const std::string& task_id) {
  const auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw Error(Errc::UnknownTask, task_id);
  return it->second;
}

AnnotationTask AnnotationService::view(const TaskRuntime& t) const {
  return {t.spec.task_id, t.spec.left_video, t.spec.right_video, t.revision, config_.required_raters, t.state};
}

void AnnotationService::expire(TaskRuntime& t, std::int64_t now) {
  for (auto it = t.in_flight.begin(); it != t.in_flight.end();) {
    const bool stale = now - it->second > config_.assignment_ttl.count() && !t.partial.count(it->first);
    it = stale ? t.in_flight.erase(it) : std::next(it);
  }
}

void AnnotationService::apply(const RatingRecord& r) {
  TaskRuntime& t = find(r.task_id);
  if (r.revision != t.revision) {
    throw Error(Errc::MalformedHeader, "ratings store holds revision " + std::to_string(r.revision) + " for task " +
                                           r.task_id + " at revision " + std::to_string(t.revision));
  }
  const std::string& expected = r.slot == Slot::Left ? t.spec.left_video : t.spec.right_video;
  if (r.video_id != expected) throw Error(Errc::UnknownVideoId, r.video_id + " is not the " + std::string(datakit::slot_name(r.slot)) + " video of " + r.task_id);
  t.ever_rated.insert(r.annotator_id);
  auto& slots = t.partial[r.annotator_id];
  slots[r.slot] = r.score;
  if (slots.size() == 2) {
    t.partial.erase(r.annotator_id);
    t.in_flight.erase(r.annotator_id);
    t.completed.insert(r.annotator_id);
    if (static_cast<int>(t.completed.size()) >= config_.required_raters) close_revision(t);
  }
}

void AnnotationService::close_revision(TaskRuntime& t) {
  bool qa = false;
  for (Slot slot : {Slot::Left, Slot::Right}) {
    std::vector<int> scores;
    for (const auto& r : records_) {
      if (r.task_id == t.spec.task_id && r.revision == t.revision && r.slot == slot) scores.push_back(r.score);
    }
    qa = qa || datakit::classify_disagreement(scores) == datakit::DisagreementClass::QARequired;
  }
  if (qa && t.qa_rounds < config_.max_qa_rounds) {
    ++t.revision;
    ++t.qa_rounds;
    t.state = TaskState::QAReopened;
    t.completed.clear();
    t.partial.clear();
    t.in_flight.clear();
  } else {
    t.state = TaskState::Complete;
  }
}

std::optional<AnnotationTask> AnnotationService::assign_task(const std::string& annotator) {
  std::lock_guard lock(mu_);
  if (!annotators_.count(annotator)) throw Error(Errc::UnknownAnnotator, annotator);
  const std::int64_t now = clock_();
  TaskRuntime* best = nullptr;
  for (const auto& id : order_) {
    TaskRuntime& t = tasks_.at(id);
    if (t.state == TaskState::Complete) continue;
    expire(t, now);
    if (t.in_flight.count(annotator)) return view(t);
  }
  auto load = [](const TaskRuntime& t) { return t.completed.size() + t.in_flight.size(); };
  for (const auto& id : order_) {
    TaskRuntime& t = tasks_.at(id);
    if (t.state == TaskState::Complete || t.ever_rated.count(annotator)) continue;
    if (static_cast<int>(load(t)) >= config_.required_raters) continue;
    if (!best) {
      best = &t;
      continue;
    }
    const bool qa = t.state == TaskState::QAReopened;
    const bool best_qa = best->state == TaskState::QAReopened;
    if ((qa && !best_qa) || (qa == best_qa && load(t) < load(*best))) best = &t;
  }
  if (!best) return std::nullopt;
  best->in_flight[annotator] = now;
  return view(*best);
}

SubmitAck AnnotationService::submit_rating(const std::string& annotator, const std::string& task_id, Slot slot, int score) {
  std::lock_guard lock(mu_);
  if (!annotators_.count(annotator)) throw Error(Errc::UnknownAnnotator, annotator);
  TaskRuntime& t = find(task_id);
  if (score < 1 || score > 5) throw Error(Errc::ScoreOutOfRange, "score " + std::to_string(score) + " outside 1..5");
  for (const auto& r : records_) {
    if (r.task_id == task_id && r.annotator_id == annotator && r.slot == slot && r.revision == t.revision) {
      throw Error(Errc::DuplicateSubmission, annotator + " already rated " + std::string(datakit::slot_name(slot)) +
                                                 " of " + task_id + " at revision " + std::to_string(t.revision));
    }
  }
  if (t.state == TaskState::Complete || !t.in_flight.count(annotator)) {
    throw Error(Errc::TaskNotAssigned, task_id + " is not assigned to " + annotator);
  }
  RatingRecord r{task_id, slot, slot == Slot::Left ? t.spec.left_video : t.spec.right_video, annotator, score, clock_(), t.revision};
  store_.append(r);
  records_.push_back(r);
  const int revision = t.revision;
  apply(r);
  return {task_id, slot, revision, !t.partial.count(annotator) && !t.in_flight.count(annotator), t.state};
}

Progress AnnotationService::progress() const {
  std::lock_guard lock(mu_);
  Progress p;
  for (const auto& [id, t] : tasks_) ++p.tasks[t.state];
  p.ratings = records_.size();
  std::map<std::string, int> per_video;
  for (const auto& r : records_) {
    ++p.ratings_per_revision[r.revision];
    ++per_video[r.video_id];
  }
  for (const auto& [video, n] : per_video) ++p.ratings_per_video[n];
  return p;
}

std::optional<AnnotationTask> AnnotationService::task(const std::string& task_id) const {
  std::lock_guard lock(mu_);
  const auto it = tasks_.find(task_id);
  if (it == tasks_.end()) return std::nullopt;
  return view(it->second);
}

std::vector<RatingRecord> AnnotationService::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

}  // namespace peavs::service
