#include "arcnp/task_io.hpp"

#include <istream>
#include <ostream>
#include <string>

namespace arcnp {

using nlohmann::json;

json task_to_json(const Task& task) {
  json context = json::array();
  for (const auto& p : task.context) context.push_back({p.x, p.y, p.channel});
  json xs = json::array();
  for (const auto& t : task.targets) xs.push_back({t.x, t.channel});
  json doc{{"context", std::move(context)}, {"target_x", std::move(xs)}};
  if (task.target_outputs) doc["target_y"] = *task.target_outputs;
  return doc;
}

Task task_from_json(const json& doc) {
  Task task;
  for (const auto& p : doc.at("context")) {
    task.context.push_back(
        {p.at(0).get<double>(), p.at(1).get<double>(),
         p.size() > 2 ? p.at(2).get<int>() : 0});
  }
  for (const auto& t : doc.at("target_x")) {
    if (t.is_array()) {
      task.targets.push_back(
          {t.at(0).get<double>(), t.size() > 1 ? t.at(1).get<int>() : 0});
    } else {
      task.targets.push_back({t.get<double>(), 0});
    }
  }
  if (doc.contains("target_y")) {
    task.target_outputs = doc.at("target_y").get<std::vector<double>>();
  }
  task.validate();
  return task;
}

void write_tasks_jsonl(std::ostream& out, const std::vector<Task>& tasks) {
  for (const auto& t : tasks) out << task_to_json(t).dump() << '\n';
}

std::vector<Task> read_tasks_jsonl(std::istream& in) {
  std::vector<Task> tasks;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    tasks.push_back(task_from_json(json::parse(line)));
  }
  return tasks;
}

}  // namespace arcnp
