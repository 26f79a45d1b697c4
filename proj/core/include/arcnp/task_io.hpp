#pragma once

#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "arcnp/types.hpp"

namespace arcnp {

/// {"context": [[x, y, channel], ...], "target_x": [[x, channel], ...],
///  "target_y": [y, ...]}   ("target_y" omitted when absent)
nlohmann::json task_to_json(const Task& task);
Task task_from_json(const nlohmann::json& doc);

/// One task per line.
void write_tasks_jsonl(std::ostream& out, const std::vector<Task>& tasks);
std::vector<Task> read_tasks_jsonl(std::istream& in);

}  // namespace arcnp
