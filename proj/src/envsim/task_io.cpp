#include "elue/envsim/task_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "elue/error.hpp"

namespace elue::envsim {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    auto b = field.find_first_not_of(" \t\r");
    auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

std::string format_tasks(const std::vector<TaskSpec>& tasks) {
  std::string out;
  for (const auto& t : tasks) {
    out += std::string(to_string(t.family)) + "," + std::to_string(t.task_id) + "," + fmt17(t.goal[0]) + "," +
           fmt17(t.goal[1]) + "," + fmt17(t.rotation_angle) + "," + std::to_string(t.seed) + "\n";
  }
  return out;
}

std::vector<TaskSpec> parse_tasks(std::string_view text) {
  std::vector<TaskSpec> tasks;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto f = split_commas(line);
    if (f.size() != 6) {
      throw FormatError("task list line " + std::to_string(line_no) + ": expected 6 fields, got " +
                        std::to_string(f.size()));
    }
    try {
      TaskSpec t;
      t.family = parse_family(f[0]);
      t.task_id = std::stoll(f[1]);
      t.goal = {std::stod(f[2]), std::stod(f[3])};
      t.rotation_angle = std::stod(f[4]);
      t.seed = std::stoull(f[5]);
      tasks.push_back(t);
    } catch (const std::logic_error& e) {
      throw FormatError("task list line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw FormatError("task list line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return tasks;
}

void write_tasks_file(const std::string& path, const std::vector<TaskSpec>& tasks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << format_tasks(tasks);
}

std::vector<TaskSpec> read_tasks_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open task list '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_tasks(ss.str());
}

}  // namespace elue::envsim
