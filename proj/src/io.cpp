#include "cips/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cips/errors.hpp"

namespace cips {
namespace io {

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<Row>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << header << '\n';
  for (const Row& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
}

std::vector<Row> read_csv(const std::string& path, std::string* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  std::vector<Row> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      first = false;
      if (header) {
        *header = line;
        continue;
      }
    }
    if (line.empty()) continue;
    Row row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << content;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw ConfigError("cannot create directory " + path + ": " + ec.message());
}

void write_snapshot(const std::string& csv_path, const std::string& json_path,
                    const ClassConfig& config, double t, std::uint64_t seed,
                    const std::string& model) {
  std::vector<Row> rows;
  const auto& counts = config.counts();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) continue;
    rows.push_back({format_double(t), std::to_string(k), std::to_string(counts[k])});
  }
  write_csv(csv_path, "t,k,count", rows);

  nlohmann::json meta;
  meta["L"] = config.sites();
  meta["N"] = config.particles();
  meta["seed"] = seed;
  meta["model"] = model;
  write_text(json_path, meta.dump(2) + "\n");
}

ClassConfig read_snapshot(const std::string& csv_path, const std::string& json_path) {
  const nlohmann::json meta = nlohmann::json::parse(read_text(json_path));
  const std::int64_t sites = meta.at("L").get<std::int64_t>();
  const std::int64_t particles = meta.at("N").get<std::int64_t>();

  std::string header;
  std::vector<std::int64_t> counts(1, 0);
  for (const Row& row : read_csv(csv_path, &header)) {
    if (row.size() != 3) throw ConfigError("malformed snapshot row in " + csv_path);
    const std::int64_t k = std::stoll(row[1]);
    const std::int64_t count = std::stoll(row[2]);
    if (static_cast<std::size_t>(k) >= counts.size()) {
      counts.resize(static_cast<std::size_t>(k) + 1, 0);
    }
    counts[static_cast<std::size_t>(k)] = count;
  }
  // Sites not listed are empty.
  std::int64_t listed = 0;
  for (std::size_t k = 1; k < counts.size(); ++k) listed += counts[k];
  if (counts[0] == 0) counts[0] = sites - listed;
  return ClassConfig(std::move(counts), sites, particles);
}

void write_solution(const std::string& dir, const MeanFieldSolution& solution) {
  auto dump = [&](const std::string& name, const std::vector<std::vector<double>>& nodes) {
    std::vector<Row> rows;
    for (std::size_t i = 0; i < solution.grid.size(); ++i) {
      const auto& state = nodes[i];
      for (std::size_t k = 0; k < state.size(); ++k) {
        rows.push_back({format_double(solution.grid[i]), std::to_string(k),
                        format_double(state[k])});
      }
    }
    write_csv(dir + "/" + name, "t,k,value", rows);
  };
  dump("f.csv", solution.f_nodes);
  if (solution.has_p()) dump("p.csv", solution.p_nodes);
}

MeanFieldSolution read_solution(const std::string& dir, double rho) {
  MeanFieldSolution solution;
  solution.rho = rho;

  auto load = [&](const std::string& name, std::vector<std::vector<double>>& nodes,
                  bool build_grid) {
    std::string header;
    std::map<double, std::vector<double>> by_time;
    for (const Row& row : read_csv(dir + "/" + name, &header)) {
      if (row.size() != 3) throw ConfigError("malformed solution row in " + name);
      const double t = std::stod(row[0]);
      const std::size_t k = static_cast<std::size_t>(std::stoll(row[1]));
      auto& state = by_time[t];
      if (k >= state.size()) state.resize(k + 1, 0.0);
      state[k] = std::stod(row[2]);
    }
    for (auto& [t, state] : by_time) {
      if (build_grid) solution.grid.push_back(t);
      nodes.push_back(std::move(state));
    }
  };

  load("f.csv", solution.f_nodes, true);
  if (std::filesystem::exists(dir + "/p.csv")) {
    load("p.csv", solution.p_nodes, false);
    if (solution.p_nodes.size() != solution.grid.size()) {
      throw ConfigError("p.csv grid does not match f.csv grid");
    }
  }
  if (solution.grid.empty()) throw ConfigError("empty mean-field solution in " + dir);
  return solution;
}

}  // namespace io
}  // namespace cips
