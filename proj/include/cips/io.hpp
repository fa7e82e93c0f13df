#ifndef CIPS_IO_HPP
#define CIPS_IO_HPP

#include <map>
#include <string>
#include <vector>

#include "cips/meanfield.hpp"
#include "cips/state.hpp"

namespace cips {
namespace io {

// Doubles are rendered with 17 significant digits so that re-running a
// configuration reproduces byte-identical CSV bodies.
std::string format_double(double value);

using Row = std::vector<std::string>;

void write_csv(const std::string& path, const std::string& header,
               const std::vector<Row>& rows);

// Returns data rows; the header line (if any) is placed in *header.
std::vector<Row> read_csv(const std::string& path, std::string* header = nullptr);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

void ensure_directory(const std::string& path);

// Snapshot of a class configuration: long-format CSV "t,k,count" plus a
// JSON side file with {L, N, seed, model}.
void write_snapshot(const std::string& csv_path, const std::string& json_path,
                    const ClassConfig& config, double t, std::uint64_t seed,
                    const std::string& model);
ClassConfig read_snapshot(const std::string& csv_path, const std::string& json_path);

// Mean-field solution round-trip: f.csv (and p.csv when tracked) hold
// "t,k,value" rows over the node grid; the grid and rho live in meta.json
// written by the caller.
void write_solution(const std::string& dir, const MeanFieldSolution& solution);
MeanFieldSolution read_solution(const std::string& dir, double rho);

}  // namespace io
}  // namespace cips

#endif  // CIPS_IO_HPP
