#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixdag/data.hpp"
#include "mixdag/evaluate.hpp"
#include "mixdag/graphs.hpp"
#include "mixdag/preestimate.hpp"

namespace mixdag {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Floats with 9 significant digits.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;    // data columns only
    std::vector<std::string> unit_ids;  // from a leading `unit_id` column, else u1..un
    std::vector<std::vector<double>> rows;
};

/// Comma-separated numeric table with a header row. A first column named
/// `unit_id` supplies unit ids.
CsvTable read_csv(const std::string& path);

void write_dataset_csv(const std::string& path, const MixedDataset& x);
void write_matrix_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& header,
                      const std::vector<std::string>& unit_ids);

/// `name  kind  levels  thresholds` with thresholds comma-separated or `-`.
void write_specs(const std::string& path, const std::vector<VariableSpec>& specs);
std::vector<VariableSpec> read_specs(const std::string& path);

/// `unit_id  block_id`.
void write_blocks(const std::string& path, const std::vector<std::string>& unit_ids,
                  const std::vector<std::size_t>& block);
std::vector<std::size_t> read_blocks(const std::string& path, const std::vector<std::string>& unit_ids);

/// Data CSV, spec sidecar and optional block file into one dataset. Without a
/// block file every unit is its own block.
MixedDataset load_dataset(const std::string& data_csv, const std::string& specs_tsv, const std::string& blocks_tsv);

/// `from  to  type  confidence`.
void write_edges(const std::string& path, const Cpdag& g, const std::vector<std::string>& names,
                 const EdgeConfidence* conf = nullptr);
Cpdag read_edges(const std::string& path, const std::vector<std::string>& names);

/// Directed edge list `from  to` (benchmark structures); names become labels.
Dag read_dag_edge_list(const std::string& path);

/// Per block a line `block <id> <size>` followed by the lower triangle, row by row.
void write_covariance(const std::string& path, const BlockCovariance& cov);
/// Units of block <id> are the given groups, in order.
BlockCovariance read_covariance(const std::string& path, const std::vector<std::vector<std::size_t>>& groups);

void write_preestimate(const std::string& path, const PreEstimate& pre, const std::vector<std::string>& names);

/// Creates a directory (and parents); throws std::runtime_error if it cannot be written.
void ensure_directory(const std::string& dir);

}  // namespace mixdag
