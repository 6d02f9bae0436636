#pragma once

#include <map>
#include <string>
#include <vector>

#include "gfrag/core.hpp"

namespace gfrag {

// Flat "key = value" file; '#' starts a comment, values may be quoted.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::string& path);

struct SolverSettings {
    double tol = 1e-10;
    long max_steps = 5'000'000;
    double safety = 0.9;
};

struct LoadedConfig {
    ProblemConfig problem;
    SolverSettings solver;
    KeyValues resolved;  // every key with defaults filled in
};

// Relative table paths are resolved against base_dir.
LoadedConfig load_config(const KeyValues& kv, const std::string& base_dir = ".");
LoadedConfig load_config_file(const std::string& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

CsvTable read_csv(const std::string& path);
Table read_table(const std::string& path);  // first two columns

std::string format_double(double v);
std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& columns);
// Writes via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& content);

GridFunction grid_function_from_csv(const CsvTable& t, const Grid& grid, std::size_t column = 1);

}  // namespace gfrag
