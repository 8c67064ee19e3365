#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "otoclab/qla.hpp"
#include "otoclab/spin.hpp"

namespace otoclab {

inline constexpr const char* kVersion = "0.1.0";

const std::vector<std::string>& experiment_catalog();

// Everything a run needs. Unset optionals take per-experiment defaults.
struct ExperimentConfig {
    std::string experiment;
    std::optional<int> n;
    double j = 1.0;
    double h_field = 0.5;
    double g_field = 1.05;
    std::string state = "infinite-temp";  // infinite-temp, thermal:T, haar:seed, plus-x
    std::string w = "1:z";                 // site:axis
    std::optional<std::string> v;          // defaults to the last site, z
    std::optional<double> t_max;
    std::optional<double> t_step;
    std::uint64_t seed = 1;
    std::uint64_t shots = 0;               // weak-measurement shots; 0 = exact
    std::string format = "csv";
    std::string out;                       // empty writes to stdout
    // experiment extras
    std::optional<long> trajectories;
    std::optional<double> dt;
    std::optional<int> khat;
    std::optional<std::vector<double>> phis;
};

// Reads the JSON keys used by the command line (dashes, not underscores).
// Unknown keys raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

// Fills defaults and validates; the returned config echoes every value used.
ExperimentConfig resolve(const ExperimentConfig& c);

LocalObservable parse_local_observable(const std::string& s, int n);
Mat parse_state(const std::string& s, const Mat& hamiltonian, int n);

// abcd with w3 = (-1)^a, v2 = (-1)^b, w2 = (-1)^c, v1 = (-1)^d
std::string abcd_label(double v1, double w2, double v2, double w3);

// A column is either numeric or text.
struct Column {
    std::string name;
    std::vector<double> numbers;
    std::vector<std::string> text;
    bool is_text = false;
    std::size_t size() const { return is_text ? text.size() : numbers.size(); }
};

struct Table {
    std::vector<Column> columns;
    Column& add(const std::string& name, bool is_text = false);
    Column& at(const std::string& name);
    const Column& at(const std::string& name) const;
    std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
};

struct ExperimentResult {
    ExperimentConfig config;  // resolved
    Table table;
    nlohmann::json summary;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

std::string format_number(double x);  // 17 significant digits
std::string to_csv(const Table& t);
nlohmann::json to_json(const ExperimentResult& r);
Table table_from_json(const nlohmann::json& j);

// Writes through a temporary file and renames it into place.
void write_atomic(const std::string& path, const std::string& content);
// Serializes in the configured format to config.out (or returns the text
// when out is empty).
std::string emit(const ExperimentResult& r);

}  // namespace otoclab
