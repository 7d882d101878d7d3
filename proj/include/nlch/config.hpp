// Flat "key = value" experiment configs with [domain], [kernel],
// [potential], [sim], [sweep] sections. Unknown keys or sections are
// errors, so configs double as diff-able experiment records.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nlch/analysis.hpp"
#include "nlch/dynamics.hpp"

namespace nlch {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    SimConfig sim;
    std::vector<double> sweep_grid;
    EpsReference reference = EpsReference::DirectP;
    int sweep_snapshots = 50;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path); // ConfigError on I/O or syntax

std::string scheme_name(Scheme s);
std::string initial_condition_name(const InitialCondition& ic);
std::string conv_path_name(ConvPath p);

} // namespace nlch
