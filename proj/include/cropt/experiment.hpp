#pragma once

#include "cropt/config.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

namespace cropt {

// Runs the full study grid (locations x test years x strategies x alphas):
// builds scenarios per cell, optimizes, benchmarks the chosen decision on
// the observed season, and returns the report JSON. Cells run concurrently
// up to cfg.jobs; output ordering follows cell coordinates. Missing weather
// archives fail fast before any optimization (ArchiveError); an individual
// cell failure is recorded and the rest proceed.
nlohmann::ordered_json run_experiment(const ExperimentConfig& cfg);

bool report_has_failures(const nlohmann::ordered_json& report);

// Writes report.json plus the derived tables (improvement.csv,
// freq_<variable>.csv, weather_stats.csv) into output_dir. The tables are
// generated from the report JSON, so replaying a stored report reproduces
// them byte-identically.
void write_report_files(const nlohmann::ordered_json& report, const std::string& output_dir);

// Regenerates only the CSV tables from a stored report.
void replay_report(const std::string& report_path, const std::string& output_dir);

nlohmann::ordered_json load_report(const std::string& report_path);

// Percentage of cells whose optimal decision used each grid level of one
// variable, grouped by (location group, year), one column per strategy.
nlohmann::ordered_json decision_frequency_table(const nlohmann::ordered_json& report,
                                                const std::string& variable);

// Paper-style text rendering with one (s1, s2, s3) percentage triple per level.
std::string render_frequency_table(const nlohmann::ordered_json& report, const std::string& variable);

} // namespace cropt
