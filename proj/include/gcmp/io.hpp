#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gcmp/catalog.hpp"
#include "gcmp/inference.hpp"
#include "gcmp/intensity.hpp"
#include "gcmp/likelihood.hpp"
#include "gcmp/simulator.hpp"

namespace gcmp::io {

struct LoadedModel {
  IntensityModel model;
  std::optional<MarkovSpec> markov;
  // Present for catalog models that come with their own observation scheme.
  std::optional<ObservationScheme> scheme;
  std::string time_unit;
};

/// Model configuration: {"catalog": "illness_death" | "illness_death_hybrid" |
/// "dementia", ...}, {"type": "markov", ...} or {"type": "intensities", ...}.
LoadedModel parse_model(const std::string& text, const std::string& source = "<model>");
LoadedModel load_model(const std::string& path);

/// {"horizon": C, "death_component": name, "components": {name: {"visits": [...],
/// "visit_every": h, "windows": [[a, b], ...], "continuous": bool, "retrospective": bool}}}
ObservationScheme parse_scheme(const std::string& text, const IntensityModel& model,
                               const std::string& source = "<scheme>");
ObservationScheme load_scheme(const std::string& path, const IntensityModel& model);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);
double parse_double(const std::string& text, const std::string& where);
/// Comma-separated natural-scale values.
Eigen::VectorXd parse_theta(const std::string& text, std::size_t expected);

/// subject_id,component,status,t1,t2[,covariates...]
void write_dataset(std::ostream& out, const IntensityModel& model, const Dataset& data);
Dataset read_dataset(std::istream& in, const IntensityModel& model, double horizon,
                     const std::string& source = "<data>");
Dataset load_dataset(const std::string& path, const IntensityModel& model, double horizon);

/// subject_id,component,jump_time (blank when no jump before the horizon).
void write_truth(std::ostream& out, const IntensityModel& model,
                 const std::vector<std::string>& ids, const std::vector<SimulatedPath>& paths);

void write_fit_report(std::ostream& out, const FitResult& fit);

}  // namespace gcmp::io
