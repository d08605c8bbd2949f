#pragma once

// File formats. CSV files may carry `# key=value` comment lines, which
// readers skip; JSON artifacts carry a top-level "format_version".

#include <Eigen/Dense>

#include <json.hpp>

#include <string>
#include <vector>

#include "gapar/clustering.hpp"
#include "gapar/gapselect.hpp"
#include "gapar/switching.hpp"

namespace gapar::io {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

struct SeriesData {
  Eigen::VectorXd values;
  std::vector<int> states;  // empty when the file has no state column
};

// `t,x[,state]`; a header row is optional.
SeriesData read_series_csv(const std::string& path);
void write_series_csv(const std::string& path, const Eigen::VectorXd& values, const std::vector<int>& states,
                      const Json& config);

// Rows psi_1..psi_L (zero intercept, unit variance).
std::vector<ArFilterd> read_filters_csv(const std::string& path);
void write_filters_csv(const std::string& path, const std::vector<ArFilterd>& filters, const Json& config);

// Two columns: M and a value.
void write_curve_csv(const std::string& path, const std::string& value_name, const std::vector<double>& values,
                     const Json& config);

Json filter_to_json(const ArFilterd& f);
ArFilterd filter_from_json(const Json& j);
Json model_to_json(const SwitchingArModel& model);
SwitchingArModel model_from_json(const Json& j);

Json fit_to_json(const FitResult& fit);
Json curves_to_json(const GapCurves& curves);
Json report_to_json(const BenchmarkReport& report);
// Methods as rows, selected M = 1..M_max as columns.
void write_report_csv(const std::string& path, const BenchmarkReport& report, const Json& config);

Json read_json(const std::string& path);
// Adds format_version and the config echo, then writes with a fixed layout.
void write_json(const std::string& path, Json body, const Json& config);

// %.17g, so values round-trip.
std::string format_double(double v);

}  // namespace gapar::io
