#include "gapar/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gapar/error.hpp"

namespace gapar::io {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  std::size_t used = 0;
  try {
    out = std::stod(t, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == t.size();
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  return out;
}

void write_comments(std::ostream& out, const Json& config) {
  out << "# format_version=" << kFormatVersion << '\n';
  if (!config.is_object()) return;
  for (const auto& [key, value] : config.items())
    out << "# " << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
}

[[noreturn]] void parse_error(const std::string& path, std::size_t line, const std::string& what) {
  throw InvalidInput(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SeriesData read_series_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<double> values;
  std::vector<int> states;
  std::string line;
  std::size_t lineno = 0;
  std::size_t columns = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split(t, ',');
    double first = 0;
    if (!header_seen && values.empty() && !parse_double(fields[0], first)) {
      header_seen = true;
      if (fields.size() < 2 || trim(fields[1]) != "x") parse_error(path, lineno, "expected header 't,x[,state]'");
      columns = fields.size();
      continue;
    }
    if (columns == 0) columns = fields.size();
    if (columns < 2 || columns > 3) parse_error(path, lineno, "expected 2 or 3 columns");
    if (fields.size() != columns)
      parse_error(path, lineno, "expected " + std::to_string(columns) + " fields, found " + std::to_string(fields.size()));
    double x = 0;
    if (!parse_double(fields[1], x)) parse_error(path, lineno, "invalid number '" + trim(fields[1]) + "'");
    if (!std::isfinite(x)) parse_error(path, lineno, "non-finite value");
    values.push_back(x);
    if (columns == 3) {
      double s = 0;
      if (!parse_double(fields[2], s) || s < 0 || s != std::floor(s))
        parse_error(path, lineno, "invalid state '" + trim(fields[2]) + "'");
      states.push_back(static_cast<int>(s));
    }
  }
  if (values.empty()) throw InvalidInput(path + ": no data rows");
  SeriesData out;
  out.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  out.states = std::move(states);
  return out;
}

void write_series_csv(const std::string& path, const Eigen::VectorXd& values, const std::vector<int>& states,
                      const Json& config) {
  if (!states.empty() && states.size() != static_cast<std::size_t>(values.size()))
    throw InvalidInput("write_series_csv: state path length mismatch");
  auto out = open_out(path);
  write_comments(out, config);
  out << (states.empty() ? "t,x\n" : "t,x,state\n");
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out << i << ',' << format_double(values[i]);
    if (!states.empty()) out << ',' << states[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

std::vector<ArFilterd> read_filters_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<ArFilterd> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split(t, ',');
    double v = 0;
    if (out.empty() && !parse_double(fields[0], v)) continue;  // header
    Eigen::VectorXd psi(static_cast<Eigen::Index>(fields.size()));
    for (std::size_t k = 0; k < fields.size(); ++k)
      if (!parse_double(fields[k], psi[static_cast<Eigen::Index>(k)]))
        parse_error(path, lineno, "invalid number '" + trim(fields[k]) + "'");
    if (!out.empty() && psi.size() != out.front().order())
      parse_error(path, lineno, "row order differs from the first row");
    out.emplace_back(psi);
  }
  if (out.empty()) throw InvalidInput(path + ": no filters");
  return out;
}

void write_filters_csv(const std::string& path, const std::vector<ArFilterd>& filters, const Json& config) {
  auto out = open_out(path);
  write_comments(out, config);
  const Eigen::Index L = filters.empty() ? 0 : filters.front().order();
  for (Eigen::Index l = 1; l <= L; ++l) out << (l > 1 ? "," : "") << "psi_" << l;
  out << '\n';
  for (const auto& f : filters) {
    for (Eigen::Index l = 0; l < L; ++l) out << (l > 0 ? "," : "") << format_double(f.coeffs[l]);
    out << '\n';
  }
}

void write_curve_csv(const std::string& path, const std::string& value_name, const std::vector<double>& values,
                     const Json& config) {
  auto out = open_out(path);
  write_comments(out, config);
  out << "M," << value_name << '\n';
  for (std::size_t m = 0; m < values.size(); ++m) out << m + 1 << ',' << format_double(values[m]) << '\n';
}

Json filter_to_json(const ArFilterd& f) {
  return Json{{"intercept", f.intercept},
              {"coeffs", std::vector<double>(f.coeffs.data(), f.coeffs.data() + f.coeffs.size())},
              {"noise_variance", f.noise_variance}};
}

ArFilterd filter_from_json(const Json& j) {
  try {
    const auto c = j.at("coeffs").get<std::vector<double>>();
    ArFilterd f(Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())));
    f.intercept = j.value("intercept", 0.0);
    f.noise_variance = j.value("noise_variance", 1.0);
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("filter JSON: ") + e.what());
  }
}

namespace {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) r[static_cast<std::size_t>(k)] = m(i, k);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

Json model_to_json(const SwitchingArModel& model) {
  Json filters = Json::array();
  for (const auto& f : model.filters) filters.push_back(filter_to_json(f));
  return Json{{"filters", filters},
              {"transition", matrix_to_json(model.transition)},
              {"initial", std::vector<double>(model.initial.data(), model.initial.data() + model.initial.size())}};
}

SwitchingArModel model_from_json(const Json& j) {
  SwitchingArModel model;
  try {
    for (const auto& f : j.at("filters")) model.filters.push_back(filter_from_json(f));
    const auto rows = j.at("transition").get<std::vector<std::vector<double>>>();
    const auto m = static_cast<Eigen::Index>(rows.size());
    model.transition.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != m)
        throw InvalidInput("model JSON: transition matrix must be square");
      for (Eigen::Index k = 0; k < m; ++k) model.transition(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    const auto init = j.at("initial").get<std::vector<double>>();
    model.initial = Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(init.size()));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("model JSON: ") + e.what());
  }
  model.validate();
  return model;
}

Json fit_to_json(const FitResult& fit) {
  return Json{{"model", model_to_json(fit.model)},
              {"loglik", fit.loglik},
              {"mspe", fit.mspe},
              {"n_iter", fit.n_iter},
              {"converged", fit.converged},
              {"ridge_used", fit.ridge_used},
              {"reseeded", fit.reseeded},
              {"loglik_trace", fit.loglik_trace}};
}

Json curves_to_json(const GapCurves& c) {
  std::vector<double> gaps;
  for (std::size_t m = 1; m <= c.max_states; ++m) gaps.push_back(c.gap(m));
  return Json{{"max_states", c.max_states},   {"log_observed", c.observed}, {"log_reference", c.reference},
              {"gap", gaps},                  {"r_used", c.r_used},         {"selected_M", c.selected},
              {"argmax_gap_M", c.argmax_gap}, {"warnings", c.warnings}};
}

Json report_to_json(const BenchmarkReport& r) {
  const auto& s = r.config.scenario;
  Json hist = Json::object();
  Json rates = Json::object();
  for (const auto& [m, h] : r.histograms) {
    hist[method_name(m)] = h;
    rates[method_name(m)] = r.correct_rate(m);
  }
  Json records = Json::array();
  for (const auto& rec : r.records) {
    Json j{{"index", rec.index}, {"skipped", rec.skipped}};
    if (rec.skipped) {
      j["error"] = rec.error;
    } else {
      for (const auto& [m, sel] : rec.selected) j["selected"][method_name(m)] = sel;
      if (rec.argmax_gap_b) j["argmax_gap_b"] = *rec.argmax_gap_b;
      j["r_estimated"] = rec.r_estimated;
    }
    records.push_back(j);
  }
  return Json{{"scenario",
               {{"name", s.name},
                {"order", s.order},
                {"states", s.states},
                {"radius", s.radius},
                {"stay", s.stay},
                {"mean_low", s.mean_low},
                {"mean_high", s.mean_high}}},
              {"instances", r.config.instances},
              {"length", r.config.length},
              {"max_states", r.config.max_states},
              {"seed", r.config.seed},
              {"skipped", r.skipped},
              {"histograms", hist},
              {"correct_rate", rates},
              {"argmax_gap_b_histogram", r.argmax_gap_histogram},
              {"records", records}};
}

void write_report_csv(const std::string& path, const BenchmarkReport& report, const Json& config) {
  auto out = open_out(path);
  write_comments(out, config);
  out << "method";
  for (std::size_t m = 1; m <= report.config.max_states; ++m) out << ",M" << m;
  out << ",skipped\n";
  for (const auto& [method, h] : report.histograms) {
    out << method_name(method);
    for (auto c : h) out << ',' << c;
    out << ',' << report.skipped << '\n';
  }
}

Json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

void write_json(const std::string& path, Json body, const Json& config) {
  body["format_version"] = kFormatVersion;
  body["config"] = config;
  auto out = open_out(path);
  out << body.dump(2) << '\n';
}

}  // namespace gapar::io
