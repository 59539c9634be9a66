#ifndef RELERR_IO_REPORT_HPP
#define RELERR_IO_REPORT_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relerr/errors.hpp"
#include "relerr/io/csv.hpp"

namespace relerr {

struct CoefficientReport {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Serializable fit summary; doubles survive the JSON round trip exactly
// (shortest-round-trip printing on write, strtod on read).
struct FitReport {
  std::string loss;
  double gamma = 0.0;
  std::vector<CoefficientReport> coefficients;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double j_condition_number = 0.0;
  double ci_level = 0.95;
  std::string response;     // response column name, used by cmd_predict
  bool intercept = false;   // whether coefficients[0] is an intercept

  nlohmann::json to_json() const {
    nlohmann::json coefs = nlohmann::json::array();
    for (const auto& c : coefficients)
      coefs.push_back({{"name", c.name},
                       {"estimate", c.estimate},
                       {"std_error", c.std_error},
                       {"ci_low", c.ci_low},
                       {"ci_high", c.ci_high}});
    return nlohmann::json{{"loss", loss},
                          {"gamma", gamma},
                          {"coefficients", coefs},
                          {"objective", objective},
                          {"iterations", iterations},
                          {"converged", converged},
                          {"j_condition_number", j_condition_number},
                          {"ci_level", ci_level},
                          {"response", response},
                          {"intercept", intercept}};
  }

  static FitReport from_json(const nlohmann::json& j) {
    FitReport r;
    try {
      r.loss = j.at("loss").get<std::string>();
      r.gamma = j.at("gamma").get<double>();
      for (const auto& c : j.at("coefficients")) {
        CoefficientReport cr;
        cr.name = c.at("name").get<std::string>();
        cr.estimate = c.at("estimate").get<double>();
        cr.std_error = c.at("std_error").get<double>();
        cr.ci_low = c.at("ci_low").get<double>();
        cr.ci_high = c.at("ci_high").get<double>();
        r.coefficients.push_back(std::move(cr));
      }
      r.objective = j.at("objective").get<double>();
      r.iterations = j.at("iterations").get<int>();
      r.converged = j.at("converged").get<bool>();
      r.j_condition_number = j.at("j_condition_number").get<double>();
      r.ci_level = j.at("ci_level").get<double>();
      r.response = j.value("response", std::string());
      r.intercept = j.value("intercept", false);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("FitReport: malformed model JSON: ") + e.what());
    }
    return r;
  }

  void save(const std::filesystem::path& path) const { atomic_write(path, to_json().dump(2) + "\n"); }

  static FitReport load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open '" + path.string() + "' for reading");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("FitReport: '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return from_json(j);
  }
};

}  // namespace relerr

#endif  // RELERR_IO_REPORT_HPP
