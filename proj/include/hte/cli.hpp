#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hte/csv.hpp"
#include "hte/design.hpp"

namespace hte {

enum ExitCode : int {
  kExitOk = 0,
  kExitSchema = 2,
  kExitNumerical = 3,
  kExitIo = 4,
};

struct DatasetSchema {
  std::string outcome;
  std::vector<std::string> covariates;
  std::optional<std::string> weight_column;
  std::optional<std::string> pi_column;
  std::optional<std::string> stratum_column;
  std::optional<std::string> psu_column;
  std::optional<double> pop_size;
  std::optional<double> hajek_total;
};

struct Dataset {
  Matrix X;  // covariates only, in schema order
  Vector y;
  SurveyDesign design;
  Index rows_dropped = 0;  // rows rejected for missing values
};

// Validates the schema against the table and builds the survey design.
// Throws DesignError on schema violations.
Dataset load_dataset(const CsvTable& table, const DatasetSchema& schema);

// Runs one command; args excludes the program name. Returns an ExitCode.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hte
