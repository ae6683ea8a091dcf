#pragma once

#include "hetfx/core_regression.hpp"

#include <string>
#include <vector>

namespace hetfx {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws DataError when the column is missing.
  std::size_t column(const std::string& name) const;
};

/// Comma-separated, header required, no quoting of embedded commas.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);
void write_csv(const std::string& path, const CsvTable& table);
std::string to_csv_string(const CsvTable& table);

/// %.17g, which round-trips every double.
std::string format_double(double v);

/// Binds the named columns. The treatment column must hold integers 0..J;
/// J < 0 takes J from the largest value. Errors name the offending column and
/// row. When `add_constant` a leading column of ones labelled "1" is inserted.
Dataset dataset_from_csv(const CsvTable& table, const std::string& outcome, const std::string& treatment,
                         const std::vector<std::string>& covariates, bool add_constant, int J = -1);

/// Columns y, d, then the covariates (constant columns labelled "1" skipped).
CsvTable dataset_to_csv(const Dataset& data, const std::string& outcome = "y", const std::string& treatment = "d");

}  // namespace hetfx
