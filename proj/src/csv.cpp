#include "hetfx/csv.hpp"

#include "hetfx/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hetfx {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& column, std::size_t row) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error(ErrorKind::DataError, "column '" + column + "', row " + std::to_string(row + 1) +
                                          ": not a finite number: '" + s + "'");
  }
  return v;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorKind::DataError, "column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw Error(ErrorKind::DataError, "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                            " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw Error(ErrorKind::DataError, "empty CSV (no header row)");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::DataError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_csv_string(const CsvTable& table) {
  std::string out;
  auto append_row = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) out += ',';
      out += r[c];
    }
    out += '\n';
  };
  append_row(table.header);
  for (const auto& r : table.rows) append_row(r);
  return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::DataError, "cannot write '" + path + "'");
  out << to_csv_string(table);
}

Dataset dataset_from_csv(const CsvTable& table, const std::string& outcome, const std::string& treatment,
                         const std::vector<std::string>& covariates, bool add_constant, int J) {
  const std::size_t yc = table.column(outcome);
  const std::size_t dc = table.column(treatment);
  std::vector<std::size_t> xc;
  for (const auto& name : covariates) xc.push_back(table.column(name));

  const auto n = static_cast<Index>(table.rows.size());
  const Index offset = add_constant ? 1 : 0;
  Dataset data;
  data.y.resize(n);
  data.d.resize(table.rows.size());
  data.x.resize(n, offset + static_cast<Index>(xc.size()));
  if (add_constant) data.x_labels.emplace_back("1");
  for (const auto& name : covariates) data.x_labels.push_back(name);

  int max_d = 0;
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    data.y[i] = parse_number(row[yc], outcome, static_cast<std::size_t>(i));
    const double dv = parse_number(row[dc], treatment, static_cast<std::size_t>(i));
    if (dv != std::floor(dv) || dv < 0.0 || dv > (J >= 0 ? J : 1e6)) {
      throw Error(ErrorKind::OutOfRangeCategory, "column '" + treatment + "', row " + std::to_string(i + 1) +
                                                     ": category out of range: " + row[dc]);
    }
    data.d[static_cast<std::size_t>(i)] = static_cast<int>(dv);
    max_d = std::max(max_d, static_cast<int>(dv));
    if (add_constant) data.x(i, 0) = 1.0;
    for (std::size_t c = 0; c < xc.size(); ++c) {
      data.x(i, offset + static_cast<Index>(c)) = parse_number(row[xc[c]], covariates[c], static_cast<std::size_t>(i));
    }
  }
  data.J = J >= 0 ? J : max_d;
  return data;
}

CsvTable dataset_to_csv(const Dataset& data, const std::string& outcome, const std::string& treatment) {
  CsvTable t;
  t.header = {outcome, treatment};
  std::vector<Index> cols;
  for (Index c = 0; c < data.x.cols(); ++c) {
    const std::string label = c < static_cast<Index>(data.x_labels.size()) ? data.x_labels[c] : "x" + std::to_string(c + 1);
    if (label == "1") continue;
    cols.push_back(c);
    t.header.push_back(label);
  }
  for (Index i = 0; i < data.n(); ++i) {
    std::vector<std::string> row = {format_double(data.y[i]), std::to_string(data.d[static_cast<std::size_t>(i)])};
    for (Index c : cols) row.push_back(format_double(data.x(i, c)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace hetfx
