#include "isogplm/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace isogplm {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    while (pos < cell.size() && (cell[pos] == ' ' || cell[pos] == '\r')) ++pos;
    if (pos != cell.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << "CSV: cannot parse value '" << cell << "' at row " << row << ", column '"
        << column << "'";
    throw std::invalid_argument(msg.str());
  }
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == ' ') ++start;
  return s.substr(start);
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("CSV: empty input");

  const auto header = split_csv_line(line);
  int y_col = -1, t_col = -1;
  std::vector<int> x_cols;
  std::vector<std::string> names(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) names[j] = trim(header[j]);
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] == "y") y_col = static_cast<int>(j);
    if (names[j] == "t") t_col = static_cast<int>(j);
  }
  if (y_col < 0) throw std::invalid_argument("CSV: missing required column 'y'");
  if (t_col < 0) throw std::invalid_argument("CSV: missing required column 't'");
  for (int k = 1;; ++k) {
    const std::string want = "x" + std::to_string(k);
    bool found = false;
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (names[j] == want) {
        x_cols.push_back(static_cast<int>(j));
        found = true;
        break;
      }
    }
    if (!found) break;
  }

  std::vector<double> ys, ts;
  std::vector<std::vector<double>> xs(x_cols.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << "CSV: row " << row << " has " << cells.size() << " cells, expected "
          << header.size();
      throw std::invalid_argument(msg.str());
    }
    ys.push_back(parse_cell(trim(cells[y_col]), row, "y"));
    ts.push_back(parse_cell(trim(cells[t_col]), row, "t"));
    for (std::size_t k = 0; k < x_cols.size(); ++k)
      xs[k].push_back(parse_cell(trim(cells[x_cols[k]]), row, names[x_cols[k]]));
  }
  if (ys.empty()) throw std::invalid_argument("CSV: no data rows");

  Dataset data;
  const auto n = static_cast<Eigen::Index>(ys.size());
  data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  data.t = Eigen::Map<Eigen::VectorXd>(ts.data(), n);
  data.X.resize(n, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t k = 0; k < xs.size(); ++k)
    data.X.col(static_cast<Eigen::Index>(k)) = Eigen::Map<Eigen::VectorXd>(xs[k].data(), n);
  return data;
}

Dataset read_dataset_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open input file '" + path + "'");
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "y,t";
  for (Eigen::Index j = 0; j < data.p(); ++j) out << ",x" << (j + 1);
  out << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", data.y[i]);
    out << buf;
    std::snprintf(buf, sizeof buf, ",%.17g", data.t[i]);
    out << buf;
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g", data.X(i, j));
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace isogplm
