#include "slgp/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace slgp::io {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& text, const std::string& file, std::size_t line) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError(file, line, "not a number: '" + text + "'");
  }
  return v;
}

/// Header plus numeric rows with a fixed column count. Blank lines are skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_numbers;
};

Table read_table(const std::filesystem::path& path, std::size_t min_columns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string file = path.string();
  Table table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      if (table.header.size() < min_columns) {
        throw ParseError(file, line_no, "expected at least " + std::to_string(min_columns) + " columns");
      }
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw ParseError(file, line_no, "expected " + std::to_string(table.header.size()) +
                                          " fields, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_number(c, file, line_no));
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  if (table.header.empty()) throw ValidationError(file + ": file is empty");
  return table;
}

void expect_header(const Table& t, const std::vector<std::string>& names,
                   const std::filesystem::path& path) {
  if (t.header != names) {
    std::string want;
    for (const auto& n : names) want += (want.empty() ? "" : ",") + n;
    throw ParseError(path.string(), 1, "expected header '" + want + "'");
  }
}

}  // namespace

ParseError::ParseError(const std::string& file, std::size_t line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Dataset read_observations(const std::filesystem::path& path) {
  const Table t = read_table(path, 2);
  expect_header(t, {"x", "t"}, path);
  if (t.rows.empty()) throw ValidationError(path.string() + ": no observations");
  std::string offenders;
  std::size_t bad = 0;
  std::vector<Observation> obs;
  obs.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double x = t.rows[i][0];
    const double y = t.rows[i][1];
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
      if (bad < 20) {
        offenders += "\n  line " + std::to_string(t.line_numbers[i]) + ": x=" + format_double(x) +
                     ", t=" + format_double(y);
      }
      ++bad;
      continue;
    }
    obs.push_back({x, y});
  }
  if (bad > 0) {
    throw ValidationError(path.string() + ": " + std::to_string(bad) +
                          " observation(s) outside [0, 1]" + offenders +
                          (bad > 20 ? "\n  ..." : ""));
  }
  return Dataset(std::move(obs));
}

void write_observations(std::ostream& out, const Dataset& data) {
  out << "x,t\n";
  for (const auto& o : data.observations()) {
    out << format_double(o.x) << ',' << format_double(o.t) << '\n';
  }
}

void write_field(std::ostream& out, std::span<const double> x_grid,
                 std::span<const DensityGrid> field) {
  if (x_grid.size() != field.size()) throw std::invalid_argument("one density per x is required");
  out << "x,t,density\n";
  for (std::size_t i = 0; i < field.size(); ++i) {
    const auto& slice = field[i];
    const std::string x = format_double(x_grid[i]);
    for (std::size_t k = 0; k < slice.grid->size(); ++k) {
      out << x << ',' << format_double(slice.grid->node(k)) << ','
          << format_double(slice.values[static_cast<Eigen::Index>(k)]) << '\n';
    }
  }
}

FieldTable read_field(const std::filesystem::path& path) {
  const Table t = read_table(path, 3);
  expect_header(t, {"x", "t", "density"}, path);
  if (t.rows.empty()) throw ValidationError(path.string() + ": no rows");
  FieldTable out;
  std::vector<std::vector<double>> ts;
  std::vector<std::vector<double>> dens;
  for (const auto& row : t.rows) {
    if (out.x_grid.empty() || row[0] != out.x_grid.back()) {
      out.x_grid.push_back(row[0]);
      ts.emplace_back();
      dens.emplace_back();
    }
    ts.back().push_back(row[1]);
    dens.back().push_back(row[2]);
  }
  const auto grid = std::make_shared<const QuadratureGrid>(ts.front());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] != ts.front()) {
      throw ValidationError(path.string() + ": t grid differs between x slices");
    }
    out.slices.push_back({grid, Eigen::Map<const Eigen::VectorXd>(
                                    dens[i].data(), static_cast<Eigen::Index>(dens[i].size()))});
  }
  return out;
}

void write_ensemble(std::ostream& out, const PosteriorEnsemble& ensemble) {
  const auto p = ensemble.draws.rows();
  for (Eigen::Index j = 0; j < p; ++j) out << (j ? "," : "") << "eps_" << (j + 1);
  out << '\n';
  for (Eigen::Index d = 0; d < ensemble.draws.cols(); ++d) {
    for (Eigen::Index j = 0; j < p; ++j) {
      out << (j ? "," : "") << format_double(ensemble.draws(j, d));
    }
    out << '\n';
  }
}

PosteriorEnsemble read_ensemble(const std::filesystem::path& path) {
  const Table t = read_table(path, 1);
  if (t.rows.empty()) throw ValidationError(path.string() + ": ensemble has no draws");
  PosteriorEnsemble e;
  e.draws.resize(static_cast<Eigen::Index>(t.header.size()), static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t d = 0; d < t.rows.size(); ++d) {
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      e.draws(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(d)) = t.rows[d][j];
    }
  }
  return e;
}

void write_curve(std::ostream& out, std::span<const double> x_grid,
                 std::span<const double> values) {
  out << "x,value\n";
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    out << format_double(x_grid[i]) << ',' << format_double(values[i]) << '\n';
  }
}

}  // namespace slgp::io
