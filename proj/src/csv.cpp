#include "fmalign/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace fmalign::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool all_numeric(const std::vector<std::string>& cells) {
  for (const auto& c : cells)
    if (!parse_double(c)) return false;
  return true;
}

}  // namespace

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    const std::string_view cell =
        line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    cells.emplace_back(trim(cell));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<long long> parse_int(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (first && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (first && !all_numeric(cells)) {
      table.header = std::move(cells);
    } else {
      table.rows.push_back(std::move(cells));
      table.line_numbers.push_back(line_no);
    }
    first = false;
  }
  return table;
}

void write_matrix(std::ostream& out, const Matrix& m, const std::vector<std::string>& header) {
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
  }
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

void write_matrix(const std::filesystem::path& path, const Matrix& m,
                  const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_matrix(out, m, header);
}

Matrix read_matrix(const std::filesystem::path& path) {
  const Table t = read_table(path);
  if (t.rows.empty()) return Matrix(0, t.header ? static_cast<Index>(t.header->size()) : 0);
  const std::size_t cols = t.rows.front().size();
  Matrix m(static_cast<Index>(t.rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i].size() != cols)
      throw DataError(path.string() + ": line " + std::to_string(t.line_numbers[i]) + " has " +
                      std::to_string(t.rows[i].size()) + " cells, expected " + std::to_string(cols));
    for (std::size_t j = 0; j < cols; ++j) {
      const auto v = parse_double(t.rows[i][j]);
      if (!v)
        throw DataError(path.string() + ": line " + std::to_string(t.line_numbers[i]) + ", column " +
                        std::to_string(j) + ": not a number '" + t.rows[i][j] + "'");
      m(static_cast<Index>(i), static_cast<Index>(j)) = *v;
    }
  }
  return m;
}

}  // namespace fmalign::csv
