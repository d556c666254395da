#include "fmalign/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "fmalign/csv.hpp"
#include "fmalign/rng.hpp"

namespace fmalign {

void DataMatrix::validate() const {
  for (Index j = 0; j < values.cols(); ++j)
    for (Index i = 0; i < values.rows(); ++i)
      if (!std::isfinite(values(i, j)))
        throw DataError(domain_id + ": non-finite value at row " + std::to_string(i) + ", column " +
                        std::to_string(j));
  if (labels && static_cast<Index>(labels->size()) != values.rows())
    throw DataError(domain_id + ": " + std::to_string(labels->size()) + " labels for " +
                    std::to_string(values.rows()) + " samples");
}

namespace {

std::optional<Label> parse_label(const std::string& cell) {
  if (cell.empty() || cell == "unlabeled") return kUnlabeled;
  const auto v = csv::parse_int(cell);
  if (!v) return std::nullopt;
  return *v < 0 ? kUnlabeled : static_cast<Label>(*v);
}

}  // namespace

DataMatrix load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column) {
  const csv::Table table = csv::read_table(path);
  const std::string name = path.string();
  if (table.rows.empty()) throw DataError(name + ": file has no data rows");

  const std::size_t arity = table.rows.front().size();
  std::optional<std::size_t> label_pos;
  if (label_column) {
    if (!table.header) throw DataError(name + ": label column '" + *label_column + "' requires a header row");
    const auto it = std::find(table.header->begin(), table.header->end(), *label_column);
    if (it == table.header->end()) throw DataError(name + ": no column named '" + *label_column + "'");
    label_pos = static_cast<std::size_t>(it - table.header->begin());
  }
  if (table.header && table.header->size() != arity)
    throw DataError(name + ": header has " + std::to_string(table.header->size()) + " columns but line " +
                    std::to_string(table.line_numbers.front()) + " has " + std::to_string(arity));

  auto column_name = [&](std::size_t j) {
    return table.header ? "'" + (*table.header)[j] + "'" : std::to_string(j);
  };

  DataMatrix out;
  out.domain_id = path.stem().string();
  const Index feature_count = static_cast<Index>(arity) - (label_pos ? 1 : 0);
  out.values.resize(static_cast<Index>(table.rows.size()), feature_count);
  if (label_pos) out.labels.emplace(table.rows.size(), kUnlabeled);

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = table.line_numbers[i];
    if (row.size() != arity)
      throw DataError(name + ": line " + std::to_string(line) + " has " + std::to_string(row.size()) +
                      " cells, expected " + std::to_string(arity));
    Index col = 0;
    for (std::size_t j = 0; j < arity; ++j) {
      if (label_pos && j == *label_pos) {
        const auto label = parse_label(row[j]);
        if (!label)
          throw DataError(name + ": line " + std::to_string(line) + ", column " + column_name(j) +
                          ": invalid label '" + row[j] + "'");
        (*out.labels)[i] = *label;
        continue;
      }
      const auto v = csv::parse_double(row[j]);
      if (!v)
        throw DataError(name + ": line " + std::to_string(line) + ", column " + column_name(j) +
                        ": not a number '" + row[j] + "'");
      if (!std::isfinite(*v))
        throw DataError(name + ": line " + std::to_string(line) + ", column " + column_name(j) +
                        ": non-finite value '" + row[j] + "'");
      out.values(static_cast<Index>(i), col++) = *v;
    }
  }
  return out;
}

std::vector<Label> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<Label> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cells = csv::split_line(line);
    if (cells.size() == 1 && cells.front().empty()) continue;
    const auto label = cells.size() == 1 ? parse_label(cells.front()) : std::nullopt;
    if (!label)
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": invalid label '" + line + "'");
    labels.push_back(*label);
  }
  return labels;
}

Matrix Standardizer::apply(const Matrix& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() * inv_scale.transpose().array();
}

Vector Standardizer::apply_row(const Vector& x) const {
  return ((x - mean).array() * inv_scale.array()).matrix();
}

Standardizer Standardizer::identity(Index features) {
  return {Vector::Zero(features), Vector::Ones(features)};
}

Standardizer fit_standardizer(const Matrix& x) {
  const Index m = x.rows();
  if (m < 2) throw DataError("standardize needs at least two samples, got " + std::to_string(m));
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  s.inv_scale.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().sum() / static_cast<double>(m);
    // Relative floor: variance below rounding noise of the column mean counts as zero.
    const double floor = 1e-24 * std::max(1.0, s.mean(j) * s.mean(j));
    s.inv_scale(j) = var > floor ? 1.0 / std::sqrt(var) : 0.0;
  }
  return s;
}

DataMatrix standardize(const DataMatrix& x) {
  DataMatrix out = x;
  out.values = fit_standardizer(x.values).apply(x.values);
  return out;
}

std::vector<Index> Split::source_indices() const {
  std::vector<Index> out;
  for (const auto& [_, idx] : source) out.insert(out.end(), idx.begin(), idx.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Index> Split::target_indices() const {
  std::vector<Index> out;
  for (const auto& [_, idx] : target) out.insert(out.end(), idx.begin(), idx.end());
  std::sort(out.begin(), out.end());
  return out;
}

ClassIndices sample_per_class(const std::vector<Label>& labels, std::int64_t count, std::uint64_t seed,
                              std::uint64_t split_index, Domain domain) {
  if (count < 1) throw ConfigError("labeled count per class must be >= 1, got " + std::to_string(count));
  std::map<Label, std::vector<Index>> members;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != kUnlabeled) members[labels[i]].push_back(static_cast<Index>(i));

  ClassIndices out;
  for (auto& [label, pool] : members) {
    if (static_cast<std::int64_t>(pool.size()) < count)
      throw DataError(std::string(to_string(domain)) + " class " + std::to_string(label) + " has " +
                      std::to_string(pool.size()) + " samples, fewer than the requested " +
                      std::to_string(count));
    const std::uint64_t stream =
        mix_stream(mix_stream(split_index, static_cast<std::uint64_t>(domain)), static_cast<std::uint32_t>(label));
    CounterStream rng(seed, stream);
    // Partial Fisher-Yates: the first `count` slots become a uniform sample.
    for (std::int64_t k = 0; k < count; ++k) {
      const auto remaining = static_cast<std::uint64_t>(pool.size()) - static_cast<std::uint64_t>(k);
      const auto pick = static_cast<std::size_t>(k) + static_cast<std::size_t>(rng.uniform_below(remaining));
      std::swap(pool[static_cast<std::size_t>(k)], pool[pick]);
    }
    std::vector<Index> chosen(pool.begin(), pool.begin() + count);
    std::sort(chosen.begin(), chosen.end());
    out.emplace(label, std::move(chosen));
  }
  return out;
}

Split make_split(const DataMatrix& source, const DataMatrix& target, const SplitSpec& spec) {
  if (!source.labeled() || !target.labeled()) throw DataError("make_split requires labeled source and target");
  return {sample_per_class(*source.labels, spec.labeled_per_class_source, spec.seed, spec.split_index,
                           Domain::source),
          sample_per_class(*target.labels, spec.labeled_per_class_target, spec.seed, spec.split_index,
                           Domain::target)};
}

DataMatrix select_rows(const DataMatrix& x, const std::vector<Index>& rows) {
  DataMatrix out;
  out.domain_id = x.domain_id;
  out.values.resize(static_cast<Index>(rows.size()), x.features());
  if (x.labels) out.labels.emplace();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.values.row(static_cast<Index>(r)) = x.values.row(rows[r]);
    if (x.labels) out.labels->push_back((*x.labels)[static_cast<std::size_t>(rows[r])]);
  }
  return out;
}

}  // namespace fmalign
