#include <fstream>
#include <map>

#include "fmalign/align.hpp"
#include "fmalign/csv.hpp"

namespace fmalign {

namespace {

namespace fs = std::filesystem;

const char* kDomainNames[2] = {"source", "target"};

Matrix stack_rows(const Vector& a, const Vector& b) {
  Matrix m(2, a.size());
  m.row(0) = a.transpose();
  m.row(1) = b.transpose();
  return m;
}

Matrix as_column(const Vector& v) { return v; }

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::string require(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw DataError("model config is missing '" + key + "'");
  return it->second;
}

double require_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto v = csv::parse_double(require(kv, key));
  if (!v) throw DataError("model config: '" + key + "' is not a number");
  return *v;
}

Index require_index(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto v = csv::parse_int(require(kv, key));
  if (!v) throw DataError("model config: '" + key + "' is not an integer");
  return static_cast<Index>(*v);
}

bool require_bool(const std::map<std::string, std::string>& kv, const std::string& key) {
  const std::string v = require(kv, key);
  if (v != "true" && v != "false") throw DataError("model config: '" + key + "' must be true or false");
  return v == "true";
}

Vector column_of(const Matrix& m, const fs::path& path) {
  if (m.cols() != 1) throw DataError(path.string() + ": expected a single column");
  return m.col(0);
}

}  // namespace

void save_model(const AlignmentModel& model, const fs::path& dir) {
  fs::create_directories(dir);
  const AlignmentConfig& c = model.config;
  {
    std::ofstream out(dir / "config.txt");
    if (!out) throw DataError("cannot write '" + (dir / "config.txt").string() + "'");
    out << "mode=" << to_string(c.mode) << '\n'
        << "k=" << c.k << '\n'
        << "alpha=" << csv::format_double(c.alpha) << '\n'
        << "dim=" << c.dim << '\n'
        << "skip_tol=" << csv::format_double(c.skip_tol) << '\n'
        << "similarity=" << to_string(c.similarity) << '\n'
        << "standardize=" << (c.standardize ? "true" : "false") << '\n'
        << "carry_trivial_modes=" << (c.carry_trivial_modes ? "true" : "false") << '\n'
        << "dense_limit=" << c.dense_limit << '\n'
        << "projection_defect=" << csv::format_double(model.projection_defect) << '\n'
        << "heat_sigma2_source=" << csv::format_double(model.heat_sigma2[0]) << '\n'
        << "heat_sigma2_target=" << csv::format_double(model.heat_sigma2[1]) << '\n';
  }
  for (int d = 0; d < 2; ++d) {
    const std::string name = kDomainNames[d];
    const auto& s = model.standardizers[static_cast<std::size_t>(d)];
    csv::write_matrix(dir / ("standardization_" + name + ".csv"), stack_rows(s.mean, s.inv_scale));
    if (c.mode == AlignmentMode::feature) {
      csv::write_matrix(dir / ("feature_map_" + name + ".csv"), model.feature_map[static_cast<std::size_t>(d)]);
    } else {
      csv::write_matrix(dir / ("training_" + name + ".csv"), model.training[static_cast<std::size_t>(d)]);
      csv::write_matrix(dir / ("degrees_" + name + ".csv"), as_column(model.degrees[static_cast<std::size_t>(d)]));
    }
  }
  if (c.mode == AlignmentMode::instance) csv::write_matrix(dir / "trivial.csv", model.trivial);
  write_embedding_csv(dir / "embedding.csv", model.embedding);
  csv::write_matrix(dir / "eigenvalues.csv", as_column(model.basis.values));
  csv::write_matrix(dir / "basis.csv", model.basis.vectors);
}

AlignmentModel load_model(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("model directory '" + dir.string() + "' does not exist");
  const auto kv = read_key_values(dir / "config.txt");
  AlignmentModel model;
  AlignmentConfig& c = model.config;
  c.mode = parse_alignment_mode(require(kv, "mode"));
  c.k = require_index(kv, "k");
  c.alpha = require_double(kv, "alpha");
  c.dim = require_index(kv, "dim");
  c.skip_tol = require_double(kv, "skip_tol");
  c.similarity = parse_similarity(require(kv, "similarity"));
  c.standardize = require_bool(kv, "standardize");
  c.carry_trivial_modes = require_bool(kv, "carry_trivial_modes");
  c.dense_limit = require_index(kv, "dense_limit");
  model.projection_defect = require_double(kv, "projection_defect");
  model.heat_sigma2 = {require_double(kv, "heat_sigma2_source"), require_double(kv, "heat_sigma2_target")};

  for (int d = 0; d < 2; ++d) {
    const std::string name = kDomainNames[d];
    const auto slot = static_cast<std::size_t>(d);
    const fs::path sp = dir / ("standardization_" + name + ".csv");
    const Matrix s = csv::read_matrix(sp);
    if (s.rows() != 2) throw DataError(sp.string() + ": expected rows 'mean' and 'inverse scale'");
    model.standardizers[slot].mean = s.row(0).transpose();
    model.standardizers[slot].inv_scale = s.row(1).transpose();
    if (c.mode == AlignmentMode::feature) {
      model.feature_map[slot] = csv::read_matrix(dir / ("feature_map_" + name + ".csv"));
    } else {
      model.training[slot] = csv::read_matrix(dir / ("training_" + name + ".csv"));
      const fs::path dp = dir / ("degrees_" + name + ".csv");
      model.degrees[slot] = column_of(csv::read_matrix(dp), dp);
    }
  }
  if (c.mode == AlignmentMode::instance) model.trivial = csv::read_matrix(dir / "trivial.csv");
  model.embedding = read_embedding_csv(dir / "embedding.csv");
  const fs::path ep = dir / "eigenvalues.csv";
  model.basis.values = column_of(csv::read_matrix(ep), ep);
  model.basis.vectors = csv::read_matrix(dir / "basis.csv");
  if (model.basis.vectors.cols() != model.basis.values.size())
    throw DataError("basis.csv and eigenvalues.csv disagree on the number of modes");
  return model;
}

}  // namespace fmalign
