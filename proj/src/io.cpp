#include "sgmix/io.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sgmix/util.hpp"

namespace sgmix {

using nlohmann::json;

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  fields.push_back(current);
  return fields;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows) {
  const auto r = rows.size();
  if (r == 0) return Matrix(0, 0);
  const auto c = rows.at(0).size();
  Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < r; ++i) {
    const json& row = rows.at(i);
    if (row.size() != c) throw std::runtime_error("matrix rows have inconsistent lengths");
    for (std::size_t j = 0; j < c; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row.at(j).get<double>();
    }
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = arr.at(i).get<double>();
  }
  return v;
}

}  // namespace

Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path + "'");
  Dataset data;
  std::string line;
  long line_number = 0;
  std::vector<std::string> header;
  long label_col = -1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.front() == '#') continue;
    header = split_fields(line);
    if (header.empty() || (header.size() == 1 && header.front().empty())) {
      throw CsvError("parse error at line " + std::to_string(line_number) + ": empty header");
    }
    break;
  }
  if (header.empty()) throw CsvError("'" + path + "' has no header row");
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "label") {
      if (label_col >= 0) {
        throw CsvError("parse error at line " + std::to_string(line_number) +
                       ": duplicate 'label' column");
      }
      label_col = static_cast<long>(j);
    } else {
      data.columns.push_back(header[j]);
    }
  }
  if (data.columns.empty()) throw CsvError("'" + path + "' has no numeric columns");
  if (label_col >= 0) data.labels.emplace();

  std::vector<double> values;
  std::vector<int> labels;
  long rows = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw CsvError("parse error at line " + std::to_string(line_number) + ": expected " +
                     std::to_string(header.size()) + " fields, got " +
                     std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string& tok = fields[j];
      if (tok.empty()) {
        throw CsvError("missing value at line " + std::to_string(line_number) + ", column '" +
                       header[j] + "'");
      }
      bool ok = false;
      double v = parse_double(tok, ok);
      if (static_cast<long>(j) == label_col) {
        if (!ok || v != std::floor(v)) {
          throw CsvError("parse error at line " + std::to_string(line_number) + ", column '" +
                         header[j] + "': invalid label '" + tok + "'");
        }
        labels.push_back(static_cast<int>(v));
      } else {
        if (!ok || std::isnan(v)) {
          throw CsvError("parse error at line " + std::to_string(line_number) + ", column '" +
                         header[j] + "': invalid number '" + tok + "'");
        }
        values.push_back(v);
      }
    }
    ++rows;
  }
  if (rows == 0) throw CsvError("'" + path + "' has no data rows");
  const std::size_t p = data.columns.size();
  data.x.resize(rows, static_cast<Eigen::Index>(p));
  for (long i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      data.x(i, static_cast<Eigen::Index>(j)) = values[static_cast<std::size_t>(i) * p + j];
    }
  }
  if (data.labels) *data.labels = std::move(labels);
  return data;
}

void write_csv(const std::string& path, const Eigen::Ref<const Matrix>& x,
               const std::vector<std::string>& columns, const std::vector<int>* labels,
               const std::string& manifest_digest) {
  if (columns.size() != static_cast<std::size_t>(x.cols())) {
    throw std::invalid_argument("write_csv: column name count mismatch");
  }
  if (labels != nullptr && labels->size() != static_cast<std::size_t>(x.rows())) {
    throw std::invalid_argument("write_csv: label count mismatch");
  }
  std::ostringstream out;
  if (!manifest_digest.empty()) out << "# manifest: " << manifest_digest << "\n";
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out << columns[j];
    if (j + 1 < columns.size() || labels != nullptr) out << ',';
  }
  if (labels != nullptr) out << "label";
  out << '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out << format_double(x(i, j));
      if (j + 1 < x.cols() || labels != nullptr) out << ',';
    }
    if (labels != nullptr) out << (*labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
  write_text_file(path, out.str());
}

Standardization standardize_columns(Matrix& x, const std::vector<std::string>& columns) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  Standardization transform;
  transform.applied = true;
  transform.mean = x.colwise().mean();
  transform.sd.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double var = (x.col(j).array() - transform.mean[j]).square().sum() / static_cast<double>(n);
    double sd = std::sqrt(var);
    if (sd <= 1e-12 * std::max(1.0, std::abs(transform.mean[j]))) {
      std::string name = static_cast<std::size_t>(j) < columns.size()
                             ? columns[static_cast<std::size_t>(j)]
                             : std::to_string(j);
      throw std::runtime_error("column '" + name +
                               "' has zero variance; standardization undefined");
    }
    transform.sd[j] = sd;
  }
  apply_standardization(x, transform);
  return transform;
}

void apply_standardization(Matrix& x, const Standardization& transform) {
  if (!transform.applied) return;
  if (transform.mean.size() != x.cols() || transform.sd.size() != x.cols()) {
    throw std::invalid_argument("apply_standardization: dimension mismatch");
  }
  x = (x.rowwise() - transform.mean.transpose()).array().rowwise() /
      transform.sd.transpose().array();
}

ModelFile model_file_from_report(const FitReport& report, Eigen::Index n,
                                 const Standardization& standardization,
                                 const std::string& digest) {
  ModelFile model;
  model.n = n;
  model.p = static_cast<int>(report.params.dim());
  model.lambda = report.lambda;
  model.strategy = report.strategy;
  model.params = report.params;
  model.d0 = report.d0;
  model.bic = report.bic;
  model.loglik = report.unpenalized_loglik;
  model.penalized_loglik = report.penalized_loglik;
  model.iterations = report.iterations;
  model.converged = report.converged;
  model.standardization = standardization;
  model.manifest_digest = digest;
  return model;
}

void write_model_json(const std::string& path, const ModelFile& model) {
  json doc;
  doc["schema_version"] = model.schema_version;
  doc["n"] = model.n;
  doc["p"] = model.p;
  doc["K"] = model.params.K;
  doc["lambda"] = model.lambda;
  doc["strategy"] = strategy_name(model.strategy);
  doc["pi"] = vector_to_json(model.params.pi);
  json mu = json::array();
  for (const Vector& m : model.params.mu) mu.push_back(vector_to_json(m));
  doc["mu"] = std::move(mu);
  json omega = json::array();
  for (const Matrix& o : model.params.omega) omega.push_back(matrix_to_json(o));
  doc["omega"] = std::move(omega);
  doc["d0"] = model.d0;
  doc["bic"] = model.bic;
  doc["loglik"] = model.loglik;
  doc["penalized_loglik"] = model.penalized_loglik;
  doc["iterations"] = model.iterations;
  doc["converged"] = model.converged;
  doc["standardization"] = {
      {"applied", model.standardization.applied},
      {"mean",
       model.standardization.applied ? vector_to_json(model.standardization.mean) : json::array()},
      {"sd",
       model.standardization.applied ? vector_to_json(model.standardization.sd) : json::array()},
  };
  doc["manifest_digest"] = model.manifest_digest;
  write_text_file(path, doc.dump(2) + "\n");
}

ModelFile read_model_json(const std::string& path) {
  json doc = json::parse(read_text_file(path));
  ModelFile model;
  model.schema_version = doc.at("schema_version").get<int>();
  if (model.schema_version != kSchemaVersion) {
    throw std::runtime_error("unsupported model schema version " +
                             std::to_string(model.schema_version));
  }
  model.n = doc.at("n").get<Eigen::Index>();
  model.p = doc.at("p").get<int>();
  model.lambda = doc.at("lambda").get<double>();
  auto strategy = parse_strategy(doc.at("strategy").get<std::string>());
  if (!strategy) throw std::runtime_error("unknown strategy in model file");
  model.strategy = *strategy;
  model.params.K = doc.at("K").get<int>();
  model.params.pi = vector_from_json(doc.at("pi"));
  for (const json& m : doc.at("mu")) model.params.mu.push_back(vector_from_json(m));
  for (const json& o : doc.at("omega")) model.params.omega.push_back(matrix_from_json(o));
  model.d0 = doc.at("d0").get<int>();
  model.bic = doc.at("bic").get<double>();
  model.loglik = doc.at("loglik").get<double>();
  model.penalized_loglik = doc.value("penalized_loglik", 0.0);
  model.iterations = doc.at("iterations").get<int>();
  model.converged = doc.at("converged").get<bool>();
  const json& st = doc.at("standardization");
  model.standardization.applied = st.at("applied").get<bool>();
  if (model.standardization.applied) {
    model.standardization.mean = vector_from_json(st.at("mean"));
    model.standardization.sd = vector_from_json(st.at("sd"));
  }
  model.manifest_digest = doc.value("manifest_digest", "");
  return model;
}

void write_truth_json(const std::string& path, const SyntheticScenario& scenario,
                      const std::vector<Matrix>& omegas, const std::string& digest) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  json sc;
  sc["name"] = scenario.name;
  sc["n"] = scenario.n;
  sc["p"] = scenario.p;
  sc["K"] = scenario.K;
  sc["pi"] = vector_to_json(scenario.pi);
  json means = json::array();
  for (const Vector& m : scenario.means) means.push_back(vector_to_json(m));
  sc["means"] = std::move(means);
  sc["edge_probs"] = scenario.edge_probs;
  sc["seed"] = scenario.seed;
  doc["scenario"] = std::move(sc);
  json om = json::array();
  for (const Matrix& o : omegas) om.push_back(matrix_to_json(o));
  doc["omegas"] = std::move(om);
  doc["manifest_digest"] = digest;
  write_text_file(path, doc.dump(2) + "\n");
}

TruthFile read_truth_json(const std::string& path) {
  json doc = json::parse(read_text_file(path));
  if (doc.at("schema_version").get<int>() != kSchemaVersion) {
    throw std::runtime_error("unsupported truth schema version");
  }
  TruthFile truth;
  const json& sc = doc.at("scenario");
  truth.scenario.name = sc.at("name").get<std::string>();
  truth.scenario.n = sc.at("n").get<int>();
  truth.scenario.p = sc.at("p").get<int>();
  truth.scenario.K = sc.at("K").get<int>();
  truth.scenario.pi = vector_from_json(sc.at("pi"));
  for (const json& m : sc.at("means")) truth.scenario.means.push_back(vector_from_json(m));
  truth.scenario.edge_probs = sc.at("edge_probs").get<std::vector<double>>();
  truth.scenario.seed = sc.at("seed").get<std::uint64_t>();
  for (const json& o : doc.at("omegas")) truth.omegas.push_back(matrix_from_json(o));
  return truth;
}

std::string manifest_digest(const RunManifest& manifest) {
  std::uint64_t h = fnv1a(manifest.command);
  h = fnv1a(manifest.config_json, h);
  h = fnv1a(std::to_string(manifest.master_seed), h);
  h = fnv1a(manifest.version, h);
  for (const auto& [path, digest] : manifest.input_digests) {
    h = fnv1a(path, h);
    h = fnv1a(digest, h);
  }
  return to_hex(h);
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["command"] = manifest.command;
  doc["config"] = json::parse(manifest.config_json);
  doc["master_seed"] = manifest.master_seed;
  doc["version"] = manifest.version;
  doc["inputs"] = manifest.input_digests;
  doc["outputs"] = manifest.outputs;
  doc["timestamp"] = manifest.timestamp;
  doc["digest"] = manifest.digest;
  write_text_file(path, doc.dump(2) + "\n");
}

std::string digest_file(const std::string& path) { return to_hex(fnv1a(read_text_file(path))); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace sgmix
