#include "mixkrig/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mixkrig/fit.hpp"

namespace mixkrig {

const char* kToolVersion = "0.1.0";

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) fail(ErrorCode::ParseError, "trailing characters in number '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(ErrorCode::ParseError, "not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    fail(ErrorCode::ParseError, "number out of range: '" + s + "'");
  }
}

int parse_level(const std::string& s) {
  const double v = parse_double(s);
  const int level = static_cast<int>(v);
  if (static_cast<double>(level) != v) fail(ErrorCode::ParseError, "level index must be an integer, got '" + s + "'");
  return level;
}

void check_header(const std::vector<std::string>& header, int quant_dim, int qual_dim, bool with_y) {
  const int expected = quant_dim + qual_dim + (with_y ? 1 : 0);
  if (static_cast<int>(header.size()) != expected)
    fail(ErrorCode::DimensionMismatch, "header has " + std::to_string(header.size()) + " columns, expected " +
                                           std::to_string(expected));
  for (int i = 0; i < quant_dim; ++i)
    if (header[i] != "u" + std::to_string(i + 1))
      fail(ErrorCode::ParseError, "expected column u" + std::to_string(i + 1) + ", found '" + header[i] + "'");
  for (int j = 0; j < qual_dim; ++j)
    if (header[quant_dim + j] != "v" + std::to_string(j + 1))
      fail(ErrorCode::ParseError, "expected column v" + std::to_string(j + 1) + ", found '" + header[quant_dim + j] +
                                      "'");
  if (with_y && header.back() != "y") fail(ErrorCode::ParseError, "expected final column y");
}

}  // namespace

Dataset read_dataset_csv(const std::string& csv_text, const std::vector<int>& level_counts,
                         const std::vector<bool>& ordinal_flags) {
  const std::vector<std::string> lines = data_lines(csv_text);
  if (lines.empty()) fail(ErrorCode::ParseError, "empty dataset file");
  const std::vector<std::string> header = split_line(lines[0]);
  const int J = static_cast<int>(level_counts.size());
  const int I = static_cast<int>(header.size()) - J - 1;
  if (I < 0) fail(ErrorCode::DimensionMismatch, "fewer columns than qualitative factors plus response");
  check_header(header, I, J, true);

  Dataset data;
  data.level_counts = level_counts;
  data.ordinal_flags = ordinal_flags;
  data.y.resize(static_cast<int>(lines.size()) - 1);
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::vector<std::string> fields = split_line(lines[row]);
    if (fields.size() != header.size())
      fail(ErrorCode::DimensionMismatch, "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                             " fields, expected " + std::to_string(header.size()));
    MixedInput x;
    x.u.resize(I);
    for (int i = 0; i < I; ++i) x.u[i] = parse_double(fields[i]);
    x.v.resize(J);
    for (int j = 0; j < J; ++j) x.v[j] = parse_level(fields[I + j]);
    data.y[static_cast<int>(row) - 1] = parse_double(fields.back());
    data.inputs.push_back(std::move(x));
  }
  return data;
}

std::string write_dataset_csv(const Dataset& data) {
  std::ostringstream os;
  const int I = data.quant_dim(), J = data.qual_dim();
  for (int i = 0; i < I; ++i) os << "u" << (i + 1) << ',';
  for (int j = 0; j < J; ++j) os << "v" << (j + 1) << ',';
  os << "y\n";
  for (int r = 0; r < data.n(); ++r) {
    for (int i = 0; i < I; ++i) os << format_double(data.inputs[r].u[i]) << ',';
    for (int j = 0; j < J; ++j) os << data.inputs[r].v[j] << ',';
    os << format_double(data.y[r]) << '\n';
  }
  return os.str();
}

std::vector<MixedInput> read_points_csv(const std::string& csv_text, int quant_dim, int qual_dim) {
  const std::vector<std::string> lines = data_lines(csv_text);
  if (lines.empty()) fail(ErrorCode::ParseError, "empty points file");
  check_header(split_line(lines[0]), quant_dim, qual_dim, false);
  std::vector<MixedInput> points;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::vector<std::string> fields = split_line(lines[row]);
    if (static_cast<int>(fields.size()) != quant_dim + qual_dim)
      fail(ErrorCode::DimensionMismatch, "row " + std::to_string(row) + " has the wrong number of fields");
    MixedInput x;
    x.u.resize(quant_dim);
    for (int i = 0; i < quant_dim; ++i) x.u[i] = parse_double(fields[i]);
    x.v.resize(qual_dim);
    for (int j = 0; j < qual_dim; ++j) x.v[j] = parse_level(fields[quant_dim + j]);
    points.push_back(std::move(x));
  }
  return points;
}

Eigen::MatrixXd read_matrix_csv(const std::string& csv_text) {
  const std::vector<std::string> lines = data_lines(csv_text);
  if (lines.empty()) fail(ErrorCode::ParseError, "empty matrix file");
  std::vector<std::vector<double>> rows;
  for (const auto& line : lines) {
    const std::vector<std::string> fields = split_line(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f));
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorCode::DimensionMismatch, "ragged matrix rows");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j) m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return m;
}

std::string write_matrix_csv(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_double(m(i, j));
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

DatasetDescriptor descriptor_from_json(const nlohmann::json& j) {
  DatasetDescriptor d;
  if (!j.contains("level_counts")) fail(ErrorCode::ParseError, "descriptor is missing level_counts");
  d.level_counts = j.at("level_counts").get<std::vector<int>>();
  if (j.contains("ordinal_flags"))
    d.ordinal_flags = j.at("ordinal_flags").get<std::vector<bool>>();
  else
    d.ordinal_flags.assign(d.level_counts.size(), false);
  if (d.ordinal_flags.size() != d.level_counts.size())
    fail(ErrorCode::DimensionMismatch, "descriptor ordinal_flags length mismatch");
  return d;
}

nlohmann::json descriptor_to_json(const DatasetDescriptor& d) {
  return {{"level_counts", d.level_counts}, {"ordinal_flags", d.ordinal_flags}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.structure = structure_from_string(j.value("structure", "multiplicative"));
  cfg.qual_kernel = qual_kernel_from_string(j.value("qual_kernel", "gaussian"));
  if (j.contains("latent_dims")) cfg.latent_dims = j.at("latent_dims").get<std::vector<int>>();
  if (j.contains("ordinal_mode")) cfg.ordinal_mode = j.at("ordinal_mode").get<std::vector<bool>>();
  if (j.contains("nugget_grid")) cfg.nugget_grid = j.at("nugget_grid").get<std::vector<double>>();
  cfg.restarts = j.value("restarts", 15);
  return cfg;
}

nlohmann::json config_to_json(const ModelConfig& config) {
  return {{"structure", to_string(config.structure)}, {"qual_kernel", to_string(config.qual_kernel)},
          {"latent_dims", config.latent_dims},        {"ordinal_mode", config.ordinal_mode},
          {"nugget_grid", config.nugget_grid},        {"restarts", config.restarts}};
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<int>(i)] = arr[i].get<double>();
  return v;
}

/// Table 2 field names per kind.
const char* qual_field_name(QualKind kind) {
  switch (kind) {
    case QualKind::LinNominal: return "theta";
    case QualKind::LinOrdinal: return "delta_theta";
    case QualKind::IsoOrdinal: return "delta_z";
    case QualKind::IsoNominal: return "z";
  }
  return "values";
}

}  // namespace

nlohmann::json params_to_json(const FullParams& params) {
  nlohmann::json j;
  j["mu"] = params.mu;
  j["sigma2"] = params.sigma2;
  j["phi"] = vector_to_json(params.phi);
  nlohmann::json quals = nlohmann::json::array();
  for (const auto& qp : params.qual)
    quals.push_back({{"kind", to_string(qp.kind)}, {qual_field_name(qp.kind), vector_to_json(qp.values)}});
  j["qual"] = quals;
  if (params.psi.size() > 0) j["psi"] = vector_to_json(params.psi);
  return j;
}

FullParams params_from_json(const nlohmann::json& j) {
  FullParams params;
  params.mu = j.at("mu").get<double>();
  params.sigma2 = j.at("sigma2").get<double>();
  params.phi = vector_from_json(j.at("phi"));
  for (const auto& q : j.at("qual")) {
    QualFactorParams qp;
    qp.kind = qual_kind_from_string(q.at("kind").get<std::string>());
    qp.values = vector_from_json(q.at(qual_field_name(qp.kind)));
    params.qual.push_back(std::move(qp));
  }
  if (j.contains("psi")) params.psi = vector_from_json(j.at("psi"));
  return params;
}

nlohmann::json model_to_json(const FittedModel& model) {
  nlohmann::json train;
  nlohmann::json u = nlohmann::json::array();
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : model.train.inputs) {
    u.push_back(vector_to_json(x.u));
    v.push_back(x.v);
  }
  train["u"] = u;
  train["v"] = v;
  train["y"] = vector_to_json(model.train.y);
  train["level_counts"] = model.train.level_counts;
  train["ordinal_flags"] = model.train.ordinal_flags;

  return {{"config", config_to_json(model.config)},
          {"params", params_to_json(model.params)},
          {"delta", model.delta},
          {"epsilon_star", model.epsilon_star},
          {"neg_loglik", model.neg_loglik},
          {"standardize",
           {{"mean", model.y_mean},
            {"scale", model.y_scale},
            {"u_lo", vector_to_json(model.u_lo)},
            {"u_scale", vector_to_json(model.u_scale)}}},
          {"train", train}};
}

FittedModel model_from_json(const nlohmann::json& j) {
  Dataset train;
  const auto& t = j.at("train");
  train.level_counts = t.at("level_counts").get<std::vector<int>>();
  train.ordinal_flags = t.at("ordinal_flags").get<std::vector<bool>>();
  train.y = vector_from_json(t.at("y"));
  const auto& u = t.at("u");
  const auto& v = t.at("v");
  for (std::size_t i = 0; i < u.size(); ++i) {
    MixedInput x;
    x.u = vector_from_json(u[i]);
    x.v = v[i].get<std::vector<int>>();
    train.inputs.push_back(std::move(x));
  }
  const ModelConfig config = config_from_json(j.at("config"));
  const FullParams params = params_from_json(j.at("params"));
  const auto& std_block = j.at("standardize");

  // Rebuild the factorization deterministically rather than trusting a
  // serialized copy.
  FittedModel model =
      finalize_model(train, config, params, std_block.at("mean").get<double>(), std_block.at("scale").get<double>(),
                     vector_from_json(std_block.value("u_lo", nlohmann::json::array())),
                     vector_from_json(std_block.value("u_scale", nlohmann::json::array())));
  // finalize re-profiles mu/sigma2; keep the stored values (identical up to
  // roundoff, and byte-stable round trips matter more here)
  model.params.mu = params.mu;
  model.params.sigma2 = params.sigma2;
  model.delta = j.at("delta").get<double>();
  model.epsilon_star = j.at("epsilon_star").get<double>();
  model.neg_loglik = j.at("neg_loglik").get<double>();
  return model;
}

nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [name, hex] : m.input_digests) inputs[name] = hex;
  return {{"command", m.command},          {"seed", m.seed},
          {"config_digest", m.config_digest}, {"input_digests", inputs},
          {"tool_version", m.tool_version},   {"wall_time_s", m.wall_time_s}};
}

std::string manifest_csv_line(const RunManifest& m) { return "# manifest " + manifest_to_json(m).dump() + "\n"; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::ParseError, "cannot write '" + path + "'");
  out << contents;
}

}  // namespace mixkrig
