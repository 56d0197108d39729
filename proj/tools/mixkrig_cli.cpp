// mixkrig command-line front end: fit / predict / score / bench / design /
// canon.  Exit codes: 0 success, 2 malformed input, 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixkrig/bench.hpp"
#include "mixkrig/fit.hpp"
#include "mixkrig/identify.hpp"
#include "mixkrig/io.hpp"
#include "mixkrig/predict.hpp"
#include "mixkrig/select.hpp"

namespace {

using nlohmann::json;
using namespace mixkrig;

struct GlobalArgs {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  bool quiet = false;
};

json parse_json_file(const std::string& path) {
  const std::string text = read_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ParseError, "invalid JSON in '" + path + "'");
  return j;
}

RunManifest make_manifest(const std::string& command, const GlobalArgs& args, const json& config,
                          const std::vector<std::string>& input_paths,
                          std::chrono::steady_clock::time_point t0) {
  RunManifest m;
  m.command = command;
  m.seed = args.seed;
  m.config_digest = digest_hex(config.dump());
  for (const auto& path : input_paths) m.input_digests.emplace_back(path, digest_hex(read_file(path)));
  m.tool_version = kToolVersion;
  m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

void log_line(const GlobalArgs& args, const std::string& line) {
  if (!args.quiet) std::cerr << line << "\n";
}

std::vector<ModelConfig> configs_from_json(const json& j, const DatasetDescriptor& desc) {
  if (j.is_array()) {
    std::vector<ModelConfig> out;
    for (const auto& item : j) out.push_back(config_from_json(item));
    if (out.empty()) fail(ErrorCode::EmptyCandidates, "empty configuration list");
    return out;
  }
  if (j.is_object() && j.value("default_grid", false)) {
    std::vector<ModelConfig> grid = default_config_grid(desc.level_counts, desc.ordinal_flags);
    const int restarts = j.value("restarts", 0);
    if (restarts > 0)
      for (auto& cfg : grid) cfg.restarts = restarts;
    return grid;
  }
  return {config_from_json(j)};
}

// ---------------------------------------------------------------------------

int cmd_fit(const GlobalArgs& args, const std::string& dataset_path, const std::string& descriptor_path,
            const std::string& config_path) {
  const auto t0 = std::chrono::steady_clock::now();
  const DatasetDescriptor desc = descriptor_from_json(parse_json_file(descriptor_path));
  const Dataset data = read_dataset_csv(read_file(dataset_path), desc.level_counts, desc.ordinal_flags);
  validate_dataset(data);
  const json config_json = parse_json_file(config_path);
  const ModelConfig config = config_from_json(config_json);

  const FittedModel model = fit_model(data, config, args.seed, args.threads);
  log_line(args, "fit: nll=" + format_double(model.neg_loglik) + " delta=" + format_double(model.delta));

  json doc = model_to_json(model);
  doc["manifest"] =
      manifest_to_json(make_manifest("fit", args, config_json, {dataset_path, descriptor_path, config_path}, t0));
  write_file(args.out.empty() ? "model.json" : args.out, doc.dump(2) + "\n");
  return 0;
}

int cmd_predict(const GlobalArgs& args, const std::string& model_path, const std::string& points_path) {
  const auto t0 = std::chrono::steady_clock::now();
  const FittedModel model = model_from_json(parse_json_file(model_path));
  const int I = model.train.quant_dim(), J = model.train.qual_dim();
  const std::vector<MixedInput> points = read_points_csv(read_file(points_path), I, J);
  const std::vector<Prediction> preds = predict_batch(model, points);

  std::ostringstream os;
  os << manifest_csv_line(make_manifest("predict", args, json::object(), {model_path, points_path}, t0));
  for (int i = 0; i < I; ++i) os << "u" << (i + 1) << ',';
  for (int j = 0; j < J; ++j) os << "v" << (j + 1) << ',';
  os << "mean,sd\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    for (int i = 0; i < I; ++i) os << format_double(points[k].u[i]) << ',';
    for (int j = 0; j < J; ++j) os << points[k].v[j] << ',';
    os << format_double(preds[k].mean) << ',' << format_double(preds[k].sd) << '\n';
  }
  write_file(args.out.empty() ? "predictions.csv" : args.out, os.str());
  return 0;
}

int cmd_score(const GlobalArgs& args, const std::string& dataset_path, const std::string& descriptor_path,
              const std::string& configs_path) {
  const auto t0 = std::chrono::steady_clock::now();
  const DatasetDescriptor desc = descriptor_from_json(parse_json_file(descriptor_path));
  const Dataset data = read_dataset_csv(read_file(dataset_path), desc.level_counts, desc.ordinal_flags);
  validate_dataset(data);
  const json configs_json = parse_json_file(configs_path);
  const std::vector<ModelConfig> configs = configs_from_json(configs_json, desc);

  std::vector<FittedModel> models;
  models.reserve(configs.size());
  for (std::size_t k = 0; k < configs.size(); ++k) {
    const std::uint64_t fit_seed = args.seed ^ (0x51ab1e5ULL + 7919ULL * k);
    models.push_back(fit_model(data, configs[k], fit_seed, args.threads));
    log_line(args, "scored " + models.back().config.method_name());
  }
  const std::vector<ModelScore> scores = score_models(models);

  std::vector<double> bics(models.size());
  for (std::size_t k = 0; k < models.size(); ++k) bics[k] = scores[k].bic;

  auto model_fields = [&](std::size_t k) {
    const ModelConfig& cfg = models[k].config;
    const std::string latent = cfg.latent_dims.empty() ? "" : std::to_string(cfg.latent_dims.front());
    const int ordinal = cfg.ordinal_mode.empty() ? 0 : static_cast<int>(cfg.ordinal_mode.front());
    return to_string(cfg.structure) + "," + to_string(cfg.qual_kernel) + "," + latent + "," +
           std::to_string(ordinal);
  };

  std::ostringstream os;
  os << manifest_csv_line(
      make_manifest("score", args, configs_json, {dataset_path, descriptor_path, configs_path}, t0));
  os << "model_id,structure,kernel,latent_dim,ordinal,bic,loocv_loglik,loocv_l2,avg_weight\n";
  for (std::size_t k = 0; k < models.size(); ++k) {
    os << models[k].config.method_name() << ',' << model_fields(k) << ',' << format_double(scores[k].bic) << ','
       << format_double(scores[k].loocv_loglik) << ',' << format_double(scores[k].loocv_l2) << ','
       << format_double(scores[k].avg_weight) << '\n';
  }
  const int k_bic = bic_select(bics);
  const int k_log = loocv_select(models, LoocvLoss::LogLik);
  const int k_l2 = loocv_select(models, LoocvLoss::L2);
  os << "BIC_MSel," << model_fields(k_bic) << ',' << format_double(scores[k_bic].bic) << ",,,\n";
  os << "LOOCV_loglik," << model_fields(k_log) << ",," << format_double(scores[k_log].loocv_loglik) << ",,\n";
  os << "LOOCV_l2," << model_fields(k_l2) << ",,," << format_double(scores[k_l2].loocv_l2) << ",\n";
  os << "BIC_MAvr,,,,,,,,1\n";
  write_file(args.out.empty() ? "scores.csv" : args.out, os.str());
  return 0;
}

int cmd_bench(const GlobalArgs& args, const std::string& spec_path) {
  const auto t0 = std::chrono::steady_clock::now();
  const json spec_json = parse_json_file(spec_path);

  BenchmarkSpec spec;
  const Benchmark which = benchmark_from_string(spec_json.value("benchmark", "otl"));
  if (which == Benchmark::Borehole)
    spec = BenchmarkSpec::borehole_discretized(spec_json.value("q1", 3), spec_json.value("q2", 4));
  else
    spec = BenchmarkSpec::make(which);

  ExperimentOptions options;
  options.seed = args.seed;
  options.threads = args.threads;
  options.n_test = spec_json.value("n_test", 2000);
  options.replications = spec_json.value("replications", 10);
  options.restarts_override = spec_json.value("restarts", 0);
  int default_train = 80;
  if (which == Benchmark::Borehole)
    default_train = 5 * spec_json.value("q1", 3) * spec_json.value("q2", 4);
  options.n_train = spec_json.value("n_train", default_train);

  DatasetDescriptor desc{spec.level_counts(), std::vector<bool>(spec.qual_dim(), true)};
  std::vector<ModelConfig> configs;
  if (spec_json.contains("configs"))
    configs = configs_from_json(spec_json.at("configs"), desc);
  else
    configs = default_config_grid(desc.level_counts, desc.ordinal_flags);
  if (options.restarts_override <= 0 && spec_json.contains("restarts"))
    options.restarts_override = spec_json.value("restarts", 0);

  const std::vector<ExperimentRow> rows = run_experiment(spec, configs, options);
  log_line(args, "bench: " + std::to_string(rows.size()) + " result rows");

  std::string csv = manifest_csv_line(make_manifest("bench", args, spec_json, {spec_path}, t0));
  csv += experiment_csv(rows);
  write_file(args.out.empty() ? "results.csv" : args.out, csv);
  return 0;
}

int cmd_design(const GlobalArgs& args, int n, int quant_dims, const std::vector<int>& level_counts) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(args.seed);
  const int dims = quant_dims + static_cast<int>(level_counts.size());
  const Eigen::MatrixXd unit = maximin_lhd_unit(n, dims, rng);

  std::vector<std::string> cols;
  for (int i = 0; i < quant_dims; ++i) cols.push_back("u" + std::to_string(i + 1));
  for (std::size_t j = 0; j < level_counts.size(); ++j) cols.push_back("v" + std::to_string(j + 1));

  std::ostringstream os;
  os << manifest_csv_line(make_manifest("design", args, json{{"n", n}, {"quant", quant_dims}}, {}, t0));
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  for (int r = 0; r < n; ++r) {
    for (int i = 0; i < quant_dims; ++i) os << (i ? "," : "") << format_double(unit(r, i));
    for (std::size_t j = 0; j < level_counts.size(); ++j) {
      const int a = level_counts[j];
      const int snapped = static_cast<int>(std::lround(unit(r, quant_dims + static_cast<int>(j)) * (a - 1)));
      const int level = std::min(a - 1, std::max(0, snapped)) + 1;
      os << (quant_dims + static_cast<int>(j) > 0 ? "," : "") << level;
    }
    os << '\n';
  }
  write_file(args.out.empty() ? "design.csv" : args.out, os.str());
  return 0;
}

int cmd_canon(const GlobalArgs& args, const std::string& embedding_path, const std::string& kernel_kind) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::MatrixXd z = read_matrix_csv(read_file(embedding_path));
  Eigen::MatrixXd w;
  if (kernel_kind == "linear")
    w = canon_linear(z);
  else if (kernel_kind == "isotropic")
    w = canon_isotropic(z);
  else
    fail(ErrorCode::ParseError, "canon kernel must be 'linear' or 'isotropic'");
  std::string csv = manifest_csv_line(make_manifest("canon", args, json{{"kernel", kernel_kind}}, {embedding_path}, t0));
  csv += write_matrix_csv(w);
  write_file(args.out.empty() ? "canonical.csv" : args.out, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-variable Gaussian process surrogates for mixed qualitative/quantitative inputs"};
  app.require_subcommand(1);

  GlobalArgs args;
  app.add_option("--seed", args.seed, "random seed")->capture_default_str();
  app.add_option("--threads", args.threads, "parallelism cap (0 = logical cores)");
  app.add_option("--out", args.out, "output path");
  app.add_flag("--quiet", args.quiet, "suppress progress output");

  std::string dataset_path, descriptor_path, config_path, model_path, points_path, spec_path, embedding_path;
  std::string canon_kernel = "linear";
  int design_n = 8, design_quant = 2;
  std::vector<int> design_levels;

  CLI::App* fit = app.add_subcommand("fit", "maximum-likelihood fit");
  fit->add_option("dataset", dataset_path, "training CSV")->required();
  fit->add_option("descriptor", descriptor_path, "dataset descriptor JSON")->required();
  fit->add_option("config", config_path, "model configuration JSON")->required();

  CLI::App* predict = app.add_subcommand("predict", "kriging prediction at new points");
  predict->add_option("model", model_path, "fitted model JSON")->required();
  predict->add_option("points", points_path, "query points CSV")->required();

  CLI::App* score = app.add_subcommand("score", "fit and score a candidate set");
  score->add_option("dataset", dataset_path, "training CSV")->required();
  score->add_option("descriptor", descriptor_path, "dataset descriptor JSON")->required();
  score->add_option("configs", config_path, "candidate configurations JSON")->required();

  CLI::App* bench = app.add_subcommand("bench", "benchmark experiment sweep");
  bench->add_option("spec", spec_path, "benchmark spec JSON")->required();

  CLI::App* design = app.add_subcommand("design", "maximin Latin hypercube design");
  design->add_option("--n", design_n, "points")->required();
  design->add_option("--quant", design_quant, "quantitative dimensions");
  design->add_option("--levels", design_levels, "level counts of qualitative dimensions");

  CLI::App* canon = app.add_subcommand("canon", "canonicalize a latent embedding");
  canon->add_option("embedding", embedding_path, "embedding CSV (one row per level)")->required();
  canon->add_option("--kernel", canon_kernel, "'linear' or 'isotropic'");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cmd_fit(args, dataset_path, descriptor_path, config_path);
    if (predict->parsed()) return cmd_predict(args, model_path, points_path);
    if (score->parsed()) return cmd_score(args, dataset_path, descriptor_path, config_path);
    if (bench->parsed()) return cmd_bench(args, spec_path);
    if (design->parsed()) return cmd_design(args, design_n, design_quant, design_levels);
    if (canon->parsed()) return cmd_canon(args, embedding_path, canon_kernel);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_input_error() ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
