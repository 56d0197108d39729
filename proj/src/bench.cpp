#include "mixkrig/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mixkrig/fit.hpp"
#include "mixkrig/io.hpp"
#include "mixkrig/predict.hpp"
#include "mixkrig/select.hpp"

namespace mixkrig {
namespace {

constexpr double kBeamInertia[6] = {0.0491, 0.0833, 0.0449, 0.0633, 0.0373, 0.0167};

void require_range(double x, double lo, double hi, const char* name) {
  if (!(x >= lo && x <= hi))
    fail(ErrorCode::RangeError, std::string(name) + " = " + std::to_string(x) + " outside [" + std::to_string(lo) +
                                    ", " + std::to_string(hi) + "]");
}

std::vector<double> equally_spaced(double lo, double hi, int count) {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * i / (count - 1);
  return out;
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  const auto dt = std::chrono::steady_clock::now() - t0;
  return std::chrono::duration<double>(dt).count();
}

}  // namespace

Benchmark benchmark_from_string(const std::string& s) {
  if (s == "beam") return Benchmark::Beam;
  if (s == "borehole") return Benchmark::Borehole;
  if (s == "otl") return Benchmark::OTL;
  if (s == "piston") return Benchmark::Piston;
  fail(ErrorCode::ParseError, "unknown benchmark '" + s + "'");
}

std::string to_string(Benchmark b) {
  switch (b) {
    case Benchmark::Beam: return "beam";
    case Benchmark::Borehole: return "borehole";
    case Benchmark::OTL: return "otl";
    case Benchmark::Piston: return "piston";
  }
  return "?";
}

double eval_beam(double length, double height, int v) {
  require_range(length, 10.0, 20.0, "L");
  require_range(height, 1.0, 2.0, "h");
  if (v < 1 || v > 6) fail(ErrorCode::RangeError, "cross-section index outside 1..6");
  return length * length * length / (3e9 * height * height * height * height * kBeamInertia[v - 1]);
}

double eval_borehole(double r_w, double r, double t_u, double h_u, double t_l, double h_l, double length,
                     double k_w) {
  require_range(r_w, 0.05, 0.15, "r_w");
  require_range(r, 100.0, 50000.0, "r");
  require_range(t_u, 63070.0, 115600.0, "T_u");
  require_range(h_u, 990.0, 1110.0, "H_u");
  require_range(t_l, 63.1, 116.0, "T_l");
  require_range(h_l, 700.0, 820.0, "H_l");
  require_range(length, 1120.0, 1680.0, "L");
  require_range(k_w, 9855.0, 12045.0, "K_w");
  const double log_rr = std::log(r / r_w);
  return 2.0 * 3.14159265358979323846 * t_u * (h_u - h_l) /
         (log_rr * (1.0 + 2.0 * length * t_u / (log_rr * r_w * r_w * k_w) + t_u / t_l));
}

double eval_otl(double r_b1, double r_b2, double r_f, double r_c1, double r_c2, double beta) {
  require_range(r_b1, 50.0, 150.0, "R_b1");
  require_range(r_b2, 25.0, 70.0, "R_b2");
  require_range(r_f, 0.5, 3.0, "R_f");
  require_range(r_c1, 1.2, 2.5, "R_c1");
  require_range(r_c2, 0.25, 1.2, "R_c2");
  require_range(beta, 50.0, 300.0, "beta");
  const double v_b1 = 12.0 * r_b2 / (r_b1 + r_b2);
  const double denom = beta * (r_c2 + 9.0) + r_f;
  return beta * (v_b1 + 0.74) * (r_c2 + 9.0) / denom + 11.35 * r_f / denom +
         0.74 * beta * r_f * (r_c2 + 9.0) / (r_c1 * denom);
}

double eval_piston(double mass, double area, double v0, double k, double p0, double t_a, double t0) {
  require_range(mass, 30.0, 60.0, "M");
  require_range(area, 0.005, 0.020, "S");
  require_range(v0, 0.002, 0.010, "V0");
  require_range(k, 1000.0, 5000.0, "k");
  require_range(p0, 90000.0, 110000.0, "P0");
  require_range(t_a, 290.0, 296.0, "Ta");
  require_range(t0, 340.0, 360.0, "T0");
  const double a = p0 * area + 19.62 * mass - k * v0 / area;
  const double disc = a * a + 4.0 * k * p0 * v0 * t_a / t0;
  if (!(disc >= 0.0)) fail(ErrorCode::NegativeDiscriminant, "piston volume radicand is negative");
  const double v = area / (2.0 * k) * (std::sqrt(disc) - a);
  return 2.0 * 3.14159265358979323846 * std::sqrt(mass / (k + area * area * p0 * v0 * t_a / (t0 * v * v)));
}

std::vector<int> BenchmarkSpec::level_counts() const {
  std::vector<int> out;
  out.reserve(qual.size());
  for (const auto& f : qual) out.push_back(static_cast<int>(f.levels.size()));
  return out;
}

double BenchmarkSpec::evaluate(const Eigen::VectorXd& u, const std::vector<int>& v) const {
  if (static_cast<int>(u.size()) != quant_dim() || static_cast<int>(v.size()) != qual_dim())
    fail(ErrorCode::DimensionMismatch, "simulator input does not match the benchmark dimensions");
  std::vector<double> lv(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v[j] < 1 || v[j] > static_cast<int>(qual[j].levels.size()))
      fail(ErrorCode::LevelOutOfRange, "level index outside the factor's range");
    lv[j] = qual[j].levels[v[j] - 1];
  }
  switch (name) {
    case Benchmark::Beam:
      return eval_beam(u[0], u[1], v[0]);
    case Benchmark::Borehole:
      // quantitative: r, T_u, H_u, T_l, L, K_w; qualitative: r_w, H_l
      return eval_borehole(lv[0], u[0], u[1], u[2], u[3], lv[1], u[4], u[5]);
    case Benchmark::OTL:
      // quantitative: R_b1, R_b2, R_c1, R_c2; qualitative: R_f, beta
      return eval_otl(u[0], u[1], lv[0], u[2], u[3], lv[1]);
    case Benchmark::Piston:
      // quantitative: M, S, V0, Ta, T0; qualitative: k, P0
      return eval_piston(u[0], u[1], u[2], lv[0], lv[1], u[3], u[4]);
  }
  fail(ErrorCode::RangeError, "unknown benchmark");
}

BenchmarkSpec BenchmarkSpec::make(Benchmark which) {
  BenchmarkSpec spec;
  spec.name = which;
  switch (which) {
    case Benchmark::Beam:
      spec.quant = {{"L", 10.0, 20.0, {}}, {"h", 1.0, 2.0, {}}};
      // cross-section type; level "values" are the 1-based indices
      spec.qual = {{"section", 1.0, 6.0, {1, 2, 3, 4, 5, 6}}};
      break;
    case Benchmark::Borehole:
      return borehole_discretized(3, 4);
    case Benchmark::OTL:
      spec.quant = {{"R_b1", 50.0, 150.0, {}},
                    {"R_b2", 25.0, 70.0, {}},
                    {"R_c1", 1.2, 2.5, {}},
                    {"R_c2", 0.25, 1.2, {}}};
      spec.qual = {{"R_f", 0.5, 2.9, {0.5, 1.2, 2.1, 2.9}},
                   {"beta", 50.0, 300.0, {50, 100, 150, 200, 250, 300}}};
      break;
    case Benchmark::Piston:
      spec.quant = {{"M", 30.0, 60.0, {}},
                    {"S", 0.005, 0.020, {}},
                    {"V0", 0.002, 0.010, {}},
                    {"Ta", 290.0, 296.0, {}},
                    {"T0", 340.0, 360.0, {}}};
      spec.qual = {{"k", 1000.0, 5000.0, {1000, 2000, 3000, 4000, 5000}},
                   {"P0", 90000.0, 110000.0, {90000, 100000, 110000}}};
      break;
  }
  return spec;
}

BenchmarkSpec BenchmarkSpec::borehole_discretized(int q1, int q2) {
  if (q1 < 2 || q2 < 2) fail(ErrorCode::InvalidConfig, "discretization degrees must be at least 2");
  BenchmarkSpec spec;
  spec.name = Benchmark::Borehole;
  spec.quant = {{"r", 100.0, 50000.0, {}},   {"T_u", 63070.0, 115600.0, {}}, {"H_u", 990.0, 1110.0, {}},
                {"T_l", 63.1, 116.0, {}},    {"L", 1120.0, 1680.0, {}},      {"K_w", 9855.0, 12045.0, {}}};
  spec.qual = {{"r_w", 0.05, 0.15, equally_spaced(0.05, 0.15, q1)},
               {"H_l", 700.0, 820.0, equally_spaced(700.0, 820.0, q2)}};
  return spec;
}

// ---------------------------------------------------------------------------
// Designs

namespace {

/// Random permutation of stratum centers per column.
Eigen::MatrixXd lhd_centers(int n, int dims, Rng& rng) {
  Eigen::MatrixXd m(n, dims);
  std::vector<int> perm(n);
  for (int d = 0; d < dims; ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    for (int i = 0; i < n; ++i) m(i, d) = (perm[i] + 0.5) / n;
  }
  return m;
}

double min_pairwise_sqdist(const Eigen::MatrixXd& m) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m.rows(); ++i)
    for (int k = i + 1; k < m.rows(); ++k) best = std::min(best, (m.row(i) - m.row(k)).squaredNorm());
  return best;
}

}  // namespace

Eigen::MatrixXd maximin_lhd_unit(int n, int dims, Rng& rng) {
  if (n < 2) fail(ErrorCode::InvalidConfig, "designs need at least 2 points");
  Eigen::MatrixXd m = lhd_centers(n, dims, rng);
  double best = min_pairwise_sqdist(m);
  const int budget = 10 * n * dims;
  for (int t = 0; t < budget; ++t) {
    const int d = rng.uniform_int(0, dims - 1);
    const int i = rng.uniform_int(0, n - 1);
    int k = rng.uniform_int(0, n - 2);
    if (k >= i) ++k;
    std::swap(m(i, d), m(k, d));
    const double cand = min_pairwise_sqdist(m);
    if (cand > best)
      best = cand;
    else
      std::swap(m(i, d), m(k, d));  // revert
  }
  return m;
}

Design maximin_lhd(int n, const BenchmarkSpec& spec, Rng& rng) {
  const int I = spec.quant_dim();
  const int J = spec.qual_dim();
  const Eigen::MatrixXd unit = maximin_lhd_unit(n, I + J, rng);

  Design design;
  design.provenance = DesignProvenance::MaximinLHD;
  design.quant.resize(n, I);
  for (int d = 0; d < I; ++d)
    design.quant.col(d) = spec.quant[d].lo + (spec.quant[d].hi - spec.quant[d].lo) * unit.col(d).array();
  design.qual.assign(n, std::vector<int>(J));
  for (int j = 0; j < J; ++j) {
    const int a = static_cast<int>(spec.qual[j].levels.size());
    for (int i = 0; i < n; ++i) {
      // snap to the nearest level on the equally spaced grid
      const int idx = static_cast<int>(std::lround(unit(i, I + j) * (a - 1)));
      design.qual[i][j] = std::clamp(idx, 0, a - 1) + 1;
    }
  }
  return design;
}

Dataset dataset_from_design(const BenchmarkSpec& spec, const Design& design) {
  Dataset data;
  const int n = static_cast<int>(design.quant.rows());
  data.level_counts = spec.level_counts();
  data.ordinal_flags.assign(spec.qual_dim(), true);
  data.inputs.resize(n);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    data.inputs[i].u = design.quant.row(i).transpose();
    data.inputs[i].v = design.qual[i];
    data.y[i] = spec.evaluate(data.inputs[i].u, data.inputs[i].v);
  }
  return data;
}

std::vector<MixedInput> uniform_test_points(const BenchmarkSpec& spec, int count, Rng& rng) {
  std::vector<MixedInput> points(count);
  for (int i = 0; i < count; ++i) {
    points[i].u.resize(spec.quant_dim());
    for (int d = 0; d < spec.quant_dim(); ++d) points[i].u[d] = rng.uniform(spec.quant[d].lo, spec.quant[d].hi);
    points[i].v.resize(spec.qual_dim());
    for (int j = 0; j < spec.qual_dim(); ++j)
      points[i].v[j] = rng.uniform_int(1, static_cast<int>(spec.qual[j].levels.size()));
  }
  return points;
}

// ---------------------------------------------------------------------------
// Experiment pipeline

std::vector<ModelConfig> default_config_grid(const std::vector<int>& level_counts,
                                             const std::vector<bool>& ordinal_flags) {
  const int J = static_cast<int>(level_counts.size());
  const bool all_ordinal =
      !ordinal_flags.empty() && std::all_of(ordinal_flags.begin(), ordinal_flags.end(), [](bool b) { return b; });

  std::vector<ModelConfig> grid;
  for (Structure structure : {Structure::Multiplicative, Structure::Additive}) {
    for (QualKernel kernel : {QualKernel::Gaussian, QualKernel::Exponential, QualKernel::Linear}) {
      const std::vector<int> dims = kernel == QualKernel::Linear ? std::vector<int>{2, 3} : std::vector<int>{1, 2};
      for (int l : dims) {
        ModelConfig cfg;
        cfg.structure = structure;
        cfg.qual_kernel = kernel;
        cfg.ordinal_mode.assign(J, false);
        cfg.latent_dims.assign(J, l);
        for (int j = 0; j < J; ++j) cfg.latent_dims[j] = std::min(l, level_counts[j]);
        grid.push_back(cfg);
      }
      if (all_ordinal) {
        ModelConfig cfg;
        cfg.structure = structure;
        cfg.qual_kernel = kernel;
        cfg.ordinal_mode.assign(J, true);
        grid.push_back(cfg);
      }
    }
  }
  return grid;
}

std::vector<ExperimentRow> run_experiment(const BenchmarkSpec& spec, const std::vector<ModelConfig>& configs,
                                          const ExperimentOptions& options) {
  if (configs.empty()) fail(ErrorCode::EmptyCandidates, "no candidate configurations");
  const std::vector<int> level_counts = spec.level_counts();

  // shared test set across replications and configurations
  Rng test_rng = Rng::split(options.seed, 0x7e57ULL);
  const std::vector<MixedInput> test_points = uniform_test_points(spec, options.n_test, test_rng);
  Eigen::VectorXd truth(options.n_test);
  for (int i = 0; i < options.n_test; ++i) truth[i] = spec.evaluate(test_points[i].u, test_points[i].v);

  std::vector<ExperimentRow> rows;
  const int K = static_cast<int>(configs.size());
  for (int rep = 0; rep < options.replications; ++rep) {
    Rng design_rng = Rng::split(options.seed, 1000 + static_cast<std::uint64_t>(rep));
    const Design design = maximin_lhd(options.n_train, spec, design_rng);
    const Dataset data = dataset_from_design(spec, design);

    std::vector<FittedModel> models;
    std::vector<double> rrmses(K), fit_seconds(K), bics(K);
    std::vector<std::vector<Prediction>> per_model(K);
    models.reserve(K);
    for (int k = 0; k < K; ++k) {
      ModelConfig cfg = configs[k];
      if (options.restarts_override > 0) cfg.restarts = options.restarts_override;
      const std::uint64_t fit_seed =
          options.seed ^ (0x51ab1e5ULL + 7919ULL * static_cast<std::uint64_t>(rep * K + k));
      const auto t0 = std::chrono::steady_clock::now();
      models.push_back(fit_model(data, cfg, fit_seed, options.threads));
      fit_seconds[k] = elapsed_seconds(t0);
      per_model[k] = predict_batch(models[k], test_points);
      Eigen::VectorXd pred(options.n_test);
      for (int i = 0; i < options.n_test; ++i) pred[i] = per_model[k][i].mean;
      rrmses[k] = rrmse(truth, pred);
    }
    const std::vector<ModelScore> scores = score_models(models);
    for (int k = 0; k < K; ++k) bics[k] = scores[k].bic;

    for (int k = 0; k < K; ++k) {
      const ModelConfig& cfg = models[k].config;
      ExperimentRow row;
      row.benchmark = to_string(spec.name);
      row.replication = rep + 1;
      row.method = cfg.method_name();
      row.structure = to_string(cfg.structure);
      row.kernel = to_string(cfg.qual_kernel);
      row.latent = cfg.latent_dims.empty() ? "" : std::to_string(cfg.latent_dims.front());
      row.ordinal = cfg.ordinal_mode.empty() ? 0 : static_cast<int>(cfg.ordinal_mode.front());
      row.rrmse = rrmses[k];
      row.bic = scores[k].bic;
      row.loocv_loglik = scores[k].loocv_loglik;
      row.loocv_l2 = scores[k].loocv_l2;
      row.fit_seconds = fit_seconds[k];
      rows.push_back(row);
    }

    // selection / averaging rows
    const std::size_t base_offset = rows.size() - static_cast<std::size_t>(K);
    auto selected_row = [&](const std::string& method, int k) {
      ExperimentRow row = rows[base_offset + static_cast<std::size_t>(k)];
      row.method = method;
      row.fit_seconds = 0.0;
      rows.push_back(row);
    };
    selected_row("BIC_MSel", bic_select(bics));
    selected_row("LOOCV_loglik", loocv_select(models, LoocvLoss::LogLik));
    selected_row("LOOCV_l2", loocv_select(models, LoocvLoss::L2));

    const std::vector<Prediction> averaged = combine_bic_average(bics, per_model);
    Eigen::VectorXd avg_pred(options.n_test);
    for (int i = 0; i < options.n_test; ++i) avg_pred[i] = averaged[i].mean;
    ExperimentRow avg_row;
    avg_row.benchmark = to_string(spec.name);
    avg_row.replication = rep + 1;
    avg_row.method = "BIC_MAvr";
    avg_row.rrmse = rrmse(truth, avg_pred);
    avg_row.has_scores = false;
    rows.push_back(avg_row);
  }
  return rows;
}

std::string experiment_csv(const std::vector<ExperimentRow>& rows) {
  std::ostringstream os;
  os << "benchmark,replication,method,structure,kernel,latent,ordinal,rrmse,bic,loocv_loglik,loocv_l2,fit_seconds\n";
  for (const auto& r : rows) {
    os << r.benchmark << ',' << r.replication << ',' << r.method << ',' << r.structure << ',' << r.kernel << ','
       << r.latent << ',';
    if (r.has_scores)
      os << r.ordinal << ',' << format_double(r.rrmse) << ',' << format_double(r.bic) << ','
         << format_double(r.loocv_loglik) << ',' << format_double(r.loocv_l2);
    else
      os << ',' << format_double(r.rrmse) << ",,,";
    os << ',' << format_double(r.fit_seconds) << '\n';
  }
  return os.str();
}

}  // namespace mixkrig
