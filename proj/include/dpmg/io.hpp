#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dpmg/clustering.hpp"
#include "dpmg/density.hpp"
#include "dpmg/model.hpp"
#include "dpmg/sampler.hpp"

namespace dpmg {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// number formatting: 17 significant digits round-trips doubles exactly
// ---------------------------------------------------------------------------

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> column_names;  // empty when the file has no header
  MatrixXd data;
  std::optional<std::vector<std::int32_t>> labels;  // from a "label" column
};

inline void write_csv(const MatrixXd& data, const std::string& path,
                      std::vector<std::string> column_names = {}) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open for writing: " + path);
  if (column_names.empty()) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      column_names.push_back("x" + std::to_string(j + 1));
    }
  }
  for (std::size_t j = 0; j < column_names.size(); ++j) {
    out << (j ? "," : "") << column_names[j];
  }
  out << "\n";
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      out << (j ? "," : "") << fmt_double(data(i, j));
    }
    out << "\n";
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// Numeric CSV, optional header (auto-detected). A column whose header equals
// label_column is split off as integer reference labels.
inline CsvTable read_csv(const std::string& path, const std::string& label_column = "label") {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open data file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw validation_error("empty CSV file: " + path);
  CsvTable table;
  std::size_t first_data_row = 0;
  double tmp;
  bool header = false;
  for (const auto& cell : rows[0]) {
    if (!parse_double(cell, tmp)) header = true;
  }
  if (header) {
    table.column_names = rows[0];
    first_data_row = 1;
    if (rows.size() == 1) throw validation_error("CSV has a header but no rows: " + path);
  }
  const std::size_t ncol = rows[first_data_row].size();
  std::ptrdiff_t label_idx = -1;
  for (std::size_t j = 0; j < table.column_names.size(); ++j) {
    if (table.column_names[j] == label_column) label_idx = static_cast<std::ptrdiff_t>(j);
  }
  const std::size_t data_cols = label_idx >= 0 ? ncol - 1 : ncol;
  const std::size_t nrow = rows.size() - first_data_row;
  table.data.resize(static_cast<Eigen::Index>(nrow), static_cast<Eigen::Index>(data_cols));
  if (label_idx >= 0) table.labels = std::vector<std::int32_t>();
  for (std::size_t r = 0; r < nrow; ++r) {
    const auto& cells = rows[r + first_data_row];
    if (cells.size() != ncol) {
      throw validation_error("CSV row " + std::to_string(r + 1) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(ncol));
    }
    std::size_t jj = 0;
    for (std::size_t j = 0; j < ncol; ++j) {
      double v;
      if (!parse_double(cells[j], v)) {
        throw validation_error("non-numeric cell '" + cells[j] + "' at row " +
                               std::to_string(r + 1));
      }
      if (static_cast<std::ptrdiff_t>(j) == label_idx) {
        table.labels->push_back(static_cast<std::int32_t>(v));
      } else {
        table.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(jj++)) = v;
      }
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// JSON serialization of the model types (field names are part of the format)
// ---------------------------------------------------------------------------

inline ordered_json vector_to_json(const VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline ordered_json matrix_to_json(const MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline VectorXd vector_from_json(const ordered_json& a) {
  if (!a.is_array()) throw validation_error("expected a JSON array for a vector");
  VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

inline MatrixXd matrix_from_json(const ordered_json& a) {
  if (!a.is_array() || a.empty()) throw validation_error("expected a JSON array of rows");
  const auto rows = static_cast<Eigen::Index>(a.size());
  const auto cols = static_cast<Eigen::Index>(a[0].size());
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(a[static_cast<std::size_t>(i)].size()) != cols) {
      throw validation_error("ragged JSON matrix");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

inline ordered_json base_measure_to_json(const BaseMeasure& pi) {
  ordered_json j;
  j["m0"] = vector_to_json(pi.m0);
  j["B0"] = matrix_to_json(pi.B0.mat());
  j["nu0"] = pi.nu0;
  j["S0"] = matrix_to_json(pi.S0.mat());
  return j;
}

inline BaseMeasure base_measure_from_json(const ordered_json& j) {
  return BaseMeasure(vector_from_json(j.at("m0")), SPDMatrix(matrix_from_json(j.at("B0"))),
                     j.at("nu0").get<double>(), SPDMatrix(matrix_from_json(j.at("S0"))));
}

inline ordered_json affine_to_json(const AffineMap& g) {
  ordered_json j;
  j["C"] = matrix_to_json(g.C());
  j["b"] = vector_to_json(g.b());
  return j;
}

inline AffineMap affine_from_json(const ordered_json& j) {
  return AffineMap(matrix_from_json(j.at("C")), vector_from_json(j.at("b")));
}

inline ordered_json hyperprior_to_json(const HyperPriorSpec& h) {
  ordered_json j;
  j["b0_df"] = h.b0_df;
  j["b0_scale"] = matrix_to_json(h.b0_scale.mat());
  j["m0_mean"] = vector_to_json(h.m0_mean);
  j["kappa0"] = h.kappa0;
  j["m0_cov_is_B0"] = h.m0_cov_is_b0;
  return j;
}

inline HyperPriorSpec hyperprior_from_json(const ordered_json& j) {
  return HyperPriorSpec(j.at("b0_df").get<double>(),
                        SPDMatrix(matrix_from_json(j.at("b0_scale"))),
                        vector_from_json(j.at("m0_mean")), j.value("kappa0", 1.0),
                        j.value("m0_cov_is_B0", true));
}

inline ordered_json alpha_to_json(const AlphaSpec& a) {
  ordered_json j;
  if (a.mode == AlphaSpec::Mode::fixed) {
    j["mode"] = "fixed";
    j["value"] = a.value;
  } else {
    j["mode"] = "gamma";
    j["shape"] = a.shape;
    j["rate"] = a.rate;
  }
  return j;
}

inline AlphaSpec alpha_from_json(const ordered_json& j) {
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "fixed") return AlphaSpec::fixed(j.at("value").get<double>());
  if (mode == "gamma") {
    return AlphaSpec::gamma_prior(j.at("shape").get<double>(), j.at("rate").get<double>());
  }
  throw validation_error("alpha: mode must be 'fixed' or 'gamma'");
}

inline ordered_json chain_config_to_json(const ChainConfig& c) {
  ordered_json j;
  j["n_iter"] = c.n_iter;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["aux_m"] = c.aux_m;
  j["seed"] = c.seed;
  j["record_params"] = c.record_params;
  j["init_singletons"] = c.init_singletons;
  return j;
}

inline ChainConfig chain_config_from_json(const ordered_json& j) {
  ChainConfig c;
  c.n_iter = j.value("n_iter", c.n_iter);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.thin = j.value("thin", c.thin);
  c.aux_m = j.value("aux_m", c.aux_m);
  c.seed = j.value("seed", c.seed);
  c.record_params = j.value("record_params", c.record_params);
  c.init_singletons = j.value("init_singletons", c.init_singletons);
  c.validate();
  return c;
}

struct GridSpec {
  std::optional<std::vector<GridAxis>> axes;  // explicit axes win
  double pad_fraction = 0.25;
  int steps_per_axis = 200;

  Grid build(const std::optional<MatrixXd>& data) const {
    if (axes) return Grid(*axes);
    if (!data) throw validation_error("grid: no explicit axes and no data to derive them");
    return Grid::from_data(*data, pad_fraction, steps_per_axis);
  }
};

inline ordered_json grid_spec_to_json(const GridSpec& g) {
  ordered_json j;
  if (g.axes) {
    ordered_json mins = ordered_json::array(), maxs = ordered_json::array(),
                 steps = ordered_json::array();
    for (const auto& a : *g.axes) {
      mins.push_back(a.min);
      maxs.push_back(a.max);
      steps.push_back(a.steps);
    }
    j["min"] = mins;
    j["max"] = maxs;
    j["steps"] = steps;
  } else {
    j["pad_fraction"] = g.pad_fraction;
    j["steps_per_axis"] = g.steps_per_axis;
  }
  return j;
}

inline GridSpec grid_spec_from_json(const ordered_json& j) {
  GridSpec g;
  if (j.contains("min")) {
    std::vector<GridAxis> axes;
    const auto& mins = j.at("min");
    const auto& maxs = j.at("max");
    const auto& steps = j.at("steps");
    if (mins.size() != maxs.size() || mins.size() != steps.size()) {
      throw validation_error("grid: min/max/steps lengths differ");
    }
    for (std::size_t k = 0; k < mins.size(); ++k) {
      axes.push_back({mins[k].get<double>(), maxs[k].get<double>(), steps[k].get<int>()});
    }
    g.axes = std::move(axes);
  } else {
    g.pad_fraction = j.value("pad_fraction", g.pad_fraction);
    g.steps_per_axis = j.value("steps_per_axis", g.steps_per_axis);
  }
  return g;
}

// ---------------------------------------------------------------------------
// run configuration for fit / analyze
// ---------------------------------------------------------------------------

struct EmpiricalBayesRule {
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double nu0 = 0.0;  // 0 means "derive from d"
};

struct RunConfig {
  std::optional<BaseMeasure> base_measure;
  std::optional<EmpiricalBayesRule> empirical;
  std::optional<HyperPriorSpec> hyperprior;
  AlphaSpec alpha = AlphaSpec::fixed(1.0);
  ChainConfig sampler;
  std::optional<GridSpec> grid;

  // Smallest degrees of freedom meeting both the finite-mean requirement and
  // the large-sample robustness condition.
  static double default_nu0(int d) {
    const double robust = (static_cast<double>(d) + 1.0) * (2.0 * d - 3.0);
    return std::max(static_cast<double>(d) + 1.0, robust) + 1.0;
  }

  BaseMeasure resolve_base_measure(const MatrixXd& data) const {
    if (base_measure) return *base_measure;
    EmpiricalBayesRule rule = empirical.value_or(EmpiricalBayesRule{});
    const double nu0 =
        rule.nu0 > 0.0 ? rule.nu0 : default_nu0(static_cast<int>(data.cols()));
    return empirical_bayes(data, rule.gamma1, rule.gamma2, nu0);
  }
};

inline ordered_json run_config_to_json(const RunConfig& c) {
  ordered_json j;
  if (c.base_measure) j["base_measure"] = base_measure_to_json(*c.base_measure);
  if (c.empirical) {
    ordered_json e;
    e["gamma1"] = c.empirical->gamma1;
    e["gamma2"] = c.empirical->gamma2;
    if (c.empirical->nu0 > 0.0) e["nu0"] = c.empirical->nu0;
    j["empirical_bayes"] = e;
  }
  if (c.hyperprior) j["hyperprior"] = hyperprior_to_json(*c.hyperprior);
  j["alpha"] = alpha_to_json(c.alpha);
  j["sampler"] = chain_config_to_json(c.sampler);
  if (c.grid) j["grid"] = grid_spec_to_json(*c.grid);
  return j;
}

inline RunConfig run_config_from_json(const ordered_json& j) {
  RunConfig c;
  if (j.contains("base_measure")) c.base_measure = base_measure_from_json(j.at("base_measure"));
  if (j.contains("empirical_bayes")) {
    EmpiricalBayesRule rule;
    const auto& e = j.at("empirical_bayes");
    rule.gamma1 = e.value("gamma1", 1.0);
    rule.gamma2 = e.value("gamma2", 1.0);
    rule.nu0 = e.value("nu0", 0.0);
    c.empirical = rule;
  }
  if (j.contains("hyperprior")) c.hyperprior = hyperprior_from_json(j.at("hyperprior"));
  if (j.contains("alpha")) c.alpha = alpha_from_json(j.at("alpha"));
  if (j.contains("sampler")) c.sampler = chain_config_from_json(j.at("sampler"));
  if (j.contains("grid")) c.grid = grid_spec_from_json(j.at("grid"));
  return c;
}

// ---------------------------------------------------------------------------
// draw sets as JSON lines
// ---------------------------------------------------------------------------

inline ordered_json cluster_to_json(const Cluster& c) {
  ordered_json j;
  j["mu"] = vector_to_json(c.mu);
  j["sigma"] = matrix_to_json(c.sigma.mat());
  return j;
}

// One record per retained draw: iter, alpha, K, allocations, clusters, in
// that order. A per-draw "pi" field is appended only for hyperprior chains,
// where the base measure varies along the chain; for fixed-pi chains it is
// written once in the provenance line.
inline void write_drawset(const DrawSet& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open for writing: " + path);
  ordered_json prov;
  prov["version"] = kVersion;
  prov["n"] = ds.n;
  prov["d"] = ds.d;
  prov["hyper_mode"] = ds.hyper_mode;
  prov["config"] = chain_config_to_json(ds.config);
  if (!ds.hyper_mode && !ds.draws.empty() && ds.draws.front().pi) {
    prov["pi"] = base_measure_to_json(*ds.draws.front().pi);
  }
  ordered_json head;
  head["provenance"] = prov;
  out << head.dump() << "\n";
  for (const auto& dr : ds.draws) {
    ordered_json j;
    j["iter"] = dr.iter;
    j["alpha"] = dr.alpha;
    j["K"] = dr.K;
    ordered_json alloc = ordered_json::array();
    for (auto a : dr.allocations) alloc.push_back(a);
    j["allocations"] = std::move(alloc);
    ordered_json clusters = ordered_json::array();
    for (const auto& c : dr.clusters) clusters.push_back(cluster_to_json(c));
    j["clusters"] = std::move(clusters);
    if (ds.hyper_mode && dr.pi) j["pi"] = base_measure_to_json(*dr.pi);
    out << j.dump() << "\n";
  }
}

inline DrawSet read_drawset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open draws file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw validation_error("empty draws file: " + path);
  const ordered_json head = ordered_json::parse(line);
  if (!head.contains("provenance")) {
    throw validation_error("draws file lacks a provenance line: " + path);
  }
  const auto& prov = head.at("provenance");
  DrawSet ds;
  ds.n = prov.at("n").get<int>();
  ds.d = prov.at("d").get<int>();
  ds.hyper_mode = prov.at("hyper_mode").get<bool>();
  ds.config = chain_config_from_json(prov.at("config"));
  std::optional<BaseMeasure> fixed_pi;
  if (prov.contains("pi")) fixed_pi = base_measure_from_json(prov.at("pi"));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const ordered_json j = ordered_json::parse(line);
    Draw dr;
    dr.iter = j.at("iter").get<int>();
    dr.alpha = j.at("alpha").get<double>();
    dr.K = j.at("K").get<int>();
    for (const auto& a : j.at("allocations")) {
      dr.allocations.push_back(a.get<std::int32_t>());
    }
    std::vector<int> sizes(static_cast<std::size_t>(dr.K), 0);
    for (auto a : dr.allocations) ++sizes[static_cast<std::size_t>(a)];
    std::size_t ci = 0;
    for (const auto& cj : j.at("clusters")) {
      Cluster c{vector_from_json(cj.at("mu")), SPDMatrix(matrix_from_json(cj.at("sigma"))),
                ci < sizes.size() ? sizes[ci] : 0};
      dr.clusters.push_back(std::move(c));
      ++ci;
    }
    if (j.contains("pi")) {
      dr.pi = base_measure_from_json(j.at("pi"));
    } else if (fixed_pi) {
      dr.pi = fixed_pi;
    }
    ds.draws.push_back(std::move(dr));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// result writers
// ---------------------------------------------------------------------------

inline void write_matrix_csv(const MatrixXd& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open for writing: " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << (j ? "," : "") << fmt_double(m(i, j));
    }
    out << "\n";
  }
}

inline void write_density_csv(const DensityEstimate& est, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open for writing: " + path);
  for (std::size_t k = 0; k < est.grid.dim(); ++k) out << "x" << (k + 1) << ",";
  out << "density\n";
  for (std::size_t p = 0; p < est.values.size(); ++p) {
    const VectorXd x = est.grid.point(p);
    for (Eigen::Index k = 0; k < x.size(); ++k) out << fmt_double(x(k)) << ",";
    out << fmt_double(est.values[p]) << "\n";
  }
}

inline void write_traces_csv(const std::vector<TraceRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open for writing: " + path);
  out << "iter,K,alpha,log_likelihood\n";
  for (const auto& r : rows) {
    out << r.iter << "," << r.K << "," << fmt_double(r.alpha) << ","
        << fmt_double(r.log_likelihood) << "\n";
  }
}

inline ordered_json partition_to_json(const Partition& p) {
  ordered_json j;
  ordered_json labels = ordered_json::array();
  for (auto l : p.labels()) labels.push_back(l);
  j["labels"] = std::move(labels);
  j["n_clusters"] = p.n_blocks();
  return j;
}

inline ordered_json credible_ball_to_json(const CredibleBall& ball) {
  ordered_json j;
  j["level"] = ball.level;
  j["radius"] = ball.radius;
  j["vi_log_base"] = "e";
  j["center"] = partition_to_json(ball.center);
  j["vertical_lower"] = partition_to_json(ball.vertical_lower);
  j["vertical_upper"] = partition_to_json(ball.vertical_upper);
  j["horizontal"] = partition_to_json(ball.horizontal);
  return j;
}

inline void write_json_file(const ordered_json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

inline void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open for writing: " + path);
  out << "block";
  for (auto c : cm.col_labels) out << ",ref_" << c;
  out << "\n";
  for (std::size_t i = 0; i < cm.counts.size(); ++i) {
    out << cm.row_labels[i];
    for (int v : cm.counts[i]) out << "," << v;
    out << "\n";
  }
}

// Manifest: everything needed to reproduce a command's outputs byte for
// byte. Worker count is deliberately excluded; results do not depend on it.
inline ordered_json make_manifest(const std::string& command, std::uint64_t seed,
                                  const ordered_json& config,
                                  const std::vector<std::string>& inputs,
                                  const std::vector<std::string>& outputs) {
  ordered_json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["seed"] = seed;
  m["config"] = config;
  m["config_hash"] = hex64(fnv1a64(config.dump()));
  ordered_json in = ordered_json::array();
  for (const auto& p : inputs) in.push_back(p);
  ordered_json outp = ordered_json::array();
  for (const auto& p : outputs) outp.push_back(p);
  m["inputs"] = std::move(in);
  m["outputs"] = std::move(outp);
  return m;
}

}  // namespace dpmg
