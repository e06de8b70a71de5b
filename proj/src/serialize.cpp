#include "gradclust/serialize.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gradclust {

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string csv_number(double x) {
  // same shortest round-trip formatting as the JSON artifacts
  return json(x).dump();
}

}  // namespace

json vec_to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vec vec_from_json(const json& j) {
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

json mat_to_json(const Mat& m) { return json(std::vector<double>(m.data(), m.data() + m.size())); }

Mat mat_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto xs = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(xs.size()) != rows * cols) throw std::invalid_argument("matrix size mismatch");
  return Eigen::Map<const Mat>(xs.data(), rows, cols);
}

json model_to_json(const SigmoidModel& m) {
  return json{{"d", m.d()},
              {"k", m.k()},
              {"beta", m.beta},
              {"mixture", m.mixture},
              {"noise", {{"kind", to_string(m.noise.kind)}, {"sigma", m.noise.sigma}}},
              {"W", mat_to_json(m.W)},
              {"u", vec_to_json(m.u)},
              {"seed", m.seed},
              {"M", m.label_bound()}};
}

SigmoidModel model_from_json(const json& j) {
  SigmoidModel m;
  const int d = j.at("d").get<int>(), k = j.at("k").get<int>();
  m.W = mat_from_json(j.at("W"), d, k);
  m.u = vec_from_json(j.at("u"));
  if (m.u.size() != k) throw std::invalid_argument("model: u has wrong length");
  m.beta = j.at("beta").get<double>();
  m.mixture = j.value("mixture", false);
  if (j.contains("noise")) {
    m.noise.kind = noise_kind_from_string(j["noise"].at("kind").get<std::string>());
    m.noise.sigma = j["noise"].value("sigma", 0.0);
  }
  m.seed = j.value("seed", std::uint64_t{0});
  return m;
}

json params_to_json(const AlgoParams& p) {
  json j{{"regime", to_string(p.regime)},
         {"calibrated", p.calibrated},
         {"k", p.k},
         {"beta", p.beta},
         {"u0", p.u0},
         {"kappa", p.kappa},
         {"delta", p.delta},
         {"rho", p.rho},
         {"Delta", p.Delta},
         {"w0", p.w0},
         {"xi0", p.xi0},
         {"gamma", p.gamma},
         {"gamma_closed_form", p.gamma_closed_form},
         {"c1", p.c1},
         {"c2", p.c2},
         {"m0", p.m0},
         {"n", p.n},
         {"n0", p.n0}};
  j["threshold_quantile"] = p.threshold_quantile ? json(*p.threshold_quantile) : json(nullptr);
  return j;
}

AlgoParams params_from_json(const json& j) {
  AlgoParams p;
  p.regime = regime_from_string(j.at("regime").get<std::string>());
  p.calibrated = j.value("calibrated", false);
  p.k = j.at("k").get<int>();
  p.beta = j.at("beta").get<double>();
  p.u0 = j.at("u0").get<double>();
  p.kappa = j.at("kappa").get<double>();
  p.delta = j.at("delta").get<double>();
  p.rho = j.at("rho").get<double>();
  p.Delta = j.at("Delta").get<double>();
  p.w0 = j.at("w0").get<double>();
  p.xi0 = j.at("xi0").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.gamma_closed_form = j.value("gamma_closed_form", 0.0);
  p.c1 = j.value("c1", 0.0);
  p.c2 = j.value("c2", 0.0);
  p.m0 = j.at("m0").get<std::size_t>();
  p.n = j.at("n").get<std::size_t>();
  p.n0 = j.at("n0").get<std::size_t>();
  if (j.contains("threshold_quantile") && !j["threshold_quantile"].is_null()) {
    p.threshold_quantile = j["threshold_quantile"].get<double>();
  }
  return p;
}

json gradient_to_json(const GradientEstimate& g) {
  return json{{"xi", vec_to_json(g.xi)},
              {"w", vec_to_json(g.w)},
              {"norm", g.norm},
              {"estimator", to_string(g.estimator)},
              {"samples_used", g.samples_used}};
}

json candidate_to_json(const Candidate& c) {
  return json{{"index", c.index},
              {"xi", vec_to_json(c.xi)},
              {"w_raw", vec_to_json(c.w_raw)},
              {"norm", c.norm},
              {"retained", c.retained},
              {"w_unit", c.retained ? vec_to_json(c.w_unit) : json(nullptr)}};
}

json cluster_to_json(const ClusterResult& r) {
  return json{{"d", r.centers.rows()},
              {"k", r.centers.cols()},
              {"centers", mat_to_json(r.centers)},
              {"assignments", r.assignments},
              {"inertia", r.inertia},
              {"inertia_history", r.inertia_history},
              {"iterations", r.iterations},
              {"seed", r.seed},
              {"antipodal", r.antipodal}};
}

json match_to_json(const MatchReport& r) {
  return json{{"permutation", r.permutation},
              {"signs", r.signs},
              {"per_vector_error", r.per_vector_error},
              {"max_error", r.max_error},
              {"mean_error", r.mean_error},
              {"total_cost", r.total_cost},
              {"sign_invariant", r.sign_invariant}};
}

json basis_to_json(const SubspaceEstimate& b, std::size_t n1) {
  return json{{"d", b.dim()},
              {"k", b.rank()},
              {"basis", mat_to_json(b.basis)},
              {"method", b.method},
              {"n1", n1},
              {"samples_used", b.samples_used},
              {"padded", b.padded}};
}

json report_to_json(const CheckReport& r) {
  return json{{"name", r.name},
              {"pass", r.pass},
              {"skipped", r.skipped},
              {"negative_control", r.negative_control},
              {"as_expected", r.as_expected()},
              {"trials", r.trials},
              {"seed", r.seed},
              {"runtime_s", r.runtime_s},
              {"note", r.note},
              {"stats", r.stats}};
}

json partition_to_json(const Partition& p) {
  json sizes = json::array();
  for (const auto& s : p.sets) sizes.push_back(s.size());
  json dist = json::array();
  for (double x : p.max_distance) dist.push_back(finite_or_null(x));
  return json{{"sizes", sizes},
              {"signs", p.signs},
              {"max_distance", dist},
              {"region_frequency", p.region_frequency},
              {"half_band_frequency", p.half_band_frequency},
              {"gamma_observed", p.gamma_observed},
              {"threshold", p.threshold}};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) { return json::parse(read_text(path)); }

void write_dataset_jsonl(const fs::path& path, const Dataset& ds) {
  std::string text;
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
    const Vec x = ds.X.row(i).transpose();
    text += json{{"x", vec_to_json(x)}, {"y", ds.y(i)}}.dump();
    text += '\n';
  }
  write_text(path, text);
}

Dataset read_dataset_jsonl(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<Vec> xs;
  std::vector<double> ys;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    xs.push_back(vec_from_json(j.at("x")));
    ys.push_back(j.at("y").get<double>());
  }
  Dataset ds;
  const Eigen::Index d = xs.empty() ? 0 : xs.front().size();
  ds.X.resize(static_cast<Eigen::Index>(xs.size()), d);
  ds.y.resize(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != d) throw std::invalid_argument("dataset rows have different lengths");
    ds.X.row(static_cast<Eigen::Index>(i)) = xs[i].transpose();
    ds.y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  return ds;
}

void write_candidates_jsonl(const fs::path& path, const CandidateSet& cs) {
  std::string text;
  for (const auto& c : cs.candidates) text += candidate_to_json(c).dump() + "\n";
  write_text(path, text);
}

void write_gradients_jsonl(const fs::path& path, const std::vector<GradientEstimate>& gs) {
  std::string text;
  for (const auto& g : gs) text += gradient_to_json(g).dump() + "\n";
  write_text(path, text);
}

void write_norms_csv(const fs::path& path, const CandidateSet& cs) {
  std::string text = "index,norm,retained\n";
  for (const auto& c : cs.candidates) {
    text += std::to_string(c.index) + "," + csv_number(c.norm) + "," + (c.retained ? "1" : "0") + "\n";
  }
  write_text(path, text);
}

void write_errors_csv(const fs::path& path, const MatchReport& m) {
  std::string text = "unit,center,sign,error\n";
  for (std::size_t l = 0; l < m.permutation.size(); ++l) {
    text += std::to_string(l) + "," + std::to_string(m.permutation[l]) + "," + std::to_string(m.signs[l]) + "," +
            csv_number(m.per_vector_error[l]) + "\n";
  }
  write_text(path, text);
}

void write_tail_csv(const fs::path& path, const std::vector<CheckReport>& reports) {
  std::string text = "check,size,exceed,p_hat,lo,hi,bound\n";
  for (const auto& r : reports) {
    if (!r.stats.contains("points") || !r.stats["points"].is_array()) continue;
    for (const auto& p : r.stats["points"]) {
      const json size = p.contains("n") ? p["n"] : p["n0"];
      const json bound = p.contains("bound") ? p["bound"] : json(nullptr);
      text += r.name + "," + size.dump() + "," + p["exceed"].dump() + "," + p["p_hat"].dump() + "," +
              p["wilson99"]["lo"].dump() + "," + p["wilson99"]["hi"].dump() + "," +
              (bound.is_null() ? std::string() : bound.dump()) + "\n";
    }
  }
  write_text(path, text);
}

}  // namespace gradclust
