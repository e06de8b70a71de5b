#include "gradclust/run.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "gradclust/cluster.hpp"
#include "gradclust/errors.hpp"
#include "gradclust/parallel.hpp"
#include "gradclust/serialize.hpp"
#include "gradclust/subspace.hpp"
#include "gradclust/verify.hpp"

namespace gradclust {

namespace {

const std::vector<std::string> kStringFields = {"sampling", "estimator", "regime", "dataset", "out"};

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

void apply_env(json& j) {
  for (const auto& field : config_fields()) {
    if (field == "model" || field == "checks") continue;
    const char* raw = std::getenv(("GRADCLUST_" + upper(field)).c_str());
    if (raw == nullptr) continue;
    const std::string value(raw);
    if (std::find(kStringFields.begin(), kStringFields.end(), field) != kStringFields.end()) {
      j[field] = value;
      continue;
    }
    try {
      j[field] = json::parse(value);
    } catch (const json::parse_error&) {
      throw ConfigError("environment override GRADCLUST_" + upper(field) + " is not a valid value: " + value);
    }
  }
}

template <typename T>
std::optional<T> opt_field(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

SigmoidModel model_from_spec(const json& spec) {
  SigmoidModel m;
  if (spec.contains("W")) {
    m = model_from_json(spec);
  } else {
    const std::string kind = spec.value("kind", "standard_basis");
    const int d = spec.value("d", 3);
    const double beta = spec.value("beta", 1.0);
    if (kind == "standard_basis") {
      m = standard_basis_model(d, spec.value("k", d), beta);
    } else if (kind == "angle_pair") {
      const Vec u = spec.contains("u") ? vec_from_json(spec["u"]) : Vec::Constant(2, 0.5);
      m = angle_pair_model(d, spec.value("theta", M_PI / 3.0), u, beta);
    } else if (kind == "random") {
      const int k = spec.value("k", 2);
      const Vec u = spec.contains("u") ? vec_from_json(spec["u"]) : Vec::Constant(k, 1.0 / k);
      m = random_model(d, k, u, beta, spec.value("seed", std::uint64_t{1}));
    } else {
      throw ConfigError("model.kind '" + kind + "' is not one of standard_basis, angle_pair, random");
    }
    if (spec.contains("u") && kind == "standard_basis") m.u = vec_from_json(spec["u"]);
    if (spec.contains("mixture")) m.mixture = spec["mixture"].get<bool>();
    if (spec.contains("noise")) {
      m.noise.kind = noise_kind_from_string(spec["noise"].at("kind").get<std::string>());
      m.noise.sigma = spec["noise"].value("sigma", 0.0);
    }
  }
  try {
    require_valid(m);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return m;
}

std::string fixed(double x, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << x;
  return ss.str();
}

struct Pipeline {
  std::unique_ptr<GradientEstimator> estimator;
  std::optional<SubspaceEstimate> basis;
};

Pipeline build_estimator(const RunConfig& cfg, const AlgoParams& params) {
  Pipeline p;
  if (cfg.estimator == EstimatorKind::oracle) {
    p.estimator = std::make_unique<OracleEstimator>(cfg.model, params.n0);
    return p;
  }
  Dataset ds = cfg.dataset_path ? read_dataset_jsonl(*cfg.dataset_path)
                                : sample_gaussian_dataset(cfg.model, params.n, stage_seed(cfg.seed, "dataset"));
  if (ds.dim() != cfg.model.d()) throw ConfigError("dataset dimension differs from model.d");
  if (cfg.estimator == EstimatorKind::kernel) {
    p.estimator = std::make_unique<KernelEstimator>(ds);
    return p;
  }
  // projected: first n1 rows estimate the span, the next n2 feed the estimator
  const std::size_t n = ds.size();
  if (cfg.n1 + cfg.n2 > n) throw ConfigError("n1 + n2 exceeds the dataset size");
  const std::size_t n2 = cfg.n2 == 0 ? n - cfg.n1 : cfg.n2;
  Dataset span_ds, est_ds;
  span_ds.X = ds.X.topRows(static_cast<Eigen::Index>(cfg.n1));
  span_ds.y = ds.y.head(static_cast<Eigen::Index>(cfg.n1));
  est_ds.X = ds.X.middleRows(static_cast<Eigen::Index>(cfg.n1), static_cast<Eigen::Index>(n2));
  est_ds.y = ds.y.segment(static_cast<Eigen::Index>(cfg.n1), static_cast<Eigen::Index>(n2));
  SpanOptions so;
  so.probes = std::min<std::size_t>(so.probes, cfg.n1);
  so.threads = cfg.resolved_threads();
  p.basis = estimate_span(span_ds, cfg.model.k(), Rng(stage_seed(cfg.seed, "span")), so);
  p.basis->samples_used = cfg.n1;
  p.estimator = std::make_unique<ProjectedEstimator>(est_ds, *p.basis);
  return p;
}

}  // namespace

std::string to_string(Sampling s) { return s == Sampling::gaussian ? "gaussian" : "oracle"; }

Sampling sampling_from_string(const std::string& name) {
  if (name == "gaussian") return Sampling::gaussian;
  if (name == "oracle") return Sampling::oracle;
  throw ConfigError("sampling '" + name + "' is not one of gaussian, oracle");
}

unsigned RunConfig::resolved_threads() const { return threads == 0 ? default_threads() : threads; }

const std::vector<std::string>& config_fields() {
  static const std::vector<std::string> fields = {
      "model", "dataset", "sampling", "estimator", "regime", "calibrated", "delta", "rho", "band", "w0",
      "xi0",   "quantile", "m0",      "n",         "n0",     "n1",         "n2",    "top", "sign_invariant",
      "ground_truth", "seed", "threads", "out",    "checks", "negative"};
  return fields;
}

RunConfig config_from_json(json j, bool use_env) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (j.contains("config") && j.contains("outputs")) j = json(j["config"]);  // a run manifest
  if (use_env) apply_env(j);
  for (const auto& [key, _] : j.items()) {
    const auto& f = config_fields();
    if (std::find(f.begin(), f.end(), key) == f.end()) throw ConfigError("unknown config field '" + key + "'");
  }

  RunConfig c;
  try {
    if (j.contains("model")) {
      if (j["model"].is_string()) {
        c.model_spec = read_json(j["model"].get<std::string>());
      } else {
        c.model_spec = j["model"];
      }
    }
    c.model = model_from_spec(c.model_spec);
    if (auto v = opt_field<std::string>(j, "dataset")) c.dataset_path = *v;
    if (auto v = opt_field<std::string>(j, "sampling")) c.sampling = sampling_from_string(*v);
    if (auto v = opt_field<std::string>(j, "estimator")) c.estimator = estimator_kind_from_string(*v);
    if (auto v = opt_field<std::string>(j, "regime")) c.regime = regime_from_string(*v);
    c.calibrated = opt_field<bool>(j, "calibrated").value_or(false);
    c.overrides.delta = opt_field<double>(j, "delta");
    c.overrides.rho = opt_field<double>(j, "rho");
    c.overrides.Delta = opt_field<double>(j, "band");
    c.overrides.w0 = opt_field<double>(j, "w0");
    c.overrides.xi0 = opt_field<double>(j, "xi0");
    c.overrides.quantile = opt_field<double>(j, "quantile");
    c.overrides.m0 = opt_field<std::size_t>(j, "m0");
    c.overrides.n = opt_field<std::size_t>(j, "n");
    c.overrides.n0 = opt_field<std::size_t>(j, "n0");
    c.n1 = opt_field<std::size_t>(j, "n1").value_or(0);
    c.n2 = opt_field<std::size_t>(j, "n2").value_or(0);
    c.top = opt_field<std::size_t>(j, "top").value_or(50);
    c.sign_invariant = opt_field<bool>(j, "sign_invariant").value_or(true);
    c.ground_truth = opt_field<bool>(j, "ground_truth").value_or(true);
    c.seed = opt_field<std::uint64_t>(j, "seed").value_or(1);
    c.threads = opt_field<unsigned>(j, "threads").value_or(0);
    c.out = opt_field<std::string>(j, "out").value_or("out");
    c.checks = opt_field<std::vector<std::string>>(j, "checks").value_or(std::vector<std::string>{});
    c.negative = opt_field<bool>(j, "negative").value_or(false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.projection = c.estimator == EstimatorKind::projected;
  c.model_spec = model_to_json(c.model);
  validate_config(c);
  return c;
}

RunConfig load_config(const fs::path& path, bool use_env) {
  json j;
  try {
    j = read_json(path);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(std::move(j), use_env);
}

void validate_config(const RunConfig& c) {
  const bool needs_oracle = c.estimator == EstimatorKind::oracle;
  const bool needs_gaussian = c.estimator == EstimatorKind::kernel || c.estimator == EstimatorKind::projected;
  if (!needs_oracle && !needs_gaussian) {
    throw ConfigError("field 'estimator' must be oracle, kernel or projected, got '" + to_string(c.estimator) + "'");
  }
  if (needs_oracle && c.sampling != Sampling::oracle) {
    throw ConfigError("field 'estimator' = oracle requires field 'sampling' = oracle, got 'sampling' = " +
                      to_string(c.sampling));
  }
  if (needs_gaussian && c.sampling != Sampling::gaussian) {
    throw ConfigError("field 'estimator' = " + to_string(c.estimator) +
                      " requires field 'sampling' = gaussian, got 'sampling' = " + to_string(c.sampling));
  }
  if (c.sampling == Sampling::oracle && c.dataset_path) {
    throw ConfigError("field 'dataset' is only meaningful with field 'sampling' = gaussian");
  }
  if (c.projection) {
    if (c.n1 == 0) throw ConfigError("field 'n1' must be positive when field 'estimator' = projected");
    const std::size_t n = c.overrides.n.value_or(5000);
    if (!c.dataset_path && c.n1 + c.n2 > n) throw ConfigError("fields 'n1' + 'n2' exceed field 'n'");
    if (!c.dataset_path && c.n1 >= n) throw ConfigError("field 'n1' leaves no samples for field 'n2'");
  }
  if (c.top == 1 && c.model.k() > 1) throw ConfigError("field 'top' must be at least k");
}

json config_to_json(const RunConfig& c) {
  json j{{"model", c.model_spec},
         {"sampling", to_string(c.sampling)},
         {"estimator", to_string(c.estimator)},
         {"regime", to_string(c.regime)},
         {"calibrated", c.calibrated},
         {"n1", c.n1},
         {"n2", c.n2},
         {"top", c.top},
         {"sign_invariant", c.sign_invariant},
         {"ground_truth", c.ground_truth},
         {"seed", c.seed},
         {"checks", c.checks},
         {"negative", c.negative}};
  if (c.dataset_path) j["dataset"] = *c.dataset_path;
  auto put = [&](const char* key, const auto& v) {
    if (v) j[key] = *v;
  };
  put("delta", c.overrides.delta);
  put("rho", c.overrides.rho);
  put("band", c.overrides.Delta);
  put("w0", c.overrides.w0);
  put("xi0", c.overrides.xi0);
  put("quantile", c.overrides.quantile);
  put("m0", c.overrides.m0);
  put("n", c.overrides.n);
  put("n0", c.overrides.n0);
  return j;
}

std::uint64_t stage_seed(std::uint64_t seed, const std::string& stage) { return Rng(seed).split(stage).key(); }

AlgoParams resolve_params(const RunConfig& c) {
  const auto report = validate_model(c.model);
  const int k = c.model.k();
  const double delta = c.overrides.delta.value_or(0.2);
  const double rho = c.overrides.rho.value_or(0.5);
  AlgoParams p;
  try {
    if (c.regime == Regime::theory) {
      p = derive_params(k, report.u0, report.sigma_min, c.model.beta, delta, rho);
      apply_overrides(p, c.overrides);
    } else if (c.calibrated) {
      p = calibrated_params(k, report.u0, report.sigma_min, c.model.beta, delta, rho);
      apply_overrides(p, c.overrides);
    } else {
      p = practical_params(c.model.d(), k, c.overrides);
      p.beta = c.model.beta;
      p.u0 = report.u0;
      p.kappa = report.sigma_min;
      p.delta = delta;
      p.rho = rho;
      p.c1 = coefficient_c1(p.beta);
      p.c2 = coefficient_c2(p.beta);
    }
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("field 'delta': ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

// ---------------------------------------------------------------------------

int cmd_generate(const RunConfig& cfg) {
  const fs::path out(cfg.out);
  const AlgoParams params = resolve_params(cfg);
  json outputs = json::array({"model.json"});
  write_json(out / "model.json", model_to_json(cfg.model));
  if (cfg.sampling == Sampling::gaussian) {
    const auto ds = sample_gaussian_dataset(cfg.model, params.n, stage_seed(cfg.seed, "dataset"));
    write_dataset_jsonl(out / "dataset.jsonl", ds);
    outputs.push_back("dataset.jsonl");
  }
  write_json(out / "manifest.json", json{{"command", "generate"},
                                         {"config", config_to_json(cfg)},
                                         {"params", params_to_json(params)},
                                         {"outputs", outputs}});
  std::cout << "wrote " << outputs.size() << " files to " << out.string() << "\n";
  return kExitOk;
}

int cmd_recover(const RunConfig& cfg) {
  const fs::path out(cfg.out);
  const unsigned threads = cfg.resolved_threads();
  const AlgoParams params = resolve_params(cfg);
  Pipeline pipe = build_estimator(cfg, params);

  CandidateSet cs;
  try {
    cs = generate_candidates(*pipe.estimator, params, params.m0, Rng(stage_seed(cfg.seed, "candidates")), threads);
  } catch (const EmptyCandidateSet& e) {
    std::cerr << "error: no candidate reached the norm threshold " << e.threshold() << " (largest norm "
              << e.max_norm() << ").\n"
              << "hint: lower w0, set a retention quantile, or increase n / n0 so the estimates sharpen.\n";
    return kExitEmpty;
  }

  json outputs = json::array();
  auto emit = [&](const std::string& name) { outputs.push_back(name); };

  const int k = cfg.model.k();
  const auto chosen = cs.top_by_norm(cfg.top);
  if (chosen.size() < static_cast<std::size_t>(k)) {
    std::cerr << "error: only " << chosen.size() << " retained candidates for k = " << k << " clusters.\n"
              << "hint: raise the retention quantile or lower w0.\n";
    return kExitEmpty;
  }
  KMeansOptions ko;
  ko.antipodal = cfg.sign_invariant;
  ko.threads = threads;
  const Mat points = cs.unit_rows(chosen);
  const ClusterResult clusters = spherical_kmeans(points, k, Rng(stage_seed(cfg.seed, "cluster")), ko);

  write_candidates_jsonl(out / "candidates.jsonl", cs);
  emit("candidates.jsonl");
  write_norms_csv(out / "norms.csv", cs);
  emit("norms.csv");
  json cl = cluster_to_json(clusters);
  cl["top"] = chosen;
  write_json(out / "clusters.json", cl);
  emit("clusters.json");
  write_json(out / "params.json", params_to_json(params));
  emit("params.json");
  if (pipe.basis) {
    write_json(out / "basis.json", basis_to_json(*pipe.basis, cfg.n1));
    emit("basis.json");
  }

  json summary{{"retained", cs.retained_count()},
               {"threshold", cs.threshold},
               {"max_norm", cs.max_norm},
               {"top", chosen.size()},
               {"inertia", clusters.inertia},
               {"iterations", clusters.iterations}};
  if (cfg.ground_truth) {
    const MatchReport match = match_to_truth(clusters.centers, cfg.model.W, cfg.sign_invariant);
    write_json(out / "match.json", match_to_json(match));
    emit("match.json");
    write_errors_csv(out / "errors.csv", match);
    emit("errors.csv");
    // top candidates within |cos| >= 0.9 of some parameter vector
    const Mat cos = (points * cfg.model.W).cwiseAbs();
    std::size_t aligned = 0;
    for (Eigen::Index i = 0; i < cos.rows(); ++i) aligned += cos.row(i).maxCoeff() >= 0.9;
    summary["top_aligned_fraction"] = static_cast<double>(aligned) / static_cast<double>(cos.rows());
    summary["match_max_error"] = match.max_error;
    if (params.Delta > 0.0) {
      write_json(out / "partition.json", partition_to_json(partition_candidates(cs, cfg.model, params)));
      emit("partition.json");
    }
  }
  write_json(out / "summary.json", summary);
  emit("summary.json");
  outputs.push_back("manifest.json");
  write_json(out / "manifest.json", json{{"command", "recover"},
                                         {"config", config_to_json(cfg)},
                                         {"params", params_to_json(params)},
                                         {"outputs", outputs}});
  std::cout << "retained " << cs.retained_count() << " of " << params.m0 << " candidates (threshold "
            << cs.threshold << ")";
  if (summary.contains("match_max_error")) std::cout << ", matched max error " << summary["match_max_error"].get<double>();
  std::cout << "\nwrote " << outputs.size() << " files to " << out.string() << "\n";
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg) {
  std::vector<std::string> names = cfg.checks;
  for (const auto& n : names) {
    if (!is_known_check(n)) {
      std::cerr << "error: unknown check '" << n << "'. known checks:";
      for (const auto& k : suite_check_names()) std::cerr << " " << k;
      std::cerr << "\n";
      return kExitUsage;
    }
  }
  if (names.empty()) {
    for (const auto& n : suite_check_names()) {
      const bool neg = n.size() > 9 && n.substr(n.size() - 9) == "-negative";
      if (neg == cfg.negative) names.push_back(n);
    }
  }
  SuiteOptions so;
  so.seed = cfg.seed;
  so.threads = cfg.resolved_threads();

  std::vector<CheckReport> reports;
  json arr = json::array();
  bool all_pass = true;
  std::cout << std::left << std::setw(24) << "check" << std::setw(9) << "result" << std::setw(10) << "expected"
            << "runtime_s\n";
  for (const auto& n : names) {
    CheckReport r = run_named_check(n, so);
    const std::string result = r.skipped ? "skipped" : (r.pass ? "pass" : "FAIL");
    std::cout << std::setw(24) << n << std::setw(9) << result << std::setw(10) << (r.as_expected() ? "yes" : "NO")
              << fixed(r.runtime_s, 2) << "\n";
    if (!r.skipped && !r.pass) all_pass = false;
    json rj = report_to_json(r);
    rj.erase("runtime_s");
    arr.push_back(rj);
    reports.push_back(std::move(r));
  }
  const fs::path out(cfg.out);
  write_json(out / "reports.json", arr);
  write_tail_csv(out / "tail_curves.csv", reports);
  write_json(out / "manifest.json", json{{"command", "verify"},
                                         {"config", config_to_json(cfg)},
                                         {"checks", names},
                                         {"outputs", {"reports.json", "tail_curves.csv", "manifest.json"}}});
  std::cout << (all_pass ? "all checks passed\n" : "some checks failed\n");
  return all_pass ? kExitOk : kExitFail;
}

int cmd_bench(const RunConfig& cfg) {
  const unsigned threads = cfg.resolved_threads();
  const AlgoParams params = resolve_params(cfg);
  Pipeline pipe = build_estimator(cfg, params);
  const auto probes = generate_probes(cfg.model.d(), params.m0, params.xi0, Rng(stage_seed(cfg.seed, "bench")));
  const auto t0 = std::chrono::steady_clock::now();
  const auto est = pipe.estimator->estimate_many(probes, Rng(stage_seed(cfg.seed, "bench-estimates")), threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const json result{{"estimator", to_string(cfg.estimator)},
                    {"probes", probes.size()},
                    {"threads", threads},
                    {"seconds", secs},
                    {"probes_per_second", static_cast<double>(probes.size()) / secs}};
  write_json(fs::path(cfg.out) / "bench.json", result);
  std::cout << to_string(cfg.estimator) << ": " << probes.size() << " probes in " << fixed(secs, 3) << " s on "
            << threads << " threads\n";
  return kExitOk;
}

}  // namespace gradclust
