#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradclust/candidates.hpp"
#include "gradclust/cluster.hpp"
#include "gradclust/gradient.hpp"
#include "gradclust/model.hpp"
#include "gradclust/verify.hpp"

namespace gradclust {

using nlohmann::json;
namespace fs = std::filesystem;

json vec_to_json(const Vec& v);
Vec vec_from_json(const json& j);
/// Column-major flat array.
json mat_to_json(const Mat& m);
Mat mat_from_json(const json& j, Eigen::Index rows, Eigen::Index cols);

json model_to_json(const SigmoidModel& model);
SigmoidModel model_from_json(const json& j);

json params_to_json(const AlgoParams& params);
AlgoParams params_from_json(const json& j);

json gradient_to_json(const GradientEstimate& g);
json candidate_to_json(const Candidate& c);
json cluster_to_json(const ClusterResult& r);
json match_to_json(const MatchReport& r);
json basis_to_json(const SubspaceEstimate& b, std::size_t n1);
json report_to_json(const CheckReport& r);
json partition_to_json(const Partition& p);

/// Text writers. Every number is printed in shortest round-trip form so a
/// reload restores the exact doubles.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

void write_dataset_jsonl(const fs::path& path, const Dataset& ds);
Dataset read_dataset_jsonl(const fs::path& path);
void write_candidates_jsonl(const fs::path& path, const CandidateSet& cs);
void write_gradients_jsonl(const fs::path& path, const std::vector<GradientEstimate>& gs);

/// index,norm,retained
void write_norms_csv(const fs::path& path, const CandidateSet& cs);
/// unit,center,sign,error
void write_errors_csv(const fs::path& path, const MatchReport& m);
/// check,size,exceed,p_hat,lo,hi,bound
void write_tail_csv(const fs::path& path, const std::vector<CheckReport>& reports);

}  // namespace gradclust
