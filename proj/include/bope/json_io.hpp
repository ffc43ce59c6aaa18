#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <string>

#include "bope/policy.hpp"
#include "bope/pomdp.hpp"

namespace bope {

using json = nlohmann::json;

json to_json(const Eigen::VectorXd& v);
json to_json(const Eigen::MatrixXd& m);
Eigen::VectorXd vector_from_json(const json& j);
Eigen::MatrixXd matrix_from_json(const json& j);

/// {n_states, n_actions, n_obs, gamma | horizon, rmax, d0, transition[s][a][s′], emission[s][o], reward[s][a]}
json model_to_json(const POMDP& m);
/// Validates with tolerance `tol`; rows within tolerance are renormalised.
POMDP model_from_json(const json& j, double tol = 1e-9);
POMDP load_model(const std::string& path);
void save_model(const POMDP& m, const std::string& path);

json policy_to_json(const Policy& p);
Policy policy_from_json(const json& j);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t h);
std::string model_hash(const POMDP& m);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace bope
