#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "coplan/dynamics.hpp"
#include "coplan/scenario.hpp"

namespace coplan {

/// Flattens actions to token ids: the UavVisit block (uav-major), then the
/// UgvMove block (ugv-major), then the Recharge block (uav-major), then the
/// start token.
class TokenCodec {
 public:
  TokenCodec(int n_uav, int n_task, int n_ugv, int n_path)
      : n_uav_(n_uav), n_task_(n_task), n_ugv_(n_ugv), n_path_(n_path) {}
  explicit TokenCodec(const Scenario& s) : TokenCodec(s.fleet.n_uav, s.n_tasks(), s.fleet.n_ugv, s.n_paths()) {}

  int vocab_size() const { return n_uav_ * n_task_ + n_ugv_ * n_path_ + n_uav_ * n_ugv_ + 1; }
  int start_token() const { return vocab_size() - 1; }

  int encode(const Action& a) const;
  Action decode(int token) const;

  int n_uav() const { return n_uav_; }
  int n_task() const { return n_task_; }
  int n_ugv() const { return n_ugv_; }
  int n_path() const { return n_path_; }

  friend bool operator==(const TokenCodec&, const TokenCodec&) = default;

 private:
  int n_uav_, n_task_, n_ugv_, n_path_;
};

/// Plan files hold one action per line: "<token> <kind> <robot> <target>".
/// Lines starting with '#' are comments.
std::string plan_to_string(const JointPlan& plan, const TokenCodec& codec, const std::string& header = "");
JointPlan plan_from_string(const std::string& text, const TokenCodec& codec);
void save_plan(const JointPlan& plan, const TokenCodec& codec, const std::filesystem::path& path,
               const std::string& header = "");
JointPlan load_plan(const std::filesystem::path& path, const TokenCodec& codec);

}  // namespace coplan
