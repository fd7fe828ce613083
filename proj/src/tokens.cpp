#include "coplan/tokens.hpp"

#include <fstream>
#include <sstream>

#include "coplan/error.hpp"

namespace coplan {

int TokenCodec::encode(const Action& a) const {
  switch (a.kind) {
    case ActionKind::UavVisit:
      if (a.robot < 0 || a.robot >= n_uav_ || a.target < 0 || a.target >= n_task_) break;
      return a.robot * n_task_ + a.target;
    case ActionKind::UgvMove:
      if (a.robot < 0 || a.robot >= n_ugv_ || a.target < 0 || a.target >= n_path_) break;
      return n_uav_ * n_task_ + a.robot * n_path_ + a.target;
    case ActionKind::Recharge:
      if (a.robot < 0 || a.robot >= n_uav_ || a.target < 0 || a.target >= n_ugv_) break;
      return n_uav_ * n_task_ + n_ugv_ * n_path_ + a.robot * n_ugv_ + a.target;
  }
  throw Error("action " + to_string(a) + " is outside the vocabulary");
}

Action TokenCodec::decode(int token) const {
  if (token < 0 || token >= start_token()) throw Error("token " + std::to_string(token) + " is not an action");
  const int visits = n_uav_ * n_task_;
  const int moves = n_ugv_ * n_path_;
  if (token < visits) return Action::visit(token / n_task_, token % n_task_);
  token -= visits;
  if (token < moves) return Action::move(token / n_path_, token % n_path_);
  token -= moves;
  return Action::recharge(token / n_ugv_, token % n_ugv_);
}

std::string plan_to_string(const JointPlan& plan, const TokenCodec& codec, const std::string& header) {
  std::string out;
  if (!header.empty()) out += "# " + header + "\n";
  for (const auto& a : plan.actions) out += std::to_string(codec.encode(a)) + " " + to_string(a) + "\n";
  return out;
}

JointPlan plan_from_string(const std::string& text, const TokenCodec& codec) {
  JointPlan plan;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int token = -1, robot = -1, target = -1;
    std::string kind;
    if (!(ls >> token >> kind >> robot >> target))
      throw ParseError("line " + std::to_string(line_no), "malformed plan line " + std::to_string(line_no));
    Action a;
    if (kind == "uav_visit") a = Action::visit(robot, target);
    else if (kind == "ugv_move") a = Action::move(robot, target);
    else if (kind == "recharge") a = Action::recharge(robot, target);
    else throw ParseError("line " + std::to_string(line_no), "unknown action kind '" + kind + "'");
    if (codec.encode(a) != token)
      throw ParseError("line " + std::to_string(line_no), "token id does not match action on line " +
                                                              std::to_string(line_no));
    plan.actions.push_back(a);
  }
  return plan;
}

void save_plan(const JointPlan& plan, const TokenCodec& codec, const std::filesystem::path& path,
               const std::string& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << plan_to_string(plan, codec, header);
}

JointPlan load_plan(const std::filesystem::path& path, const TokenCodec& codec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return plan_from_string(ss.str(), codec);
}

}  // namespace coplan
