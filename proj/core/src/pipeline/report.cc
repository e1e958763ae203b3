#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "swpipe/pipeline/pipeline.h"

namespace swpipe::pipeline {
namespace {

std::string decision_text(std::optional<int> d) {
  if (!d) return "abstained";
  return *d == 1 ? "at risk (1)" : "no risk (0)";
}

}  // namespace

std::string EvidenceReport::text() const {
  std::string out = fmt::format("Evidence report: {}\n", participant_id);
  out += fmt::format("Split: {}", split);
  if (label) out += fmt::format("    Label: {}", *label);
  out += "\n";
  out += fmt::format("Decision: {}{}\n", decision_text(final),
                     decided_by_tie_rule ? "    [decided by tie rule]" : "");
  out += fmt::format("Ensemble: {} {}, tie rule: {}\n", ensemble_name, ensemble_members, tie_break);
  out += fmt::format("Weighted votes: at risk {}, no risk {}\n", w_pos, w_neg);

  out += "\nMember votes\n";
  out += fmt::format("  {:>2}  {:<12}  {:<4}  {:<4}  {:>6}  {:>4}  {:>7}\n", "#", "Model", "Task", "Clf",
                     "Weight", "Vote", "Score");
  for (const auto& m : members) {
    out += fmt::format("  {:>2}  {:<12}  {:<4}  {:<4}  {:>6}  {:>4}  {:>7}\n", m.member_id, m.model, m.task,
                       m.classifier, m.weight, m.vote ? std::to_string(*m.vote) : "-",
                       m.score ? fmt::format("{:.4f}", *m.score) : "absent");
  }

  out += "\nSuicide-risk indicators (ER transcript)\n";
  out += indicators ? indicator_block : "(no ER recording)\n";

  out += "\nAudio\n";
  for (const auto& a : audio) out += "  " + a + "\n";
  out += "\nVersions\n";
  for (const auto& [k, v] : versions) out += fmt::format("  {}: {}\n", k, v);
  return out;
}

std::string EvidenceReport::json() const {
  using nlohmann::json;
  json members_j = json::array();
  for (const auto& m : members) {
    members_j.push_back({{"member_id", m.member_id},
                         {"model", m.model},
                         {"task", m.task},
                         {"classifier", m.classifier},
                         {"weight", m.weight},
                         {"vote", m.vote ? json(*m.vote) : json(nullptr)},
                         {"score", m.score ? json(*m.score) : json(nullptr)}});
  }
  json ind = nullptr;
  if (indicators) {
    ind = json::object();
    for (auto kind : indicators::kAllIndicators) {
      const auto k = static_cast<std::size_t>(kind);
      ind[std::string(indicators::key_name(kind))] = {
          {"name", indicators::display_name(kind)},
          {"flag", indicators->flags[k]},
          {"evidence", indicators->evidence[k]}};
    }
  }
  json versions_j = json::object();
  for (const auto& [k, v] : versions) versions_j[k] = v;
  const json doc = {
      {"participant_id", participant_id},
      {"split", split},
      {"label", label ? json(*label) : json(nullptr)},
      {"final", final ? json(*final) : json(nullptr)},
      {"decided_by_tie_rule", decided_by_tie_rule},
      {"weighted_scores", {{"w_pos", w_pos}, {"w_neg", w_neg}}},
      {"ensemble", {{"name", ensemble_name}, {"members", ensemble_members}, {"tie_break", tie_break}}},
      {"members", members_j},
      {"indicators", ind},
      {"indicator_block", indicators ? json(indicator_block) : json(nullptr)},
      {"audio", audio},
      {"versions", versions_j},
      {"generated_at", generated_at},
  };
  return doc.dump(2) + "\n";
}

}  // namespace swpipe::pipeline
