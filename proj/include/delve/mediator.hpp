#pragma once

// The mediating judge: scheduling of rapport/exploration checks, verdict
// parsing, and the disclosure transitions a passing verdict triggers.

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "delve/backends.hpp"
#include "delve/errors.hpp"
#include "delve/persona.hpp"
#include "delve/prompt.hpp"
#include "delve/transcript.hpp"

namespace delve {

inline constexpr int kScoreMin = 1;
inline constexpr int kScoreMax = 5;

struct MediatorPolicy {
  int rapport_interval_k = 4;
  int exploration_interval_l = 1;
  int score_threshold = 4;
  PromptTemplate rapport_prompt;
  PromptTemplate exploration_prompt;
  GenerationParams judge_params;

  bool operator==(const MediatorPolicy&) const = default;
};

inline MediatorPolicy make_mediator_policy(const DifficultyPreset& preset,
                                           const PromptLibrary& prompts) {
  MediatorPolicy policy;
  policy.rapport_interval_k = preset.rapport_interval;
  policy.exploration_interval_l = preset.exploration_interval;
  policy.rapport_prompt = prompts.get("rapport_judge");
  policy.exploration_prompt = prompts.get("exploration_judge");
  return policy;
}

struct VerdictScore {
  int value = kScoreMin;
  std::string justification;

  bool operator==(const VerdictScore&) const = default;
};

struct JudgeResult {
  VerdictScore verdict;
  std::string raw;

  bool operator==(const JudgeResult&) const = default;
};

inline bool should_check_rapport(int turn_index, const MediatorPolicy& policy) {
  if (turn_index < 1) throw InputError("should_check_rapport: turn_index must be >= 1");
  return turn_index % policy.rapport_interval_k == 0;
}

inline bool should_check_exploration(int turn_index, const MediatorPolicy& policy) {
  if (turn_index < 1)
    throw InputError("should_check_exploration: turn_index must be >= 1");
  return turn_index % policy.exploration_interval_l == 0;
}

namespace detail {

inline std::string to_lower(const std::string& s) {
  std::string out(s.size(), '\0');
  std::transform(s.begin(), s.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

}  // namespace detail

// Pulls the 1–5 score out of a judge completion. Both label styles the
// judges are instructed to use are accepted: "Rating: N" and
// "[Rating]: N", any casing. The justification is the explicit
// "[Justification]:" field when present, else whatever follows the score.
inline VerdictScore parse_verdict(const std::string& raw) {
  const std::string lower = detail::to_lower(raw);
  const std::size_t label = lower.find("rating");
  if (label == std::string::npos)
    throw ParseError("verdict: no rating label", raw);

  std::size_t pos = label + 6;  // past "rating"
  while (pos < raw.size() && !std::isdigit(static_cast<unsigned char>(raw[pos]))) ++pos;
  if (pos == raw.size()) throw ParseError("verdict: no score after rating label", raw);
  const bool negative = pos > 0 && raw[pos - 1] == '-';
  std::size_t digits_end = pos;
  while (digits_end < raw.size() &&
         std::isdigit(static_cast<unsigned char>(raw[digits_end])))
    ++digits_end;
  int value = std::stoi(raw.substr(pos, digits_end - pos));
  if (negative) value = -value;
  if (value < kScoreMin || value > kScoreMax)
    throw ParseError("verdict: score " + std::to_string(value) + " outside [" +
                         std::to_string(kScoreMin) + "," + std::to_string(kScoreMax) + "]",
                     raw);

  VerdictScore verdict;
  verdict.value = value;
  const std::size_t just_label = lower.find("justification", digits_end);
  if (just_label != std::string::npos) {
    std::size_t j = just_label + std::string("justification").size();
    while (j < raw.size() && (raw[j] == ']' || raw[j] == ':' || raw[j] == ' ')) ++j;
    verdict.justification = detail::trim(raw.substr(j));
  } else {
    verdict.justification = detail::trim(raw.substr(digits_end));
  }
  return verdict;
}

enum class VerdictStyle { rapport, exploration };

// Inverse of parse_verdict for both judge output styles; round-trips
// every legal score.
inline std::string format_verdict(const VerdictScore& verdict, VerdictStyle style) {
  if (style == VerdictStyle::rapport)
    return "Rating: " + std::to_string(verdict.value) + "\n" + verdict.justification;
  return "[Rating]: " + std::to_string(verdict.value) +
         "\n[Justification]: " + verdict.justification;
}

namespace detail {

inline JudgeResult run_judge(const std::vector<Utterance>& transcript,
                             ChatBackend& backend, const MediatorPolicy& policy,
                             const PromptTemplate& prompt) {
  if (completed_turns(transcript) < 1)
    throw InputError("judge: no completed exchange to evaluate");
  const std::string dialogue = render_dialogue(transcript);
  const std::string instruction = prompt.render({
      {"dialogue_context", dialogue},
      {"dialogue_history", dialogue},
      {"conversation", dialogue},
  });
  JudgeResult result;
  result.raw = complete_instruction(backend, instruction, policy.judge_params);
  result.verdict = parse_verdict(result.raw);
  return result;
}

}  // namespace detail

inline JudgeResult judge_rapport(const std::vector<Utterance>& transcript,
                                 ChatBackend& backend, const MediatorPolicy& policy) {
  return detail::run_judge(transcript, backend, policy, policy.rapport_prompt);
}

inline JudgeResult judge_exploration(const std::vector<Utterance>& transcript,
                                     ChatBackend& backend, const MediatorPolicy& policy) {
  return detail::run_judge(transcript, backend, policy, policy.exploration_prompt);
}

// Passing rapport discloses the next experience; saturates at the cap.
inline CognitiveDiagram apply_rapport_verdict(CognitiveDiagram diagram,
                                              const VerdictScore& verdict,
                                              const MediatorPolicy& policy) {
  if (verdict.value >= policy.score_threshold)
    return unmask_next_external(std::move(diagram));
  return diagram;
}

// Passing exploration reveals the whole internal model; idempotent.
inline CognitiveDiagram apply_exploration_verdict(CognitiveDiagram diagram,
                                                  const VerdictScore& verdict,
                                                  const MediatorPolicy& policy) {
  if (verdict.value >= policy.score_threshold)
    return unmask_internal(std::move(diagram));
  return diagram;
}

}  // namespace delve
