#pragma once

// Post-hoc analyses: closed-set strategy annotation per therapist
// utterance, strategy-distribution similarity across client types,
// six-criterion session-quality rubric scoring, and judge calibration
// against externally labeled transcripts.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "delve/backends.hpp"
#include "delve/errors.hpp"
#include "delve/mediator.hpp"
#include "delve/metrics.hpp"
#include "delve/prompt.hpp"
#include "delve/session.hpp"
#include "delve/transcript.hpp"

namespace delve {

// --- strategies -----------------------------------------------------------

enum class StrategyLabel {
  questions_on_experiences,
  questions_on_perspectives,
  questions_on_emotions,
  reflections_on_needs,
  reflections_on_emotions,
  reflections_on_values,
  reflections_on_consequences,
  reflections_on_conflicts,
  reflections_on_strengths,
  solutions_problem_solving,
  solutions_planning,
  normalizing,
  psychoeducation,
  unlabeled,  // sentinel: annotator output outside the closed set
};

inline constexpr std::array<StrategyLabel, 13> kAllStrategies = {
    StrategyLabel::questions_on_experiences,  StrategyLabel::questions_on_perspectives,
    StrategyLabel::questions_on_emotions,     StrategyLabel::reflections_on_needs,
    StrategyLabel::reflections_on_emotions,   StrategyLabel::reflections_on_values,
    StrategyLabel::reflections_on_consequences, StrategyLabel::reflections_on_conflicts,
    StrategyLabel::reflections_on_strengths,  StrategyLabel::solutions_problem_solving,
    StrategyLabel::solutions_planning,        StrategyLabel::normalizing,
    StrategyLabel::psychoeducation};

enum class StrategyCategory { questions, reflections, solutions, others };

inline const char* strategy_category_name(StrategyCategory c) {
  switch (c) {
    case StrategyCategory::questions: return "questions";
    case StrategyCategory::reflections: return "reflections";
    case StrategyCategory::solutions: return "solutions";
    case StrategyCategory::others: return "others";
  }
  return "?";
}

inline StrategyCategory strategy_category(StrategyLabel label) {
  switch (label) {
    case StrategyLabel::questions_on_experiences:
    case StrategyLabel::questions_on_perspectives:
    case StrategyLabel::questions_on_emotions:
      return StrategyCategory::questions;
    case StrategyLabel::reflections_on_needs:
    case StrategyLabel::reflections_on_emotions:
    case StrategyLabel::reflections_on_values:
    case StrategyLabel::reflections_on_consequences:
    case StrategyLabel::reflections_on_conflicts:
    case StrategyLabel::reflections_on_strengths:
      return StrategyCategory::reflections;
    case StrategyLabel::solutions_problem_solving:
    case StrategyLabel::solutions_planning:
      return StrategyCategory::solutions;
    case StrategyLabel::normalizing:
    case StrategyLabel::psychoeducation:
      return StrategyCategory::others;
    case StrategyLabel::unlabeled:
      break;
  }
  throw InputError("strategy_category: sentinel has no category");
}

inline const char* strategy_display_name(StrategyLabel label) {
  switch (label) {
    case StrategyLabel::questions_on_experiences: return "Questions on Experiences";
    case StrategyLabel::questions_on_perspectives: return "Questions on Perspectives";
    case StrategyLabel::questions_on_emotions: return "Questions on Emotions";
    case StrategyLabel::reflections_on_needs: return "Reflections on Needs";
    case StrategyLabel::reflections_on_emotions: return "Reflections on Emotions";
    case StrategyLabel::reflections_on_values: return "Reflections on Values";
    case StrategyLabel::reflections_on_consequences: return "Reflections on Consequences";
    case StrategyLabel::reflections_on_conflicts: return "Reflections on Conflicts";
    case StrategyLabel::reflections_on_strengths: return "Reflections on Strengths";
    case StrategyLabel::solutions_problem_solving: return "Solutions - Problem-Solving";
    case StrategyLabel::solutions_planning: return "Solutions - Planning";
    case StrategyLabel::normalizing: return "Normalizing";
    case StrategyLabel::psychoeducation: return "Psychoeducation";
    case StrategyLabel::unlabeled: return "Unlabeled";
  }
  return "?";
}

inline const char* strategy_description(StrategyLabel label) {
  switch (label) {
    case StrategyLabel::questions_on_experiences:
      return "Encouraging self-exploration by reflecting on past experiences and their "
             "impact.";
    case StrategyLabel::questions_on_perspectives:
      return "Challenging and broadening viewpoints to promote cognitive flexibility.";
    case StrategyLabel::questions_on_emotions:
      return "Deepening emotional insight by exploring feelings and their origins.";
    case StrategyLabel::reflections_on_needs:
      return "Identifying and articulating one's fundamental psychological and "
             "emotional needs.";
    case StrategyLabel::reflections_on_emotions:
      return "Recognizing and processing emotions to enhance self-awareness and "
             "regulation.";
    case StrategyLabel::reflections_on_values:
      return "Exploring core values to guide decision-making and behavior.";
    case StrategyLabel::reflections_on_consequences:
      return "Evaluating the potential outcomes of thoughts, emotions, and actions.";
    case StrategyLabel::reflections_on_conflicts:
      return "Understanding internal and interpersonal conflicts to resolve them "
             "constructively.";
    case StrategyLabel::reflections_on_strengths:
      return "Identifying personal strengths to build self-efficacy and resilience.";
    case StrategyLabel::solutions_problem_solving:
      return "Developing effective strategies to address challenges and obstacles.";
    case StrategyLabel::solutions_planning:
      return "Creating structured action plans to implement positive changes.";
    case StrategyLabel::normalizing:
      return "Reframing experiences as common and understandable to reduce distress.";
    case StrategyLabel::psychoeducation:
      return "Providing knowledge about psychological concepts to enhance coping and "
             "insight.";
    case StrategyLabel::unlabeled:
      return "";
  }
  return "";
}

// "Name: Description" lines for the annotation prompt's catalog slot.
inline std::string strategy_catalog_text() {
  std::ostringstream out;
  bool first = true;
  for (StrategyLabel label : kAllStrategies) {
    if (!first) out << "\n";
    first = false;
    out << strategy_display_name(label) << ": " << strategy_description(label);
  }
  return out.str();
}

namespace detail {

// Lowercase alphanumeric tokens joined by single spaces; punctuation and
// dash variants disappear, so "Solutions – Problem-Solving" and
// "solutions problem solving" normalize identically.
inline std::string normalize_label_text(const std::string& text) {
  std::string out;
  bool in_token = false;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      out += static_cast<char>(std::tolower(c));
      in_token = true;
    } else if (in_token) {
      out += ' ';
      in_token = false;
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace detail

// Closed-set parse: the normalized output must equal a normalized
// catalog name exactly; everything else is the sentinel, never a guess.
inline StrategyLabel parse_strategy(const std::string& text) {
  const std::string normalized = detail::normalize_label_text(text);
  for (StrategyLabel label : kAllStrategies)
    if (normalized == detail::normalize_label_text(strategy_display_name(label)))
      return label;
  return StrategyLabel::unlabeled;
}

// One label per therapist utterance, in transcript order. Backend
// failures degrade to the sentinel for that utterance only.
inline std::vector<std::pair<int, StrategyLabel>> annotate_strategies(
    const SessionRecord& record, ChatBackend& annotator,
    const PromptTemplate& annotation_template, const GenerationParams& params) {
  bool any_therapist = false;
  for (const auto& u : record.transcript)
    any_therapist = any_therapist || u.speaker == Speaker::therapist;
  if (!any_therapist)
    throw InputError("annotate_strategies: record has no therapist utterance");

  const std::string catalog = strategy_catalog_text();
  std::vector<std::pair<int, StrategyLabel>> labels;
  for (const auto& u : record.transcript) {
    if (u.speaker != Speaker::therapist) continue;
    StrategyLabel label = StrategyLabel::unlabeled;
    try {
      const std::string instruction = annotation_template.render({
          {"strategy_catalog", catalog},
          {"utterance", u.text},
      });
      label = parse_strategy(complete_instruction(annotator, instruction, params));
    } catch (const BackendError&) {
      label = StrategyLabel::unlabeled;
    }
    labels.emplace_back(u.turn_index, label);
  }
  return labels;
}

struct StrategyDistribution {
  std::map<StrategyLabel, std::int64_t> counts;  // all 13 labels, zeros included
  std::map<StrategyLabel, double> frequencies;   // sums to 1 when total > 0
  std::int64_t total = 0;                        // labeled utterances
  std::int64_t unlabeled_count = 0;              // sentinels, excluded from the above

  bool operator==(const StrategyDistribution&) const = default;
};

inline StrategyDistribution strategy_distribution(
    const std::vector<std::vector<std::pair<int, StrategyLabel>>>& labeled_sessions) {
  StrategyDistribution dist;
  for (StrategyLabel label : kAllStrategies) dist.counts[label] = 0;
  for (const auto& session : labeled_sessions) {
    for (const auto& [turn, label] : session) {
      (void)turn;
      if (label == StrategyLabel::unlabeled) {
        ++dist.unlabeled_count;
        continue;
      }
      ++dist.counts[label];
      ++dist.total;
    }
  }
  if (dist.total == 0) throw InputError("strategy_distribution: zero usable labels");
  for (StrategyLabel label : kAllStrategies)
    dist.frequencies[label] =
        static_cast<double>(dist.counts[label]) / static_cast<double>(dist.total);
  return dist;
}

inline std::array<double, 13> frequency_vector(const StrategyDistribution& dist) {
  std::array<double, 13> v{};
  for (std::size_t i = 0; i < kAllStrategies.size(); ++i)
    v[i] = dist.frequencies.at(kAllStrategies[i]);
  return v;
}

struct SimilarityMatrix {
  std::vector<std::string> keys;            // client-type labels, given order
  std::vector<std::vector<double>> values;  // symmetric, unit diagonal

  bool operator==(const SimilarityMatrix&) const = default;
};

// Pairwise cosine over 13-dimensional frequency vectors, one row/column
// per client type.
inline SimilarityMatrix distribution_similarity(
    const std::vector<std::pair<std::string, StrategyDistribution>>& dists) {
  if (dists.size() < 2)
    throw InputError("distribution_similarity: need at least two client types");
  std::vector<std::vector<double>> vectors;
  SimilarityMatrix matrix;
  for (const auto& [key, dist] : dists) {
    if (dist.total == 0)
      throw InputError("distribution_similarity: zero distribution for " + key);
    matrix.keys.push_back(key);
    const auto v = frequency_vector(dist);
    vectors.emplace_back(v.begin(), v.end());
  }
  matrix.values.assign(dists.size(), std::vector<double>(dists.size(), 0.0));
  for (std::size_t a = 0; a < vectors.size(); ++a) {
    matrix.values[a][a] = 1.0;
    for (std::size_t b = a + 1; b < vectors.size(); ++b) {
      const double c = cosine(vectors[a], vectors[b]);
      matrix.values[a][b] = c;
      matrix.values[b][a] = c;
    }
  }
  return matrix;
}

// --- session-quality rubric ---------------------------------------------------

enum class CtrsCriterion {
  understanding,
  interpersonal_effectiveness,
  collaboration,
  guided_discovery,
  key_cognitions_or_behaviors,
  strategy_for_change,
};

inline constexpr std::array<CtrsCriterion, 6> kAllCtrsCriteria = {
    CtrsCriterion::understanding,        CtrsCriterion::interpersonal_effectiveness,
    CtrsCriterion::collaboration,        CtrsCriterion::guided_discovery,
    CtrsCriterion::key_cognitions_or_behaviors, CtrsCriterion::strategy_for_change};

inline const char* ctrs_criterion_name(CtrsCriterion c) {
  switch (c) {
    case CtrsCriterion::understanding: return "understanding";
    case CtrsCriterion::interpersonal_effectiveness:
      return "interpersonal_effectiveness";
    case CtrsCriterion::collaboration: return "collaboration";
    case CtrsCriterion::guided_discovery: return "guided_discovery";
    case CtrsCriterion::key_cognitions_or_behaviors:
      return "key_cognitions_or_behaviors";
    case CtrsCriterion::strategy_for_change: return "strategy_for_change";
  }
  return "?";
}

// Template name in the prompt library for a criterion.
inline std::string ctrs_template_name(CtrsCriterion c) {
  return std::string("ctrs_") + ctrs_criterion_name(c);
}

inline constexpr int kCtrsMin = 0;
inline constexpr int kCtrsMax = 6;

// Accepts both instructed shapes: a bare "N, explanation" and a labeled
// "[Score]: N ... [Justification]: ...".
inline std::pair<int, std::string> parse_ctrs_score(const std::string& raw) {
  const std::string lower = detail::to_lower(raw);
  std::size_t pos = 0;
  const std::size_t label = lower.find("score");
  if (label != std::string::npos) pos = label + 5;
  while (pos < raw.size() && !std::isdigit(static_cast<unsigned char>(raw[pos]))) ++pos;
  if (pos == raw.size()) throw ParseError("rubric: no score found", raw);
  const bool negative = pos > 0 && raw[pos - 1] == '-';
  std::size_t digits_end = pos;
  while (digits_end < raw.size() &&
         std::isdigit(static_cast<unsigned char>(raw[digits_end])))
    ++digits_end;
  int value = std::stoi(raw.substr(pos, digits_end - pos));
  if (negative) value = -value;
  if (value < kCtrsMin || value > kCtrsMax)
    throw ParseError("rubric: score " + std::to_string(value) + " outside [0,6]", raw);

  std::string justification;
  const std::size_t just_label = lower.find("justification", digits_end);
  if (just_label != std::string::npos) {
    std::size_t j = just_label + std::string("justification").size();
    while (j < raw.size() && (raw[j] == ']' || raw[j] == ':' || raw[j] == ' ')) ++j;
    justification = detail::trim(raw.substr(j));
  } else {
    std::size_t j = digits_end;
    while (j < raw.size() &&
           (raw[j] == ',' || std::isspace(static_cast<unsigned char>(raw[j]))))
      ++j;
    justification = detail::trim(raw.substr(j));
  }
  return {value, justification};
}

struct CtrsReport {
  std::map<CtrsCriterion, int> scores;                   // parsed criteria only
  std::map<CtrsCriterion, std::string> justifications;   // parallel to scores
  std::vector<CtrsCriterion> failed;                     // unparseable / backend failure
  bool partial = false;                                  // true iff any criterion failed
  double normalized = 0.0;  // 100*sum(valid)/(6*valid_count) at 2dp; sum/36*100 when complete

  bool operator==(const CtrsReport&) const = default;
};

// One judge call per criterion over the full rendered conversation.
inline CtrsReport score_ctrs(const SessionRecord& record, ChatBackend& judge,
                             const PromptLibrary& prompts,
                             const GenerationParams& params) {
  if (record.transcript.empty()) throw InputError("score_ctrs: empty transcript");
  const std::string conversation = render_dialogue(record.transcript);
  CtrsReport report;
  int sum = 0;
  for (CtrsCriterion criterion : kAllCtrsCriteria) {
    const PromptTemplate& prompt = prompts.get(ctrs_template_name(criterion));
    try {
      const std::string instruction = prompt.render({{"conversation", conversation}});
      const auto [score, justification] =
          parse_ctrs_score(complete_instruction(judge, instruction, params));
      report.scores[criterion] = score;
      report.justifications[criterion] = justification;
      sum += score;
    } catch (const BackendError&) {
      report.failed.push_back(criterion);
    } catch (const ParseError&) {
      report.failed.push_back(criterion);
    }
  }
  report.partial = !report.failed.empty();
  const int valid = static_cast<int>(report.scores.size());
  if (valid == 0) throw InputError("score_ctrs: every criterion failed");
  report.normalized = percentage_2dp(sum, kCtrsMax * valid);
  return report;
}

// --- judge calibration ----------------------------------------------------------

struct LabeledTranscript {
  std::vector<Utterance> transcript;
  bool high_quality = false;

  bool operator==(const LabeledTranscript&) const = default;
};

struct CalibrationReport {
  double high_script_mean = 0.0;    // rapport judge over whole transcripts
  double low_script_mean = 0.0;
  double high_utterance_mean = 0.0;  // exploration judge
  double low_utterance_mean = 0.0;
  int excluded = 0;                  // judge failures
  bool script_pass = false;          // high mean strictly above low mean
  bool utterance_pass = false;
  bool pass = false;                 // both

  bool operator==(const CalibrationReport&) const = default;
};

// Runs both judges over externally labeled transcripts and compares
// group means; a well-calibrated judge scores the high-quality group
// strictly higher.
inline CalibrationReport judge_calibration(const std::vector<LabeledTranscript>& labeled,
                                           ChatBackend& judge,
                                           const MediatorPolicy& policy) {
  bool any_high = false;
  bool any_low = false;
  for (const auto& t : labeled) (t.high_quality ? any_high : any_low) = true;
  if (!any_high || !any_low)
    throw InputError("judge_calibration: need at least one transcript per group");

  double sums[2][2] = {{0, 0}, {0, 0}};  // [high?][script?]
  int counts[2][2] = {{0, 0}, {0, 0}};
  int excluded = 0;
  for (const auto& t : labeled) {
    const int h = t.high_quality ? 1 : 0;
    try {
      const JudgeResult script = judge_rapport(t.transcript, judge, policy);
      sums[h][1] += script.verdict.value;
      ++counts[h][1];
    } catch (const BackendError&) {
      ++excluded;
    } catch (const ParseError&) {
      ++excluded;
    }
    try {
      const JudgeResult utterance = judge_exploration(t.transcript, judge, policy);
      sums[h][0] += utterance.verdict.value;
      ++counts[h][0];
    } catch (const BackendError&) {
      ++excluded;
    } catch (const ParseError&) {
      ++excluded;
    }
  }

  auto mean = [&](int h, int s) -> double {
    if (counts[h][s] == 0)
      throw InputError("judge_calibration: a group lost every transcript to failures");
    return sums[h][s] / counts[h][s];
  };
  CalibrationReport report;
  report.excluded = excluded;
  report.high_script_mean = mean(1, 1);
  report.low_script_mean = mean(0, 1);
  report.high_utterance_mean = mean(1, 0);
  report.low_utterance_mean = mean(0, 0);
  report.script_pass = report.high_script_mean > report.low_script_mean;
  report.utterance_pass = report.high_utterance_mean > report.low_utterance_mean;
  report.pass = report.script_pass && report.utterance_pass;
  return report;
}

}  // namespace delve
