#pragma once

// Phase-III scoring: disclosure rates over session batches (by mask
// state), model-based extraction of what the client elucidated, and
// embedding-thresholded semantic match rates per internal element kind.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "delve/backends.hpp"
#include "delve/errors.hpp"
#include "delve/persona.hpp"
#include "delve/prompt.hpp"
#include "delve/session.hpp"
#include "delve/transcript.hpp"

namespace delve {

inline constexpr double kDefaultIdssThreshold = 0.85;

// Percentage with exact integer arithmetic, rounded half-up to 2
// decimals: round(10000*count/total)/100.
inline double percentage_2dp(std::int64_t count, std::int64_t total) {
  if (total <= 0) throw InputError("percentage: nonpositive denominator");
  if (count < 0 || count > total) throw InputError("percentage: count outside [0,total]");
  const std::int64_t scaled = (20000 * count + total) / (2 * total);
  return static_cast<double>(scaled) / 100.0;
}

// Rounds an exact rational count/(kinds*total) as a percentage to 2dp.
inline double mean_percentage_2dp(std::int64_t count_sum, std::int64_t kinds,
                                  std::int64_t total) {
  if (total <= 0 || kinds <= 0) throw InputError("percentage: nonpositive denominator");
  const std::int64_t denom = kinds * total;
  const std::int64_t scaled = (20000 * count_sum + denom) / (2 * denom);
  return static_cast<double>(scaled) / 100.0;
}

enum class DisclosureScope { external, internal, full };

inline const char* scope_name(DisclosureScope s) {
  switch (s) {
    case DisclosureScope::external: return "external";
    case DisclosureScope::internal: return "internal";
    case DisclosureScope::full: return "full";
  }
  return "?";
}

// Share of sessions whose final diagram is fully revealed in the given
// scope.
inline double compute_cder(const std::vector<SessionRecord>& records,
                           DisclosureScope scope) {
  if (records.empty()) throw InputError("compute_cder: empty batch");
  std::int64_t count = 0;
  for (const auto& r : records) {
    const ExposureStatus e = exposure_status(r.final_diagram);
    const bool revealed = scope == DisclosureScope::external ? e.external_revealed
                          : scope == DisclosureScope::internal ? e.internal_revealed
                                                               : e.full_revealed;
    count += revealed ? 1 : 0;
  }
  return percentage_2dp(count, static_cast<std::int64_t>(records.size()));
}

// --- extraction ------------------------------------------------------------

struct ExtractedDiagram {
  std::optional<std::string> relevant_history;
  std::optional<std::string> core_belief;
  std::optional<std::string> intermediate_belief;
  std::optional<std::string> coping_strategy;

  bool operator==(const ExtractedDiagram&) const = default;

  const std::optional<std::string>& by_kind(ElementKind k) const {
    switch (k) {
      case ElementKind::relevant_history: return relevant_history;
      case ElementKind::core_belief: return core_belief;
      case ElementKind::intermediate_belief: return intermediate_belief;
      case ElementKind::coping_strategy: return coping_strategy;
      default: throw InputError("by_kind: not an internal kind");
    }
  }

  std::optional<std::string>& by_kind(ElementKind k) {
    return const_cast<std::optional<std::string>&>(
        static_cast<const ExtractedDiagram&>(*this).by_kind(k));
  }
};

inline const char* kind_display_name(ElementKind k) {
  switch (k) {
    case ElementKind::relevant_history: return "Relevant History";
    case ElementKind::core_belief: return "Core Belief";
    case ElementKind::intermediate_belief: return "Intermediate Belief";
    case ElementKind::coping_strategy: return "Coping Strategy";
    case ElementKind::situation: return "Situation";
    case ElementKind::automatic_thought: return "Automatic Thought";
    case ElementKind::emotion: return "Emotion";
    case ElementKind::behavior: return "Behavior";
  }
  return "?";
}

inline const char* kind_extraction_description(ElementKind k) {
  switch (k) {
    case ElementKind::relevant_history:
      return "Significant past events, circumstances, or relationships that shaped "
             "the client's current beliefs and difficulties.";
    case ElementKind::core_belief:
      return "The client's deepest, most central belief about themselves, others, or "
             "the world (for example helplessness, unlovability, or worthlessness).";
    case ElementKind::intermediate_belief:
      return "The attitudes, rules, and assumptions that follow from the core belief "
             "and guide how the client interprets daily situations.";
    case ElementKind::coping_strategy:
      return "The behavioral strategies the client uses to deal with or compensate "
             "for painful beliefs.";
    default:
      return "";
  }
}

namespace detail {

// "NONE" (the instructed no-evidence marker) and empty output both mean
// the field is absent; anything else is kept verbatim, trimmed.
inline std::optional<std::string> normalize_extraction(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty() || text == "NONE") return std::nullopt;
  return text;
}

}  // namespace detail

// One extractor call per internal kind, over the client's words only.
// Backend failures propagate; the caller decides exclusion.
inline ExtractedDiagram extract_diagram(const SessionRecord& record,
                                        ChatBackend& extractor,
                                        const PromptTemplate& extraction_template,
                                        const GenerationParams& params) {
  if (record.transcript.empty())
    throw InputError("extract_diagram: empty transcript");
  const std::string client_statements = render_client_statements(record.transcript);
  ExtractedDiagram extracted;
  for (ElementKind kind : kInternalKinds) {
    const std::string instruction = extraction_template.render({
        {"element_name", kind_display_name(kind)},
        {"element_description", kind_extraction_description(kind)},
        {"client_statements", client_statements},
        {"conversation", client_statements},
    });
    const std::string raw = complete_instruction(extractor, instruction, params);
    extracted.by_kind(kind) = detail::normalize_extraction(raw);
  }
  return extracted;
}

// --- similarity --------------------------------------------------------------

inline double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size())
    throw InputError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                     std::to_string(v.size()) + ")");
  if (u.empty()) throw InputError("cosine: empty vectors");
  double dot = 0.0;
  double nu = 0.0;
  double nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw InputError("cosine: zero vector");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

struct MatchOutcome {
  ElementKind kind = ElementKind::core_belief;
  double cosine = 0.0;
  bool matched = false;
  double threshold = kDefaultIdssThreshold;

  bool operator==(const MatchOutcome&) const = default;
};

inline MatchOutcome semantic_match(const CognitiveElement& truth,
                                   const std::string& predicted,
                                   EmbeddingBackend& embedder, double threshold) {
  if (truth.text.empty() || predicted.empty())
    throw InputError("semantic_match: empty text");
  MatchOutcome outcome;
  outcome.kind = truth.kind;
  outcome.threshold = threshold;
  outcome.cosine = cosine(embed(embedder, truth.text), embed(embedder, predicted));
  outcome.matched = outcome.cosine >= threshold;
  return outcome;
}

// Multi-element ground truth: any faithful paraphrase of any annotated
// element counts, so the match runs against the maximum cosine.
inline MatchOutcome semantic_match_max(const std::vector<const CognitiveElement*>& truths,
                                       ElementKind kind, const std::string& predicted,
                                       EmbeddingBackend& embedder, double threshold) {
  if (truths.empty()) throw InputError("semantic_match_max: no ground-truth elements");
  if (predicted.empty()) throw InputError("semantic_match_max: empty prediction");
  MatchOutcome best;
  best.kind = kind;
  best.threshold = threshold;
  bool first = true;
  const std::vector<double> predicted_vec = embed(embedder, predicted);
  for (const CognitiveElement* truth : truths) {
    const double c = cosine(embed(embedder, truth->text), predicted_vec);
    if (first || c > best.cosine) best.cosine = c;
    first = false;
  }
  best.matched = best.cosine >= threshold;
  return best;
}

// --- IDSS ---------------------------------------------------------------------

// A session enters IDSS with its extraction when that succeeded;
// extraction failures carry the error text and are excluded from the
// denominator.
struct IdssEntry {
  const SessionRecord* record = nullptr;
  std::optional<ExtractedDiagram> extraction;
  std::string extraction_error;
};

struct IdssResult {
  std::map<ElementKind, double> by_kind;      // thresholded match rate, 2dp
  double average = 0.0;                       // mean of unrounded per-kind rates, 2dp
  std::map<ElementKind, double> mean_cosine;  // auxiliary diagnostic, evaluated pairs only
  int session_count = 0;                      // denominator after exclusions
  int excluded = 0;

  bool operator==(const IdssResult&) const = default;
};

inline IdssResult compute_idss(const std::vector<IdssEntry>& entries,
                               EmbeddingBackend& embedder, double threshold) {
  if (entries.empty()) throw InputError("compute_idss: empty batch");
  std::int64_t included = 0;
  int excluded = 0;
  std::map<ElementKind, std::int64_t> match_counts;
  std::map<ElementKind, double> cosine_sums;
  std::map<ElementKind, std::int64_t> cosine_counts;
  for (ElementKind kind : kInternalKinds) match_counts[kind] = 0;

  for (const auto& entry : entries) {
    if (entry.record == nullptr) throw InputError("compute_idss: null record");
    if (!entry.extraction) {
      ++excluded;
      continue;
    }
    ++included;
    for (ElementKind kind : kInternalKinds) {
      const auto& predicted = entry.extraction->by_kind(kind);
      if (!predicted) continue;
      const auto truths = entry.record->profile.diagram.internal_of(kind);
      const MatchOutcome outcome =
          semantic_match_max(truths, kind, *predicted, embedder, threshold);
      if (outcome.matched) ++match_counts[kind];
      cosine_sums[kind] += outcome.cosine;
      ++cosine_counts[kind];
    }
  }

  if (included == 0)
    throw InputError("compute_idss: every session was excluded (extraction failures)");

  IdssResult result;
  result.session_count = static_cast<int>(included);
  result.excluded = excluded;
  std::int64_t match_sum = 0;
  for (ElementKind kind : kInternalKinds) {
    result.by_kind[kind] = percentage_2dp(match_counts[kind], included);
    match_sum += match_counts[kind];
  }
  result.average = mean_percentage_2dp(
      match_sum, static_cast<std::int64_t>(kInternalKinds.size()), included);
  for (const auto& [kind, total] : cosine_sums)
    result.mean_cosine[kind] = total / static_cast<double>(cosine_counts[kind]);
  return result;
}

// --- batch report ---------------------------------------------------------------

struct MetricsReport {
  double cder_external = 0.0;
  double cder_internal = 0.0;
  double cder_full = 0.0;
  IdssResult idss;
  int session_count = 0;

  bool operator==(const MetricsReport&) const = default;
};

inline MetricsReport compute_metrics(const std::vector<SessionRecord>& records,
                                     const std::vector<IdssEntry>& idss_entries,
                                     EmbeddingBackend& embedder, double threshold) {
  MetricsReport report;
  report.session_count = static_cast<int>(records.size());
  report.cder_external = compute_cder(records, DisclosureScope::external);
  report.cder_internal = compute_cder(records, DisclosureScope::internal);
  report.cder_full = compute_cder(records, DisclosureScope::full);
  report.idss = compute_idss(idss_entries, embedder, threshold);
  return report;
}

}  // namespace delve
