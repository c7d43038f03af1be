#pragma once

// Client data model: the cognitive diagram (internal beliefs/history vs.
// external experiences), per-element mask state, persona ingestion from
// JSON documents, and the mask transitions a session applies.

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delve/errors.hpp"

namespace delve {

inline constexpr const char* kMaskedToken = "unknown";
inline constexpr int kExperienceCount = 3;

enum class ElementKind {
  relevant_history,
  core_belief,
  intermediate_belief,
  coping_strategy,
  situation,
  automatic_thought,
  emotion,
  behavior,
};

inline constexpr std::array<ElementKind, 4> kInternalKinds = {
    ElementKind::relevant_history, ElementKind::core_belief,
    ElementKind::intermediate_belief, ElementKind::coping_strategy};

constexpr bool is_internal(ElementKind k) {
  return k == ElementKind::relevant_history || k == ElementKind::core_belief ||
         k == ElementKind::intermediate_belief || k == ElementKind::coping_strategy;
}

constexpr bool is_external(ElementKind k) { return !is_internal(k); }

inline const char* kind_name(ElementKind k) {
  switch (k) {
    case ElementKind::relevant_history: return "relevant_history";
    case ElementKind::core_belief: return "core_belief";
    case ElementKind::intermediate_belief: return "intermediate_belief";
    case ElementKind::coping_strategy: return "coping_strategy";
    case ElementKind::situation: return "situation";
    case ElementKind::automatic_thought: return "automatic_thought";
    case ElementKind::emotion: return "emotion";
    case ElementKind::behavior: return "behavior";
  }
  return "?";
}

enum class MaskState { masked, unmasked };

struct CognitiveElement {
  ElementKind kind;
  std::string text;
  MaskState mask = MaskState::unmasked;

  bool operator==(const CognitiveElement&) const = default;
};

// One disclosed-as-a-unit past experience: a situation plus the client's
// reactions to it. The four constituents always share one mask state.
struct ExperienceBundle {
  int index = 0;  // 1-based
  CognitiveElement situation;
  CognitiveElement automatic_thought;
  CognitiveElement emotion;
  CognitiveElement behavior;

  bool unmasked() const { return situation.mask == MaskState::unmasked; }

  void set_mask(MaskState m) {
    situation.mask = m;
    automatic_thought.mask = m;
    emotion.mask = m;
    behavior.mask = m;
  }

  bool operator==(const ExperienceBundle&) const = default;
};

struct CognitiveDiagram {
  std::vector<CognitiveElement> internal;
  std::vector<ExperienceBundle> external;  // exactly kExperienceCount, indices 1..3

  int accessible_count() const {
    int n = 0;
    for (const auto& b : external) n += b.unmasked() ? 1 : 0;
    return n;
  }

  bool internal_all(MaskState m) const {
    return std::all_of(internal.begin(), internal.end(),
                       [m](const CognitiveElement& e) { return e.mask == m; });
  }

  std::vector<const CognitiveElement*> internal_of(ElementKind k) const {
    std::vector<const CognitiveElement*> out;
    for (const auto& e : internal)
      if (e.kind == k) out.push_back(&e);
    return out;
  }

  bool operator==(const CognitiveDiagram&) const = default;
};

enum class TraitLevel { low, high };

inline const char* trait_level_name(TraitLevel t) {
  return t == TraitLevel::low ? "low" : "high";
}

struct IntakeInfo {
  std::optional<int> age;
  std::optional<std::string> job;
  std::string reason_for_counseling;

  bool operator==(const IntakeInfo&) const = default;
};

struct ClientProfile {
  std::string name;
  std::vector<std::string> trait_descriptors;
  TraitLevel openness = TraitLevel::low;
  TraitLevel metacognition = TraitLevel::low;
  CognitiveDiagram diagram;
  IntakeInfo intake;

  bool operator==(const ClientProfile&) const = default;
};

struct DifficultyPreset {
  std::string label;             // easy | normal | hard
  int initial_accessible = 1;    // bundles unmasked at session start
  int exploration_interval = 1;  // l
  int rapport_interval = 4;      // k

  bool operator==(const DifficultyPreset&) const = default;
};

inline DifficultyPreset easy_preset() { return {"easy", 3, 1, 4}; }
inline DifficultyPreset normal_preset() { return {"normal", 2, 2, 4}; }
inline DifficultyPreset hard_preset() { return {"hard", 1, 3, 4}; }

inline DifficultyPreset preset_by_label(const std::string& label) {
  if (label == "easy") return easy_preset();
  if (label == "normal") return normal_preset();
  if (label == "hard") return hard_preset();
  throw ConfigError("unknown difficulty preset: " + label);
}

namespace detail {

// True when text contains "unknown" as a standalone word, case-insensitive.
// That token is reserved for masked fields.
inline bool contains_masked_token(const std::string& text) {
  const std::string needle = kMaskedToken;
  std::string lower(text.size(), '\0');
  std::transform(text.begin(), text.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::size_t pos = 0;
  while ((pos = lower.find(needle, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(lower[pos - 1]));
    const std::size_t end = pos + needle.size();
    const bool right_ok = end >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[end]));
    if (left_ok && right_ok) return true;
    pos += 1;
  }
  return false;
}

inline void require_clean_text(const std::string& text, const std::string& where) {
  if (text.empty()) throw SchemaError(where + ": must not be empty");
  if (contains_masked_token(text))
    throw SchemaError(where + ": contains the reserved token \"unknown\"");
}

}  // namespace detail

// Structural invariants every diagram must satisfy. Throws SchemaError.
inline void validate_diagram(const CognitiveDiagram& diagram) {
  if (static_cast<int>(diagram.external.size()) != kExperienceCount)
    throw SchemaError("experiences: expected 3, got " +
                      std::to_string(diagram.external.size()));
  for (int i = 0; i < kExperienceCount; ++i) {
    const auto& b = diagram.external[static_cast<std::size_t>(i)];
    if (b.index != i + 1)
      throw SchemaError("experiences: bundle " + std::to_string(i + 1) +
                        " has index " + std::to_string(b.index));
    const MaskState m = b.situation.mask;
    if (b.automatic_thought.mask != m || b.emotion.mask != m || b.behavior.mask != m)
      throw SchemaError("experiences: bundle " + std::to_string(b.index) +
                        " has mixed mask states");
    if (b.situation.kind != ElementKind::situation ||
        b.automatic_thought.kind != ElementKind::automatic_thought ||
        b.emotion.kind != ElementKind::emotion ||
        b.behavior.kind != ElementKind::behavior)
      throw SchemaError("experiences: bundle " + std::to_string(b.index) +
                        " has a constituent with the wrong kind");
  }
  for (ElementKind k : kInternalKinds) {
    if (diagram.internal_of(k).empty())
      throw SchemaError(std::string("internal: no element of kind ") + kind_name(k));
  }
  for (const auto& e : diagram.internal) {
    if (!is_internal(e.kind))
      throw SchemaError("internal: element with external kind " +
                        std::string(kind_name(e.kind)));
    if (e.text.empty()) throw SchemaError("internal: element with empty text");
  }
}

// --- persona ingestion ------------------------------------------------

namespace detail {

inline std::string json_string_field(const nlohmann::json& obj, const std::string& key,
                                     const std::string& where) {
  if (!obj.contains(key))
    throw ParseError(where + ": missing field \"" + key + "\"");
  if (!obj[key].is_string())
    throw ParseError(where + ": field \"" + key + "\" must be a string");
  return obj[key].get<std::string>();
}

inline TraitLevel parse_trait_level(const std::string& value, const std::string& where) {
  if (value == "low") return TraitLevel::low;
  if (value == "high") return TraitLevel::high;
  throw ParseError(where + ": expected \"low\" or \"high\", got \"" + value + "\"");
}

inline std::vector<CognitiveElement> parse_internal_kind(const nlohmann::json& internal,
                                                         const std::string& key,
                                                         ElementKind kind) {
  const std::string where = "internal." + key;
  if (!internal.contains(key)) throw SchemaError(where + ": missing");
  if (!internal[key].is_array() || internal[key].empty())
    throw SchemaError(where + ": expected a nonempty array of strings");
  std::vector<CognitiveElement> out;
  for (const auto& item : internal[key]) {
    if (!item.is_string()) throw ParseError(where + ": entries must be strings");
    std::string text = item.get<std::string>();
    require_clean_text(text, where);
    out.push_back({kind, std::move(text), MaskState::unmasked});
  }
  return out;
}

}  // namespace detail

// Parses one persona document. All elements come back unmasked; masking is
// applied separately by initialize_mask.
inline ClientProfile load_profile(const nlohmann::json& document) {
  if (!document.is_object()) throw ParseError("persona: document must be a JSON object");

  ClientProfile profile;
  profile.name = detail::json_string_field(document, "name", "persona");
  detail::require_clean_text(profile.name, "name");

  if (document.contains("traits")) {
    if (!document["traits"].is_array())
      throw ParseError("traits: expected an array of strings");
    for (const auto& t : document["traits"]) {
      if (!t.is_string()) throw ParseError("traits: entries must be strings");
      std::string text = t.get<std::string>();
      detail::require_clean_text(text, "traits");
      profile.trait_descriptors.push_back(std::move(text));
    }
  }

  profile.openness = detail::parse_trait_level(
      detail::json_string_field(document, "openness", "persona"), "openness");
  profile.metacognition = detail::parse_trait_level(
      detail::json_string_field(document, "metacognition", "persona"), "metacognition");

  if (!document.contains("intake") || !document["intake"].is_object())
    throw ParseError("persona: missing object field \"intake\"");
  const auto& intake = document["intake"];
  if (intake.contains("age") && !intake["age"].is_null()) {
    if (!intake["age"].is_number_integer())
      throw ParseError("intake.age: must be an integer");
    profile.intake.age = intake["age"].get<int>();
  }
  if (intake.contains("job") && !intake["job"].is_null()) {
    if (!intake["job"].is_string()) throw ParseError("intake.job: must be a string");
    std::string job = intake["job"].get<std::string>();
    detail::require_clean_text(job, "intake.job");
    profile.intake.job = std::move(job);
  }
  profile.intake.reason_for_counseling =
      detail::json_string_field(intake, "reason", "intake");
  detail::require_clean_text(profile.intake.reason_for_counseling, "intake.reason");

  if (!document.contains("internal") || !document["internal"].is_object())
    throw SchemaError("persona: missing object field \"internal\"");
  const auto& internal = document["internal"];
  for (auto elems : {
           detail::parse_internal_kind(internal, "relevant_histories",
                                       ElementKind::relevant_history),
           detail::parse_internal_kind(internal, "core_beliefs", ElementKind::core_belief),
           detail::parse_internal_kind(internal, "intermediate_beliefs",
                                       ElementKind::intermediate_belief),
           detail::parse_internal_kind(internal, "coping_strategies",
                                       ElementKind::coping_strategy),
       }) {
    profile.diagram.internal.insert(profile.diagram.internal.end(), elems.begin(),
                                    elems.end());
  }

  if (!document.contains("experiences") || !document["experiences"].is_array())
    throw SchemaError("persona: missing array field \"experiences\"");
  const auto& experiences = document["experiences"];
  if (static_cast<int>(experiences.size()) != kExperienceCount)
    throw SchemaError("experiences: expected 3, got " +
                      std::to_string(experiences.size()));
  int index = 1;
  for (const auto& exp : experiences) {
    if (!exp.is_object())
      throw ParseError("experiences: entries must be objects");
    const std::string where = "experiences[" + std::to_string(index) + "]";
    auto field = [&](const char* key, ElementKind kind) {
      std::string text = detail::json_string_field(exp, key, where);
      detail::require_clean_text(text, where + "." + key);
      return CognitiveElement{kind, std::move(text), MaskState::unmasked};
    };
    ExperienceBundle bundle;
    bundle.index = index++;
    bundle.situation = field("situation", ElementKind::situation);
    bundle.automatic_thought = field("automatic_thought", ElementKind::automatic_thought);
    bundle.emotion = field("emotion", ElementKind::emotion);
    bundle.behavior = field("behavior", ElementKind::behavior);
    profile.diagram.external.push_back(std::move(bundle));
  }

  validate_diagram(profile.diagram);
  return profile;
}

inline ClientProfile load_profile(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("persona: invalid JSON: ") + e.what());
  }
  return load_profile(doc);
}

// Serializes a profile back to the persona document schema, such that
// load_profile(profile_to_json(p)) == p.
inline nlohmann::json profile_to_json(const ClientProfile& profile) {
  nlohmann::json doc;
  doc["name"] = profile.name;
  doc["traits"] = profile.trait_descriptors;
  doc["openness"] = trait_level_name(profile.openness);
  doc["metacognition"] = trait_level_name(profile.metacognition);
  nlohmann::json intake;
  if (profile.intake.age) intake["age"] = *profile.intake.age;
  if (profile.intake.job) intake["job"] = *profile.intake.job;
  intake["reason"] = profile.intake.reason_for_counseling;
  doc["intake"] = intake;

  auto texts_of = [&](ElementKind k) {
    nlohmann::json arr = nlohmann::json::array();
    for (const CognitiveElement* e : profile.diagram.internal_of(k))
      arr.push_back(e->text);
    return arr;
  };
  doc["internal"] = {
      {"relevant_histories", texts_of(ElementKind::relevant_history)},
      {"core_beliefs", texts_of(ElementKind::core_belief)},
      {"intermediate_beliefs", texts_of(ElementKind::intermediate_belief)},
      {"coping_strategies", texts_of(ElementKind::coping_strategy)},
  };

  nlohmann::json experiences = nlohmann::json::array();
  for (const auto& b : profile.diagram.external) {
    experiences.push_back({
        {"situation", b.situation.text},
        {"automatic_thought", b.automatic_thought.text},
        {"emotion", b.emotion.text},
        {"behavior", b.behavior.text},
    });
  }
  doc["experiences"] = experiences;
  return doc;
}

// --- mask transitions -------------------------------------------------

// Phase-I masking: every internal element hidden, only the lowest-index
// `initial_accessible` bundles disclosed.
inline CognitiveDiagram initialize_mask(const ClientProfile& profile,
                                        const DifficultyPreset& preset) {
  CognitiveDiagram g = profile.diagram;
  for (auto& e : g.internal) e.mask = MaskState::masked;
  for (auto& b : g.external)
    b.set_mask(b.index <= preset.initial_accessible ? MaskState::unmasked
                                                    : MaskState::masked);
  return g;
}

// Discloses the lowest-index masked bundle, if any. Saturates at 3.
inline CognitiveDiagram unmask_next_external(CognitiveDiagram diagram) {
  for (auto& b : diagram.external) {
    if (!b.unmasked()) {
      b.set_mask(MaskState::unmasked);
      break;
    }
  }
  return diagram;
}

// Reveals the whole internal diagram at once. External untouched.
inline CognitiveDiagram unmask_internal(CognitiveDiagram diagram) {
  for (auto& e : diagram.internal) e.mask = MaskState::unmasked;
  return diagram;
}

struct ExposureStatus {
  bool external_revealed = false;
  bool internal_revealed = false;
  bool full_revealed = false;

  bool operator==(const ExposureStatus&) const = default;
};

inline ExposureStatus exposure_status(const CognitiveDiagram& diagram) {
  ExposureStatus s;
  s.external_revealed = diagram.accessible_count() == kExperienceCount;
  s.internal_revealed = diagram.internal_all(MaskState::unmasked);
  s.full_revealed = s.external_revealed && s.internal_revealed;
  return s;
}

// --- rendering --------------------------------------------------------

namespace detail {

inline std::string render_kind_line(const CognitiveDiagram& g, ElementKind kind,
                                    const char* heading) {
  std::ostringstream out;
  out << heading << ": ";
  bool first = true;
  for (const CognitiveElement* e : g.internal_of(kind)) {
    if (!first) out << " | ";
    first = false;
    out << (e->mask == MaskState::unmasked ? e->text : std::string(kMaskedToken));
  }
  return out.str();
}

}  // namespace detail

// The CASE SYNOPSIS + diagram + experience sections shown to the client
// simulator. Every masked field renders as the literal token "unknown";
// a fully masked bundle collapses its reactions to one "unknown".
inline std::string render_accessible(const ClientProfile& profile,
                                     const CognitiveDiagram& diagram) {
  std::ostringstream out;
  out << "CASE SYNOPSIS\n\n"
      << "Patient Details:\n"
      << "Name: " << profile.name << "\n";
  if (!profile.trait_descriptors.empty()) {
    out << "Type: ";
    for (std::size_t i = 0; i < profile.trait_descriptors.size(); ++i) {
      if (i) out << ", ";
      out << profile.trait_descriptors[i];
    }
    out << "\n";
  }
  out << "Cognitive Traits:\n"
      << "  Openness: " << trait_level_name(profile.openness) << "\n"
      << "  Metacognition: " << trait_level_name(profile.metacognition) << "\n\n";

  out << "COGNITIVE CONCEPTUALIZATION DIAGRAM\n"
      << detail::render_kind_line(diagram, ElementKind::relevant_history,
                                  "Relevant Histories")
      << "\n"
      << detail::render_kind_line(diagram, ElementKind::core_belief, "Core Beliefs")
      << "\n"
      << detail::render_kind_line(diagram, ElementKind::intermediate_belief,
                                  "Intermediate Beliefs")
      << "\n"
      << detail::render_kind_line(diagram, ElementKind::coping_strategy,
                                  "Coping Strategies")
      << "\n";

  for (const auto& b : diagram.external) {
    out << "\nPREVIOUS EXPERIENCE " << b.index << "\n";
    if (b.unmasked()) {
      out << "Situation: " << b.situation.text << "\n"
          << "Reactions:\n"
          << "Automatic Thought: " << b.automatic_thought.text << "\n"
          << "Emotion: " << b.emotion.text << "\n"
          << "Behavior: " << b.behavior.text << "\n";
    } else {
      out << "Situation: " << kMaskedToken << "\n"
          << "Reactions: " << kMaskedToken << "\n";
    }
  }
  return out.str();
}

}  // namespace delve
