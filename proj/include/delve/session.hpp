#pragma once

// One counseling session end to end: prompt assembly, the alternating
// therapist/client loop with scheduled mediation, termination rules, and
// JSONL persistence whose event log provably reproduces the final
// disclosure state.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delve/backends.hpp"
#include "delve/errors.hpp"
#include "delve/mediator.hpp"
#include "delve/persona.hpp"
#include "delve/prompt.hpp"
#include "delve/transcript.hpp"

namespace delve {

inline constexpr const char* kDefaultClosingMarker = "[END OF SESSION]";
inline constexpr const char* kFarewellToken = "goodbye";

enum class SessionEventKind {
  rapport_check,
  exploration_check,
  unmask_external,
  unmask_internal,
  check_skipped,
  termination,
};

inline const char* event_kind_name(SessionEventKind k) {
  switch (k) {
    case SessionEventKind::rapport_check: return "rapport_check";
    case SessionEventKind::exploration_check: return "exploration_check";
    case SessionEventKind::unmask_external: return "unmask_external";
    case SessionEventKind::unmask_internal: return "unmask_internal";
    case SessionEventKind::check_skipped: return "check_skipped";
    case SessionEventKind::termination: return "termination";
  }
  return "?";
}

inline SessionEventKind event_kind_from(const std::string& name) {
  if (name == "rapport_check") return SessionEventKind::rapport_check;
  if (name == "exploration_check") return SessionEventKind::exploration_check;
  if (name == "unmask_external") return SessionEventKind::unmask_external;
  if (name == "unmask_internal") return SessionEventKind::unmask_internal;
  if (name == "check_skipped") return SessionEventKind::check_skipped;
  if (name == "termination") return SessionEventKind::termination;
  throw FormatError("unknown event kind: " + name);
}

struct SessionEvent {
  int turn_index = 1;
  SessionEventKind kind = SessionEventKind::termination;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const SessionEvent&) const = default;
};

enum class Termination { farewell, client_done, max_turns, aborted };

inline const char* termination_name(Termination t) {
  switch (t) {
    case Termination::farewell: return "farewell";
    case Termination::client_done: return "client_done";
    case Termination::max_turns: return "max_turns";
    case Termination::aborted: return "aborted";
  }
  return "?";
}

inline Termination termination_from(const std::string& name) {
  if (name == "farewell") return Termination::farewell;
  if (name == "client_done") return Termination::client_done;
  if (name == "max_turns") return Termination::max_turns;
  if (name == "aborted") return Termination::aborted;
  throw FormatError("unknown termination: " + name);
}

struct SessionConfig {
  int max_turns = 15;
  DifficultyPreset preset = easy_preset();
  MediatorPolicy mediator;
  GenerationParams client_params;
  GenerationParams therapist_params;
  PromptTemplate client_template;
  PromptTemplate therapist_template;
  std::string closing_marker = kDefaultClosingMarker;
  std::uint64_t seed = 0;  // labels scripted-run fixtures; no RNG in the loop
  std::string transcript_path;

  bool operator==(const SessionConfig&) const = default;
};

// Wires a config from a preset and a prompt library; params can be
// adjusted afterwards.
inline SessionConfig make_session_config(const DifficultyPreset& preset,
                                         const PromptLibrary& prompts) {
  SessionConfig config;
  config.preset = preset;
  config.mediator = make_mediator_policy(preset, prompts);
  config.client_template = prompts.get("client_base");
  config.therapist_template = prompts.get("therapist_system");
  return config;
}

struct SessionRecord {
  std::string profile_ref;
  ClientProfile profile;
  SessionConfig config;
  std::vector<Utterance> transcript;
  std::vector<SessionEvent> events;
  CognitiveDiagram final_diagram;
  Termination termination = Termination::max_turns;

  bool operator==(const SessionRecord&) const = default;
};

// Unrecoverable mid-session backend failure; carries everything that
// happened up to the failure so the partial record can be persisted.
struct AbortedSession : Error {
  AbortedSession(const std::string& what, SessionRecord record)
      : Error(what), partial(std::move(record)) {}
  SessionRecord partial;
};

// --- prompt assembly ----------------------------------------------------

// System message for the client simulator: the accessible view of the
// diagram plus the role instructions. Changes between turns only when
// the diagram changes.
inline std::vector<ChatMessage> build_client_prompt(const ClientProfile& profile,
                                                    const CognitiveDiagram& diagram,
                                                    const PromptTemplate& client_template,
                                                    const std::string& closing_marker) {
  const std::string text = client_template.render({
      {"accessible_profile", render_accessible(profile, diagram)},
      {"client_name", profile.name},
      {"closing_marker", closing_marker},
  });
  return {{Role::system, text}};
}

// Intake-form system message for the therapist: identity and stated
// reason only — never diagram content.
inline std::vector<ChatMessage> build_therapist_prompt(
    const ClientProfile& profile, const PromptTemplate& therapist_template) {
  std::ostringstream form;
  form << "Name: " << profile.name << "\n";
  if (profile.intake.age) form << "Age: " << *profile.intake.age << "\n";
  if (profile.intake.job) form << "Occupation: " << *profile.intake.job << "\n";
  form << "Reason for counseling: " << profile.intake.reason_for_counseling;
  const std::string text = therapist_template.render({
      {"intake_form", form.str()},
      {"client_name", profile.name},
  });
  return {{Role::system, text}};
}

// System prompt plus the dialogue so far as side-tagged messages.
inline std::vector<ChatMessage> conversation_messages(
    std::vector<ChatMessage> system_prologue, const std::vector<Utterance>& transcript) {
  std::vector<ChatMessage> messages = std::move(system_prologue);
  for (const auto& u : transcript)
    messages.push_back({u.speaker == Speaker::therapist ? Role::therapist_side
                                                        : Role::client_side,
                        u.text});
  return messages;
}

// --- termination ----------------------------------------------------------

namespace detail {

inline bool contains_case_insensitive(const std::string& haystack,
                                      const std::string& needle) {
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

}  // namespace detail

// Checked in priority order: a therapist farewell ends the session even
// on the turn limit; the client's closing marker is next; the turn cap
// is the backstop.
inline std::optional<Termination> check_termination(
    const std::vector<Utterance>& transcript, const SessionConfig& config) {
  const Utterance* last_therapist = nullptr;
  const Utterance* last_client = nullptr;
  for (const auto& u : transcript) {
    (u.speaker == Speaker::therapist ? last_therapist : last_client) = &u;
  }
  if (last_therapist != nullptr &&
      detail::contains_case_insensitive(last_therapist->text, kFarewellToken))
    return Termination::farewell;
  if (last_client != nullptr &&
      last_client->text.find(config.closing_marker) != std::string::npos)
    return Termination::client_done;
  if (completed_turns(transcript) >= config.max_turns) return Termination::max_turns;
  return std::nullopt;
}

// --- the session loop -------------------------------------------------------

namespace detail {

struct CheckOutcome {
  bool ran = false;  // false = skipped after the retry
  JudgeResult result;
  std::string failure;
};

// One scheduled check with the one-retry-then-skip policy. Configuration
// errors are not survivable and propagate.
inline CheckOutcome run_check_with_retry(const std::vector<Utterance>& transcript,
                                         ChatBackend& judge, const MediatorPolicy& policy,
                                         bool rapport) {
  CheckOutcome outcome;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      outcome.result = rapport ? judge_rapport(transcript, judge, policy)
                               : judge_exploration(transcript, judge, policy);
      outcome.ran = true;
      return outcome;
    } catch (const ConfigError&) {
      throw;
    } catch (const BackendError& e) {
      outcome.failure = e.what();
    } catch (const ParseError& e) {
      outcome.failure = e.what();
    }
  }
  return outcome;
}

}  // namespace detail

// Runs one full session. The therapist opens every turn; a turn counts
// once both sides have spoken; checks run after the completed exchange
// (rapport before exploration) and termination is evaluated after the
// checks so a final-turn check still fires. A farewell utterance stands
// alone: no client reply and no checks on that turn.
inline SessionRecord run_session(const ClientProfile& profile, ChatBackend& therapist,
                                 ChatBackend& client, ChatBackend& judge,
                                 const SessionConfig& config) {
  validate_diagram(profile.diagram);
  if (config.max_turns < 1) throw ConfigError("max_turns must be >= 1");

  SessionRecord record;
  record.profile_ref = profile.name;
  record.profile = profile;
  record.config = config;

  CognitiveDiagram diagram = initialize_mask(profile, config.preset);

  const bool logical_clock =
      therapist.deterministic() && client.deterministic() && judge.deterministic();
  std::int64_t sequence = 0;
  auto stamp = [&]() -> std::int64_t {
    ++sequence;
    if (logical_clock) return sequence;
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };

  const std::vector<ChatMessage> therapist_prologue =
      build_therapist_prompt(profile, config.therapist_template);

  auto abort_session = [&](const std::string& why) -> AbortedSession {
    record.events.push_back({std::max(1, completed_turns(record.transcript) + 1),
                             SessionEventKind::termination,
                             {{"reason", "aborted"}, {"detail", why}}});
    record.termination = Termination::aborted;
    record.final_diagram = diagram;
    return AbortedSession("session aborted: " + why, record);
  };

  for (int turn = 1;; ++turn) {
    // Therapist speaks.
    std::string therapist_text;
    try {
      therapist_text = complete(
          therapist, conversation_messages(therapist_prologue, record.transcript),
          config.therapist_params);
    } catch (const BackendError& e) {
      throw abort_session(std::string("therapist backend: ") + e.what());
    }
    record.transcript.push_back({turn, Speaker::therapist, therapist_text, stamp()});

    // A farewell is terminal on the spot: no reply, no checks.
    if (detail::contains_case_insensitive(therapist_text, kFarewellToken)) {
      record.events.push_back(
          {turn, SessionEventKind::termination, {{"reason", "farewell"}}});
      record.termination = Termination::farewell;
      break;
    }

    // Client replies to the current accessible view.
    std::string client_text;
    try {
      client_text = complete(
          client,
          conversation_messages(build_client_prompt(profile, diagram,
                                                    config.client_template,
                                                    config.closing_marker),
                                record.transcript),
          config.client_params);
    } catch (const BackendError& e) {
      throw abort_session(std::string("client backend: ") + e.what());
    }
    record.transcript.push_back({turn, Speaker::client, client_text, stamp()});

    // Scheduled checks, rapport first.
    if (should_check_rapport(turn, config.mediator)) {
      auto outcome =
          detail::run_check_with_retry(record.transcript, judge, config.mediator, true);
      if (!outcome.ran) {
        record.events.push_back({turn,
                                 SessionEventKind::check_skipped,
                                 {{"check", "rapport"}, {"reason", outcome.failure}}});
      } else {
        const bool passed =
            outcome.result.verdict.value >= config.mediator.score_threshold;
        record.events.push_back({turn,
                                 SessionEventKind::rapport_check,
                                 {{"score", outcome.result.verdict.value},
                                  {"justification", outcome.result.verdict.justification},
                                  {"raw", outcome.result.raw},
                                  {"passed", passed}}});
        CognitiveDiagram next =
            apply_rapport_verdict(diagram, outcome.result.verdict, config.mediator);
        if (!(next == diagram)) {
          int disclosed = 0;
          for (const auto& b : next.external)
            if (b.unmasked() &&
                !diagram.external[static_cast<std::size_t>(b.index - 1)].unmasked())
              disclosed = b.index;
          record.events.push_back(
              {turn, SessionEventKind::unmask_external, {{"bundle", disclosed}}});
          diagram = std::move(next);
        }
      }
    }
    if (should_check_exploration(turn, config.mediator)) {
      auto outcome =
          detail::run_check_with_retry(record.transcript, judge, config.mediator, false);
      if (!outcome.ran) {
        record.events.push_back({turn,
                                 SessionEventKind::check_skipped,
                                 {{"check", "exploration"}, {"reason", outcome.failure}}});
      } else {
        const bool passed =
            outcome.result.verdict.value >= config.mediator.score_threshold;
        record.events.push_back({turn,
                                 SessionEventKind::exploration_check,
                                 {{"score", outcome.result.verdict.value},
                                  {"justification", outcome.result.verdict.justification},
                                  {"raw", outcome.result.raw},
                                  {"passed", passed}}});
        CognitiveDiagram next =
            apply_exploration_verdict(diagram, outcome.result.verdict, config.mediator);
        if (!(next == diagram)) {
          record.events.push_back(
              {turn, SessionEventKind::unmask_internal, nlohmann::json::object()});
          diagram = std::move(next);
        }
      }
    }

    // Termination after the checks so final-turn checks still fire.
    if (auto reason = check_termination(record.transcript, config)) {
      record.events.push_back({turn,
                               SessionEventKind::termination,
                               {{"reason", termination_name(*reason)}}});
      record.termination = *reason;
      break;
    }
  }

  record.final_diagram = std::move(diagram);
  return record;
}

// --- event folding ------------------------------------------------------------

// Replays the unmask events over a freshly initialized mask; the result
// must equal the record's final diagram (persistence verifies this).
inline CognitiveDiagram fold_events(const ClientProfile& profile,
                                    const DifficultyPreset& preset,
                                    const std::vector<SessionEvent>& events) {
  CognitiveDiagram diagram = initialize_mask(profile, preset);
  for (const auto& e : events) {
    if (e.kind == SessionEventKind::unmask_external)
      diagram = unmask_next_external(std::move(diagram));
    else if (e.kind == SessionEventKind::unmask_internal)
      diagram = unmask_internal(std::move(diagram));
  }
  return diagram;
}

// --- persistence ---------------------------------------------------------------

namespace detail {

inline nlohmann::json generation_params_to_json(const GenerationParams& p) {
  return {{"temperature", p.temperature},
          {"max_output_tokens", p.max_output_tokens},
          {"model", p.model_name},
          {"timeout_ms", static_cast<std::int64_t>(p.timeout.count())},
          {"max_retries", p.max_retries},
          {"retry_backoff_ms", static_cast<std::int64_t>(p.retry_backoff_base.count())}};
}

inline GenerationParams generation_params_from_json(const nlohmann::json& j) {
  GenerationParams p;
  p.temperature = j.at("temperature").get<double>();
  p.max_output_tokens = j.at("max_output_tokens").get<int>();
  p.model_name = j.at("model").get<std::string>();
  p.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<std::int64_t>());
  p.max_retries = j.at("max_retries").get<int>();
  p.retry_backoff_base =
      std::chrono::milliseconds(j.at("retry_backoff_ms").get<std::int64_t>());
  return p;
}

inline nlohmann::json preset_to_json(const DifficultyPreset& p) {
  return {{"label", p.label},
          {"initial_accessible", p.initial_accessible},
          {"exploration_interval", p.exploration_interval},
          {"rapport_interval", p.rapport_interval}};
}

inline DifficultyPreset preset_from_json(const nlohmann::json& j) {
  DifficultyPreset p;
  p.label = j.at("label").get<std::string>();
  p.initial_accessible = j.at("initial_accessible").get<int>();
  p.exploration_interval = j.at("exploration_interval").get<int>();
  p.rapport_interval = j.at("rapport_interval").get<int>();
  return p;
}

inline nlohmann::json prompt_template_to_json(const PromptTemplate& t) {
  return {{"name", t.name}, {"body", t.body}};
}

inline PromptTemplate prompt_template_from_json(const nlohmann::json& j) {
  return {j.at("name").get<std::string>(), j.at("body").get<std::string>()};
}

inline nlohmann::json session_config_to_json(const SessionConfig& c) {
  return {{"max_turns", c.max_turns},
          {"preset", preset_to_json(c.preset)},
          {"mediator",
           {{"rapport_interval_k", c.mediator.rapport_interval_k},
            {"exploration_interval_l", c.mediator.exploration_interval_l},
            {"score_threshold", c.mediator.score_threshold},
            {"rapport_prompt", prompt_template_to_json(c.mediator.rapport_prompt)},
            {"exploration_prompt", prompt_template_to_json(c.mediator.exploration_prompt)},
            {"judge_params", generation_params_to_json(c.mediator.judge_params)}}},
          {"client_params", generation_params_to_json(c.client_params)},
          {"therapist_params", generation_params_to_json(c.therapist_params)},
          {"client_template", prompt_template_to_json(c.client_template)},
          {"therapist_template", prompt_template_to_json(c.therapist_template)},
          {"closing_marker", c.closing_marker},
          {"seed", c.seed},
          {"transcript_path", c.transcript_path}};
}

inline SessionConfig session_config_from_json(const nlohmann::json& j) {
  SessionConfig c;
  c.max_turns = j.at("max_turns").get<int>();
  c.preset = preset_from_json(j.at("preset"));
  const auto& m = j.at("mediator");
  c.mediator.rapport_interval_k = m.at("rapport_interval_k").get<int>();
  c.mediator.exploration_interval_l = m.at("exploration_interval_l").get<int>();
  c.mediator.score_threshold = m.at("score_threshold").get<int>();
  c.mediator.rapport_prompt = prompt_template_from_json(m.at("rapport_prompt"));
  c.mediator.exploration_prompt = prompt_template_from_json(m.at("exploration_prompt"));
  c.mediator.judge_params = generation_params_from_json(m.at("judge_params"));
  c.client_params = generation_params_from_json(j.at("client_params"));
  c.therapist_params = generation_params_from_json(j.at("therapist_params"));
  c.client_template = prompt_template_from_json(j.at("client_template"));
  c.therapist_template = prompt_template_from_json(j.at("therapist_template"));
  c.closing_marker = j.at("closing_marker").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.transcript_path = j.at("transcript_path").get<std::string>();
  return c;
}

inline nlohmann::json mask_arrays(const CognitiveDiagram& diagram) {
  nlohmann::json bundles = nlohmann::json::array();
  for (const auto& b : diagram.external) bundles.push_back(b.unmasked());
  nlohmann::json internal = nlohmann::json::array();
  for (const auto& e : diagram.internal)
    internal.push_back(e.mask == MaskState::unmasked);
  return {{"bundles", bundles}, {"internal", internal}};
}

}  // namespace detail

// One JSON object per line: header, utterances and events merged per
// turn in chronological order, footer.
inline void persist_record(const SessionRecord& record, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write transcript: " + path);

  nlohmann::json header = {{"kind", "header"},
                           {"profile_ref", record.profile_ref},
                           {"profile", profile_to_json(record.profile)},
                           {"config", detail::session_config_to_json(record.config)}};
  out << header.dump() << "\n";

  std::size_t ui = 0;
  std::size_t ei = 0;
  int max_turn = 0;
  for (const auto& u : record.transcript) max_turn = std::max(max_turn, u.turn_index);
  for (const auto& e : record.events) max_turn = std::max(max_turn, e.turn_index);
  for (int turn = 1; turn <= max_turn; ++turn) {
    while (ui < record.transcript.size() && record.transcript[ui].turn_index == turn) {
      const auto& u = record.transcript[ui++];
      nlohmann::json line = {{"kind", "utterance"},
                             {"turn", u.turn_index},
                             {"speaker", speaker_name(u.speaker)},
                             {"text", u.text},
                             {"ts", u.ts}};
      out << line.dump() << "\n";
    }
    while (ei < record.events.size() && record.events[ei].turn_index == turn) {
      const auto& e = record.events[ei++];
      nlohmann::json line = {{"kind", "event"},
                             {"turn", e.turn_index},
                             {"event", event_kind_name(e.kind)},
                             {"payload", e.payload}};
      out << line.dump() << "\n";
    }
  }

  nlohmann::json footer = {{"kind", "footer"},
                           {"termination", termination_name(record.termination)},
                           {"exposure",
                            {{"external_revealed",
                              exposure_status(record.final_diagram).external_revealed},
                             {"internal_revealed",
                              exposure_status(record.final_diagram).internal_revealed},
                             {"full_revealed",
                              exposure_status(record.final_diagram).full_revealed}}},
                           {"final_mask", detail::mask_arrays(record.final_diagram)}};
  out << footer.dump() << "\n";
  if (!out) throw InputError("write failed: " + path);
}

namespace detail {

struct ParsedTranscript {
  SessionRecord record;   // final_diagram left empty; termination filled
  nlohmann::json footer;  // verbatim footer object
  int footer_line = 0;
};

// Structural read of a transcript file: header/utterance/event/footer
// lines parsed and ordered, no consistency verification yet.
inline ParsedTranscript parse_transcript_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read transcript: " + path);

  SessionRecord record;
  bool have_header = false;
  bool have_footer = false;
  nlohmann::json footer;
  int footer_line = 0;
  std::string line;
  int line_number = 0;

  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(std::string("invalid JSON: ") + e.what(), line_number);
    }
    const std::string kind = obj.value("kind", "");
    try {
      if (kind == "header") {
        if (have_header) throw FormatError("duplicate header", line_number);
        if (line_number != 1) throw FormatError("header must be the first line", line_number);
        record.profile_ref = obj.at("profile_ref").get<std::string>();
        record.profile = load_profile(obj.at("profile"));
        record.config = detail::session_config_from_json(obj.at("config"));
        have_header = true;
      } else if (kind == "utterance") {
        if (!have_header) throw FormatError("utterance before header", line_number);
        if (have_footer) throw FormatError("utterance after footer", line_number);
        Utterance u;
        u.turn_index = obj.at("turn").get<int>();
        const std::string speaker = obj.at("speaker").get<std::string>();
        if (speaker != "therapist" && speaker != "client")
          throw FormatError("unknown speaker: " + speaker, line_number);
        u.speaker = speaker == "therapist" ? Speaker::therapist : Speaker::client;
        u.text = obj.at("text").get<std::string>();
        u.ts = obj.at("ts").get<std::int64_t>();
        record.transcript.push_back(std::move(u));
      } else if (kind == "event") {
        if (!have_header) throw FormatError("event before header", line_number);
        if (have_footer) throw FormatError("event after footer", line_number);
        SessionEvent e;
        e.turn_index = obj.at("turn").get<int>();
        e.kind = event_kind_from(obj.at("event").get<std::string>());
        e.payload = obj.at("payload");
        record.events.push_back(std::move(e));
      } else if (kind == "footer") {
        if (!have_header) throw FormatError("footer before header", line_number);
        if (have_footer) throw FormatError("duplicate footer", line_number);
        footer = obj;
        footer_line = line_number;
        have_footer = true;
      } else {
        throw FormatError("unknown line kind: \"" + kind + "\"", line_number);
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("missing or mistyped field: ") + e.what(),
                        line_number);
    }
  }

  if (!have_header) throw FormatError("no header line", line_number);
  if (!have_footer) throw FormatError("truncated transcript: no footer", line_number);

  try {
    record.termination = termination_from(footer.at("termination").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("footer: ") + e.what(), footer_line);
  }
  return {std::move(record), std::move(footer), footer_line};
}

// Fold-vs-footer consistency check shared by load and replay. Returns an
// empty string when consistent, else a description of the violation.
inline std::string verify_against_footer(const SessionRecord& record,
                                         const nlohmann::json& footer) {
  const nlohmann::json expected_mask = mask_arrays(record.final_diagram);
  if (footer.at("final_mask") != expected_mask)
    return "footer mask does not match the event fold";
  const ExposureStatus exposure = exposure_status(record.final_diagram);
  const auto& footer_exposure = footer.at("exposure");
  if (footer_exposure.at("external_revealed").get<bool>() != exposure.external_revealed ||
      footer_exposure.at("internal_revealed").get<bool>() != exposure.internal_revealed ||
      footer_exposure.at("full_revealed").get<bool>() != exposure.full_revealed)
    return "footer exposure does not match the event fold";
  return {};
}

}  // namespace detail

// Reads a transcript back and re-folds its events over a fresh mask to
// verify the footer; any structural lie is a FormatError with the line.
inline SessionRecord load_record(const std::string& path) {
  detail::ParsedTranscript parsed = detail::parse_transcript_file(path);
  SessionRecord record = std::move(parsed.record);
  record.final_diagram =
      fold_events(record.profile, record.config.preset, record.events);
  const std::string violation = detail::verify_against_footer(record, parsed.footer);
  if (!violation.empty()) throw FormatError(violation, parsed.footer_line);
  return record;
}

}  // namespace delve
