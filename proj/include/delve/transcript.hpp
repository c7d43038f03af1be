#pragma once

// Dialogue primitives shared by the session loop, the judges, and the
// scoring pipeline.

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace delve {

enum class Speaker { therapist, client };

inline const char* speaker_name(Speaker s) {
  return s == Speaker::therapist ? "therapist" : "client";
}

struct Utterance {
  int turn_index = 1;
  Speaker speaker = Speaker::therapist;
  std::string text;
  // Wall-clock ms since epoch for live runs; the utterance sequence
  // number for fully scripted runs, keeping transcripts byte-stable.
  std::int64_t ts = 0;

  bool operator==(const Utterance&) const = default;
};

// Plain two-column rendering every judge/extractor prompt consumes.
inline std::string render_dialogue(const std::vector<Utterance>& transcript) {
  std::ostringstream out;
  bool first = true;
  for (const auto& u : transcript) {
    if (!first) out << "\n";
    first = false;
    out << (u.speaker == Speaker::therapist ? "Therapist: " : "Client: ") << u.text;
  }
  return out.str();
}

// Client lines only, for extraction scopes that must ignore what the
// therapist asserted.
inline std::string render_client_statements(const std::vector<Utterance>& transcript) {
  std::ostringstream out;
  bool first = true;
  for (const auto& u : transcript) {
    if (u.speaker != Speaker::client) continue;
    if (!first) out << "\n";
    first = false;
    out << u.text;
  }
  return out.str();
}

// Completed exchanges: turns holding both a therapist and a client line.
inline int completed_turns(const std::vector<Utterance>& transcript) {
  int count = 0;
  for (const auto& u : transcript)
    if (u.speaker == Speaker::client && u.turn_index > count) count = u.turn_index;
  return count;
}

}  // namespace delve
