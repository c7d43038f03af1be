#pragma once

// Deterministic fixtures: two fully specified client personas and two
// scripted sessions with known-by-hand traces, plus a writer that lays
// out a ready-to-run fixture tree (personas, batch config, calibration
// inputs) for the CLI and the demos.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delve/backends.hpp"
#include "delve/persona.hpp"
#include "delve/prompt.hpp"
#include "delve/session.hpp"

namespace delve::fixtures {

// --- personas ---------------------------------------------------------------

// Guarded client, low openness / low metacognition.
inline nlohmann::json alex_persona_json() {
  return nlohmann::json{
      {"name", "Alex"},
      {"traits", {"hostile", "guarded"}},
      {"openness", "low"},
      {"metacognition", "low"},
      {"intake",
       {{"age", 34},
        {"job", "warehouse stocker"},
        {"reason",
         "Anger outbursts and family conflict after completing a substance-abuse "
         "rehabilitation program."}}},
      {"internal",
       {{"relevant_histories",
         {"The patient has a history of substance abuse and has been through rehab "
          "to overcome it."}},
        {"core_beliefs", {"I am out of control."}},
        {"intermediate_beliefs",
         {"There's nothing I can do to change my situation. I cannot control "
          "myself."}},
        {"coping_strategies",
         {"Distancing himself from his family to reduce exposure to negativity and "
          "conflict."}}}},
      {"experiences",
       {{{"situation", "Alex's cousin invited him to attend his upcoming wedding."},
         {"automatic_thought", "Everyone there will be watching for me to slip up."},
         {"emotion", "Anxiety"},
         {"behavior", "He left the invitation unanswered for weeks."}},
        {{"situation",
          "His sister called to ask whether he would drive their mother to the "
          "ceremony."},
         {"automatic_thought", "They only call when they want something from me."},
         {"emotion", "Resentment"},
         {"behavior",
          "He let the call go to voicemail and turned his phone off for the "
          "night."}},
        {{"situation", "A coworker joked about Alex's temper during a shift briefing."},
         {"automatic_thought",
          "If I react, it proves I'm exactly what they think I am."},
         {"emotion", "Anger"},
         {"behavior", "He walked off the floor and smoked alone in the loading "
                      "bay."}}}},
  };
}

// Forthcoming client, high openness / high metacognition.
inline nlohmann::json grace_persona_json() {
  return nlohmann::json{
      {"name", "Grace"},
      {"traits", {"articulate", "self-critical"}},
      {"openness", "high"},
      {"metacognition", "high"},
      {"intake",
       {{"age", 41},
        {"job", "pharmacist"},
        {"reason", "Feeling persistently worthless in the two years since her "
                   "divorce."}}},
      {"internal",
       {{"relevant_histories",
         {"Grace went through a contentious divorce two years ago after discovering "
          "her husband's affair."}},
        {"core_beliefs", {"I am unlovable."}},
        {"intermediate_beliefs",
         {"If I let anyone get close, they will eventually leave me."}},
        {"coping_strategies",
         {"Burying herself in extra shifts at the pharmacy to avoid being alone with "
          "her thoughts."}}}},
      {"experiences",
       {{{"situation", "A coworker canceled their lunch plans at the last minute."},
         {"automatic_thought", "She finally figured out I'm not worth her time."},
         {"emotion", "Sadness"},
         {"behavior",
          "Grace ate alone in her car and avoided the coworker for the rest of the "
          "week."}},
        {{"situation", "Grace's sister asked why she hadn't started dating again."},
         {"automatic_thought",
          "No one would want someone a husband already threw away."},
         {"emotion", "Shame"},
         {"behavior", "She changed the subject and left the gathering early."}},
        {{"situation",
          "A patient complimented Grace on how carefully she explained a "
          "prescription."},
         {"automatic_thought", "If they knew the real me, they wouldn't be "
                               "impressed."},
         {"emotion", "Discomfort"},
         {"behavior",
          "She deflected the compliment and busied herself with the register."}}}},
  };
}

inline ClientProfile alex_profile() { return load_profile(alex_persona_json()); }
inline ClientProfile grace_profile() { return load_profile(grace_persona_json()); }

// --- scripted sessions -------------------------------------------------------

struct ScriptedSession {
  std::string label;
  ClientProfile profile;
  DifficultyPreset preset;
  std::vector<std::string> therapist_lines;
  std::vector<std::string> client_lines;
  std::vector<std::string> judge_lines;
};

// Easy preset (3 bundles pre-disclosed, exploration every turn, rapport
// every 4th). Known trace: the turn-1 exploration check passes and
// reveals the internal model; turns 2-4 fail their checks; the turn-4
// rapport check fails; the therapist's 5th utterance is a farewell and
// stands alone. 9 utterances, 7 events, everything revealed.
inline ScriptedSession easy_pass() {
  ScriptedSession fx;
  fx.label = "easy_pass";
  fx.profile = alex_profile();
  fx.preset = easy_preset();
  fx.therapist_lines = {
      "Hello Alex, I'm glad you came in today. What brings you to counseling?",
      "That sounds stressful. When you picture being at the wedding, what goes "
      "through your mind?",
      "You mentioned losing your temper. What does that feel like it says about you?",
      "Thank you for trusting me with that. How do you usually cope when family "
      "conflict flares up?",
      "We've covered a lot of ground today. Goodbye, Alex — I'll see you next week.",
  };
  fx.client_lines = {
      "I've been on edge ever since my cousin invited me to his wedding. Family "
      "gatherings never end well for me.",
      "I keep thinking I'll lose my temper in front of everyone. I always do.",
      "Honestly? That I'm out of control. I've felt that way since rehab.",
      "I pull away. I stopped visiting my family so I don't have to deal with the "
      "arguments.",
  };
  fx.judge_lines = {
      "[Rating]: 5\n[Justification]: The therapist elicited the belief behind the "
      "distress — a breakthrough insight.",
      "[Rating]: 2\n[Justification]: The turn stayed on surface details; "
      "exploration plateaued.",
      "[Rating]: 2\n[Justification]: Repetition without new depth.",
      "Rating: 3\nThe client remains wary but engaged; rapport is steady.",
      "[Rating]: 2\n[Justification]: Closing logistics, no further exploration.",
  };
  return fx;
}

// Hard preset (1 bundle pre-disclosed, exploration every 3rd turn,
// rapport every 4th). Every check scores 3 against threshold 4, so
// nothing is ever revealed; the session runs to the 15-turn cap.
// 30 utterances, 9 events (8 checks + the turn-limit termination).
inline ScriptedSession hard_stonewall() {
  ScriptedSession fx;
  fx.label = "hard_stonewall";
  fx.profile = grace_profile();
  fx.preset = hard_preset();
  fx.therapist_lines = {
      "Hello Grace, thank you for coming in. What would you like to focus on today?",
      "That sounds like a heavy couple of years. How have things been week to week?",
      "When the evenings feel long, what do you usually do with that time?",
      "You mentioned extra shifts. What does work give you that home doesn't?",
      "How did things change for you socially after the separation?",
      "What happens inside when someone cancels plans with you?",
      "If a friend described that same moment, what would you tell them?",
      "What was it like to hear your sister bring up dating again?",
      "Where do you feel that pressure in your body when it comes up?",
      "What would trying again have to look like for it to feel safe?",
      "You said compliments are hard to take. What makes them hard?",
      "What do you imagine people would see if they, as you say, really knew you?",
      "How has that belief shaped the choices you've made this year?",
      "What small thing might test whether that prediction is accurate?",
      "We're near the end of our time today. What will you take from this hour?",
  };
  fx.client_lines = {
      "I suppose the divorce. It's been two years and I still feel like damaged "
      "goods.",
      "Busy, mostly. I've been picking up extra shifts at the pharmacy.",
      "Work, usually. If I'm counting pills I'm not sitting with my thoughts.",
      "Structure. Nobody at work asks how I'm really doing.",
      "I stopped being invited to things, or maybe I stopped saying yes. Hard to "
      "tell anymore.",
      "I assume they finally saw whatever my ex-husband saw and made for the exit.",
      "I'd tell a friend it was just lunch. It never feels like just lunch when "
      "it's me.",
      "Embarrassing. Like being asked why I haven't fixed something everyone can "
      "see is broken.",
      "My chest tightens, and I start planning how to leave the room.",
      "I honestly don't know. Safe isn't a word I associate with people anymore.",
      "They feel like a bill that will come due. Praise now, disappointment later.",
      "Someone who wasn't worth staying for. You asked, so there it is.",
      "I've kept everyone at arm's length. Even my sister gets the polite version "
      "of me.",
      "I guess I could have coffee with the coworker who canceled. See what "
      "actually happens.",
      "That the story I tell about myself hasn't been tested in a long time.",
  };
  // Consumed in schedule order: exploration at turns 3, 6, 9, 12, 15 and
  // rapport at 4, 8, 12 — rapport first when a turn has both.
  fx.judge_lines = {
      "[Rating]: 3\n[Justification]: Some movement, but the core pattern is "
      "untouched.",
      "Rating: 3\nPolite and responsive, yet guarded.",
      "[Rating]: 3\n[Justification]: Useful detail, limited depth.",
      "Rating: 3\nSteady but not warming.",
      "[Rating]: 3\n[Justification]: Circling the same territory.",
      "Rating: 3\nCooperative on the surface.",
      "[Rating]: 3\n[Justification]: A near miss; the belief stayed implicit.",
      "[Rating]: 3\n[Justification]: Reflection without a new discovery.",
  };
  return fx;
}

// Runs a scripted fixture end to end with the embedded prompt set.
inline SessionRecord run_fixture(const ScriptedSession& fx) {
  ScriptedChatBackend therapist(fx.therapist_lines);
  ScriptedChatBackend client(fx.client_lines);
  ScriptedChatBackend judge(fx.judge_lines);
  const SessionConfig config =
      make_session_config(fx.preset, PromptLibrary::embedded());
  return run_session(fx.profile, therapist, client, judge, config);
}

// --- extraction / embedding fixtures ---------------------------------------

// What the scripted extractor reports, in internal-kind order (history,
// core belief, intermediate belief, coping strategy).
inline std::vector<std::string> alex_extractor_script() {
  return {
      "The client struggled with substance abuse in the past and completed a "
      "rehabilitation program.",
      "The client believes he is fundamentally out of control.",
      "The client assumes nothing he does can change his situation or restrain "
      "himself.",
      "The client copes by distancing himself from family to avoid conflict.",
  };
}

// Embedding geometry pairing each of Alex's ground-truth internal
// elements with the matching extractor line at cosine 0.90 (above the
// 0.85 default threshold). Texts outside the table embed orthogonally.
inline std::vector<CosinePair> alex_extraction_pairs() {
  const ClientProfile alex = alex_profile();
  const std::vector<std::string> predicted = alex_extractor_script();
  std::vector<CosinePair> pairs;
  for (std::size_t i = 0; i < kInternalKinds.size(); ++i) {
    const auto truths = alex.diagram.internal_of(kInternalKinds[i]);
    pairs.push_back({truths.front()->text, predicted[i], 0.90});
  }
  return pairs;
}

// --- fixture tree ------------------------------------------------------------

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write fixture file: " + path.string());
  out << text;
}

}  // namespace detail

// Labeled transcripts for judge calibration: two clearly collaborative
// sessions and two clearly adversarial ones.
inline nlohmann::json calibration_transcripts_json() {
  auto dialogue = [](std::vector<std::pair<const char*, const char*>> lines) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [speaker, text] : lines)
      arr.push_back({{"speaker", speaker}, {"text", text}});
    return arr;
  };
  return nlohmann::json::array({
      {{"quality", "high"},
       {"dialogue",
        dialogue({{"therapist", "What felt different about this week?"},
                  {"client", "I actually called my brother back, and it went fine."},
                  {"therapist", "What did making that call tell you about yourself?"},
                  {"client",
                   "Maybe that I can handle more than I give myself credit for."}})}},
      {{"quality", "high"},
       {"dialogue",
        dialogue({{"therapist", "You said the mornings are hardest. Walk me through "
                                "one."},
                  {"client", "I wake up already bracing for things to go wrong."},
                  {"therapist", "Bracing how? What does your mind tell you is "
                                "coming?"},
                  {"client",
                   "That I'll ruin something. Saying it out loud, it sounds harsher "
                   "than it feels."}})}},
      {{"quality", "low"},
       {"dialogue",
        dialogue({{"therapist", "So why haven't you just stopped doing that?"},
                  {"client", "I don't know. It's not that simple."},
                  {"therapist", "It sounds simple to me. You should try harder."},
                  {"client", "Fine. Whatever you say."}})}},
      {{"quality", "low"},
       {"dialogue",
        dialogue({{"therapist", "Let's not dwell on that. Seen any good movies?"},
                  {"client", "I guess. I watched something last night."},
                  {"therapist", "Nice. Movies are a great distraction."},
                  {"client", "Sure."}})}},
  });
}

// Judge script matching calibration_transcripts_json(): two lines per
// transcript, rapport verdict then exploration verdict, in array order.
inline std::vector<std::string> calibration_judge_script() {
  return {
      "Rating: 5\nWarm, collaborative exchange.",
      "[Rating]: 5\n[Justification]: Each turn deepened the insight.",
      "Rating: 4\nComfortable disclosure throughout.",
      "[Rating]: 4\n[Justification]: Productive exploration of the morning pattern.",
      "Rating: 2\nThe client shut down under pressure.",
      "[Rating]: 1\n[Justification]: Interrogative drilling with no discovery.",
      "Rating: 1\nAdversarial tone throughout.",
      "[Rating]: 2\n[Justification]: Deflection into small talk.",
  };
}

// Batch config over both personas on the easy preset, fully scripted:
// every session replays the easy_pass trace, and the extractor/embedder
// pair makes Alex's extraction match and Grace's miss.
inline nlohmann::json batch_config_json() {
  const ScriptedSession fx = easy_pass();
  nlohmann::json config;
  config["personas_dir"] = "personas";
  config["output_dir"] = "out";
  config["presets"] = {"easy"};
  config["sessions_per_cell"] = 1;
  config["parallelism"] = 2;
  config["backends"] = {
      {"therapist", {{"kind", "scripted_chat"}, {"script", fx.therapist_lines}}},
      {"client", {{"kind", "scripted_chat"}, {"script", fx.client_lines}}},
      {"judge", {{"kind", "scripted_chat"}, {"script", fx.judge_lines}}},
      {"extractor", {{"kind", "scripted_chat"}, {"script", alex_extractor_script()}}},
      {"embedder",
       {{"kind", "fixed_embedding"},
        {"dimension", 64},
        {"pairs", nlohmann::json::array()}}},
  };
  auto& pairs = config["backends"]["embedder"]["pairs"];
  for (const auto& p : alex_extraction_pairs())
    pairs.push_back(
        {{"text_a", p.text_a}, {"text_b", p.text_b}, {"cosine", p.cosine}});
  return config;
}

// Writes the complete fixture tree under `dir`:
//   personas/alex.json, personas/grace.json
//   config.json            — scripted batch over both personas
//   calibration.json       — labeled transcripts for the calibrate command
//   calibration_judge.json — scripted judge descriptor for calibration
inline void seed_fixtures(const std::string& dir) {
  const std::filesystem::path root(dir);
  std::filesystem::create_directories(root / "personas");
  detail::write_file(root / "personas" / "alex.json",
                     alex_persona_json().dump(2) + "\n");
  detail::write_file(root / "personas" / "grace.json",
                     grace_persona_json().dump(2) + "\n");
  detail::write_file(root / "config.json", batch_config_json().dump(2) + "\n");
  detail::write_file(root / "calibration.json",
                     calibration_transcripts_json().dump(2) + "\n");
  const nlohmann::json judge = {{"kind", "scripted_chat"},
                                {"script", calibration_judge_script()}};
  detail::write_file(root / "calibration_judge.json", judge.dump(2) + "\n");
}

}  // namespace delve::fixtures
