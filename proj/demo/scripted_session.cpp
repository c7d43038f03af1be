// Demo: run one fully scripted session end to end, persist it, replay it
// from disk, then run the two post-hoc analyses (strategy annotation and
// the six-criterion quality rubric) with scripted judges.
//
// Usage: scripted_session [transcript.jsonl]

#include <iostream>
#include <string>

#include <delve/delve.hpp>

int main(int argc, char** argv) {
  const std::string out_path = argc > 1 ? argv[1] : "easy_pass.jsonl";

  // Run the known-trace fixture and write its transcript.
  const delve::fixtures::ScriptedSession fx = delve::fixtures::easy_pass();
  const delve::SessionRecord record = delve::fixtures::run_fixture(fx);
  delve::persist_record(record, out_path);
  std::cout << "wrote " << out_path << "\n\n";

  // Read it back and show the replay, including the disclosure audit.
  const delve::ReplayResult replay = delve::replay_session(out_path);
  std::cout << replay.text << "\n";

  // Label each therapist utterance with a scripted annotator. The last
  // line falls outside the closed label set and becomes the sentinel.
  delve::ScriptedChatBackend annotator({
      "Questions on Experiences",
      "Questions on Perspectives",
      "Questions on Emotions",
      "Questions on Experiences",
      "closing remarks",
  });
  const delve::PromptLibrary prompts = delve::PromptLibrary::embedded();
  const auto labels = delve::annotate_strategies(record, annotator,
                                                 prompts.get("annotation"), {});
  std::cout << "strategy annotation:\n";
  for (const auto& [turn, label] : labels)
    std::cout << "  turn " << turn << ": " << delve::strategy_display_name(label)
              << "\n";

  // Score the session on the six-criterion rubric with a scripted judge.
  delve::ScriptedChatBackend rubric_judge({
      "5, The therapist accurately restated the client's inner world.",
      "4, Warm and professional throughout.",
      "4, Agenda was shared, with room for more explicit teamwork.",
      "3, Some questions led, rather than guided, the discovery.",
      "4, The central belief was identified and named.",
      "4, A plausible change strategy was emerging by session end.",
  });
  const delve::CtrsReport rubric = delve::score_ctrs(record, rubric_judge, prompts, {});
  std::cout << "\nquality rubric:\n";
  for (const auto& [criterion, score] : rubric.scores)
    std::cout << "  " << delve::ctrs_criterion_name(criterion) << ": " << score
              << "\n";
  std::cout << "  normalized: " << rubric.normalized << "\n";
  return 0;
}
