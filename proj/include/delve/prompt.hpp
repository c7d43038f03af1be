#pragma once

// Prompt templating: named templates with {placeholder} substitution, a
// library that loads overrides from a directory of .txt files, and the
// embedded default texts for every role in the harness.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "delve/errors.hpp"

namespace delve {

struct PromptTemplate {
  std::string name;
  std::string body;

  bool operator==(const PromptTemplate&) const = default;

  // Placeholder names in order of first appearance, deduplicated.
  std::vector<std::string> placeholders() const {
    static const std::regex pattern(R"(\{([A-Za-z0-9_]+)\})");
    std::vector<std::string> names;
    for (auto it = std::sregex_iterator(body.begin(), body.end(), pattern);
         it != std::sregex_iterator(); ++it) {
      std::string name = (*it)[1].str();
      if (std::find(names.begin(), names.end(), name) == names.end())
        names.push_back(std::move(name));
    }
    return names;
  }

  // Substitutes every placeholder; any unbound one is an error. Extra
  // bindings are ignored.
  std::string render(const std::map<std::string, std::string>& bindings) const {
    static const std::regex pattern(R"(\{([A-Za-z0-9_]+)\})");
    std::ostringstream out;
    std::vector<std::string> unbound;
    std::size_t last = 0;
    for (auto it = std::sregex_iterator(body.begin(), body.end(), pattern);
         it != std::sregex_iterator(); ++it) {
      const auto& match = *it;
      out << body.substr(last, static_cast<std::size_t>(match.position()) - last);
      const std::string key = match[1].str();
      auto found = bindings.find(key);
      if (found == bindings.end()) {
        unbound.push_back(key);
      } else {
        out << found->second;
      }
      last = static_cast<std::size_t>(match.position() + match.length());
    }
    out << body.substr(last);
    if (!unbound.empty()) {
      std::string msg = "template \"" + name + "\": unbound placeholder(s):";
      for (const auto& u : unbound) msg += " {" + u + "}";
      throw TemplateError(msg);
    }
    return out.str();
  }
};

namespace default_prompts {

inline constexpr const char* kClientBase = R"PROMPT({accessible_profile}

TASK
In this session, you will simulate [Client] authentically. As a simulated patient, your responses should:

- Reflect the interplay of your cognitive traits, beliefs, automatic thoughts, and behaviors.
- Your responses should implicitly convey these elements rather than stating them explicitly.

Adjust your responses based on your openness level and rapport status:
- If openness is high, you are willing to explore and express your thoughts, emotions, and experiences freely.
- If openness is low, your level of self-disclosure depends on the rapport with the therapist.
- If situation 2 and 3 contain "unknown" in two places, it means rapport has not been established.
In this case, you should be reserved, avoid direct self-disclosure, and keep your responses vague or defensive.
- If only one "unknown" appears in situation 2 or 3, some rapport has been built.
You may start to reveal more about your thoughts and experiences, but still with some hesitation.
- Gradually reveal your deeper concerns and core issues as the session progresses.
- Avoid abrupt, overly revealing responses. Allow the therapist to uncover insights naturally as trust develops.

Maintain a consistent tone and demeanor based on your cognitive profile:
- Stay true to the traits and beliefs described in your profile, ensuring your responses align with your underlying thought patterns.
- Use natural language and realistic conversational flow.
- If rapport is low, responses should be short, vague, or avoidant.
- If rapport is building, responses should still be somewhat hesitant but begin to contain more personal insight.
- If openness is high, responses can be more detailed and introspective from the beginning.

Respond dynamically to the therapist's questions:
- Engage in a natural back-and-forth interaction that allows the therapist to steer the discussion while maintaining your character's consistency.

You are now [Client]. Respond to the therapist's questions and prompts authentically, adjusting your responses based on your openness level and rapport status. Let your thought processes, beliefs, and emotions emerge naturally through the conversation rather than stating them outright.

If you genuinely feel the session has reached its natural end and there is nothing more you wish to discuss, finish your reply with the exact marker {closing_marker} on its own line. Do not use the marker otherwise.)PROMPT";

inline constexpr const char* kTherapistSystem = R"PROMPT(You are a professional psychotherapist conducting a one-on-one counseling session with a new client. Use cognitive behavioral therapy: build rapport, explore the client's thoughts, emotions, and past experiences, and guide them toward insight about the beliefs underlying their difficulties.

INTAKE FORM
{intake_form}

Guidelines:
- Open the session by greeting the client and inviting them to share.
- Ask focused, open-ended questions; one question at a time.
- Respond with warmth and without judgment; let the client set the pace.
- When you judge the session complete, close it warmly by saying goodbye.)PROMPT";

inline constexpr const char* kRapportJudge = R"PROMPT(Role:
You are evaluating how a client's emotional openness and rapport develop throughout the counseling session, with particular emphasis on their most recent emotional state and progression. Your evaluation should heavily weight the client's current level of disclosure and emotional depth in the latest exchanges.

Key Dimensions of Evaluation:
1. Emotional Expression (with emphasis on most recent emotional state)
2. Self-Reflection Depth (particularly in recent exchanges)
3. Rapport Development (focusing on current relationship quality)
4. Response Pattern (with attention to latest communication style)
5. Engagement Level (especially recent participation quality)

Scoring Scale:

1: INITIAL STAGE (15-25% of typical sessions)
  Core Indicators:
  - Primarily factual responses
  - Limited emotional vocabulary
  - Minimal elaboration on therapist questions
  - Defensive or hesitant stance
  *Must show at least 3 of these patterns in recent exchanges*

2: WARMING UP (25-35% of typical sessions)
  Core Indicators:
  - Mix of factual and emotional responses
  - Basic emotional vocabulary emerges
  - Some voluntary elaboration
  - Occasional defensive moments
  - Beginning signs of trust
  *Current exchanges must demonstrate 3+ indicators*

3: ENGAGED EXPLORATION (20-30% of typical sessions)
  Core Indicators:
  - Regular emotional expression
  - Active participation in dialogue
  - Meaningful self-reflection begins
  - Growing comfort with therapist
  - Some voluntary sharing
  *Must show clear progression in recent interactions*

4: DEEP ENGAGEMENT (15-20% of typical sessions)
  Core Indicators:
  - Consistent emotional depth
  - Strong therapeutic alliance
  - Regular self-initiated exploration
  - Authentic vulnerability
  - Integration of therapy concepts
  *Recent exchanges must demonstrate natural flow*

5: BREAKTHROUGH MOMENTS (5-10% of typical sessions)
  Core Indicators:
  - Significant personal insights
  - Deep emotional processing
  - Strong therapeutic bond
  - Transformative self-awareness
  - Clear behavior change intentions
  *Must include breakthrough moment in recent dialogue*

Critical Evaluation Instructions:
1. Prioritize the client's CURRENT emotional state in scoring
2. Give greater weight to recent exchanges over earlier ones
3. Look for immediate evidence of emotional depth
4. Consider how present moment rapport differs from session start
5. Evaluate latest emotional disclosures most heavily

Your Response Must Include:
1. Numerical Rating (1-5) based primarily on recent exchanges
2. Two key dialogue examples from latest interactions
3. Analysis of progression with emphasis on current state
4. Notable turning point leading to present emotional level

Dialogue Context: {dialogue_context}

Example Response:
Rating: 3
Key Examples:
- [Recent quote showing emotional state]
- [Latest exchange demonstrating current openness]
Progression: Client's most recent interactions show [specific emotional quality], marking significant change from earlier [previous state].
Turning Point: Client's emotional depth shifted at [specific recent moment] when they began expressing [new emotional quality].)PROMPT";

inline constexpr const char* kExplorationJudge = R"PROMPT(Question: Did the Therapist ask a high-quality question that deeply facilitates the client's inner exploration?

Scoring Scale:

1 (Moderate Facilitation):
  The Therapist asked basic or surface-level questions that led to some self-reflection but did not significantly challenge the client's existing thought patterns. The conversation remained mostly within familiar territory.

2 (High Facilitation):
  The Therapist asked clear, relevant, and well-structured open-ended questions that encouraged the client to think more deeply. However, the questions primarily expanded on existing thoughts rather than introducing significantly new perspectives.

3 (Very High Facilitation - Deep Exploration Begins):
  The Therapist asked insightful and thought-provoking questions that helped the client analyze the root causes, patterns, or emotional depth behind their experiences. The questions began to shift the client's perspective and encouraged higher-level self-reflection.

4 (Even Higher Facilitation - Strong Transformational Potential):
  The Therapist posed strategic and powerfully open-ended questions that pushed the client beyond their previous understanding. These questions challenged assumptions, revealed hidden motivations, or introduced completely new angles, leading to a clear shift in self-awareness.

5 (Profound Breakthrough - Exceptional Facilitation):
  The Therapist asked exceptionally well-timed, precise, and open-ended questions that led to a major insight or breakthrough moment. These questions helped the client uncover previously unspoken emotions, fundamentally reframe their situation, or reach a deep realization about themselves.

Conversation: {dialogue_history}

Output Format:
[Rating]:
[Justification]:)PROMPT";

inline constexpr const char* kExtraction = R"PROMPT(You are an automated semantic parser reviewing what a client said during a counseling session. Your task is to extract one element of the client's cognitive model strictly from the client's own statements.

Element to extract: {element_name}
Definition: {element_description}

Client statements:
{client_statements}

Instructions:
- Use only information the client actually stated or clearly implied; never invent content.
- If the client statements contain no evidence for this element, output exactly NONE.
- Otherwise output only the extracted element as one short passage, with no preamble and no commentary.)PROMPT";

inline constexpr const char* kAnnotation = R"PROMPT(You are annotating the psychotherapeutic strategy used in a single therapist utterance. Choose exactly one strategy from this catalog:

{strategy_catalog}

Therapist utterance:
{utterance}

Output only the strategy name, exactly as written in the catalog. If no strategy fits, output the closest one anyway.)PROMPT";

// Single-criterion session-quality rubrics. Shared skeleton; the
// question and 0/2/4/6 descriptors vary per criterion.
inline constexpr const char* kCtrsPreamble = R"PROMPT(Role:
You are evaluating a therapist based on a counseling session transcript. Your task is to assess their performance according to the given criteria. If the therapist's performance falls between two descriptors, select the intervening odd number (1, 3, 5). For instance, if the therapist set a very good agenda but did not establish priorities, assign a rating of 5 rather than 4.

Evaluation Steps:
1. Read the counseling session transcript carefully.
2. Review the evaluation questions and criteria below.
3. Assign a score based on the criteria, grading strictly. Any deficiency, no matter how minor, results in a score of 4 or lower.
4. Output the score and explanation, separated by a comma. Do not add any prefix.

Counseling Conversation: {conversation}
)PROMPT";

inline constexpr const char* kCtrsOutputFormat = R"PROMPT(
Output Format:
[Score]:
[Justification]:)PROMPT";

inline std::string ctrs_prompt(const std::string& question, const std::string& c0,
                               const std::string& c2, const std::string& c4,
                               const std::string& c6) {
  std::ostringstream out;
  out << kCtrsPreamble << "\nEvaluation Question:\n"
      << question << "\n\nScoring Criteria:\n\n0\n  - " << c0 << "\n\n2\n  - " << c2
      << "\n\n4\n  - " << c4 << "\n\n6\n  - " << c6 << "\n" << kCtrsOutputFormat;
  return out.str();
}

inline std::string ctrs_understanding() {
  return ctrs_prompt(
      "To what extent does the therapist accurately understand the client's internal "
      "reality, including what the client communicates both explicitly and subtly?",
      "Therapist repeatedly failed to understand what the patient explicitly said and "
      "thus consistently missed the point.",
      "Therapist was usually able to reflect or rephrase what the patient explicitly "
      "said, but repeatedly failed to respond to more subtle communication.",
      "Therapist generally seemed to grasp the patient's internal reality as reflected "
      "by both what the patient explicitly said and what the patient communicated in "
      "more subtle ways.",
      "Therapist seemed to understand the patient's internal reality thoroughly and "
      "was adept at communicating this understanding through appropriate verbal "
      "responses.");
}

inline std::string ctrs_interpersonal_effectiveness() {
  return ctrs_prompt(
      "To what extent does the therapist display warmth, concern, confidence, "
      "genuineness, and professionalism appropriate for this client?",
      "Therapist had poor interpersonal skills; seemed hostile, demeaning, or in some "
      "other way destructive to the patient.",
      "Therapist did not seem destructive, but had significant interpersonal problems; "
      "at times appeared unnecessarily impatient, aloof, or insincere.",
      "Therapist displayed a satisfactory degree of warmth, concern, confidence, "
      "genuineness, and professionalism.",
      "Therapist displayed optimal levels of warmth, concern, confidence, genuineness, "
      "and professionalism, appropriate for this particular patient in this session.");
}

inline std::string ctrs_collaboration() {
  return ctrs_prompt(
      "To what extent does the therapist engage the client in collaborative "
      "goal-setting and decision-making?",
      "Therapist did not attempt to set up a collaboration with the patient.",
      "Therapist attempted to collaborate with the patient but had difficulty either "
      "defining a problem the patient considered important or establishing rapport.",
      "Therapist successfully collaborated with the patient, focusing on a problem "
      "that both considered important and establishing rapport.",
      "Collaboration was outstanding; the therapist encouraged the patient to take an "
      "active role in the session (e.g., by offering choices) so they functioned as a "
      "\"team.\"");
}

inline std::string ctrs_guided_discovery() {
  return ctrs_prompt(
      "To what extent does the therapist use exploration and questioning to help the "
      "client see new perspectives and reach their own conclusions?",
      "Therapist relied primarily on debate, persuasion, or lecturing.",
      "Therapist relied too heavily on persuasion and debate rather than on guided "
      "discovery.",
      "Therapist, for the most part, helped the patient see new perspectives through "
      "guided discovery rather than through debate.",
      "Therapist was especially adept at using guided discovery during the session to "
      "explore problems and help the patient draw their own conclusions.");
}

inline std::string ctrs_key_cognitions_or_behaviors() {
  return ctrs_prompt(
      "To what extent does the therapist elicit and focus on the specific thoughts, "
      "assumptions, and behaviors most central to the client's problems?",
      "Therapist did not attempt to elicit specific thoughts, assumptions, images, "
      "meanings, or behaviors.",
      "Therapist used appropriate techniques to elicit cognitions or behaviors, but "
      "had difficulty finding a focus or focused on cognitions or behaviors irrelevant "
      "to the patient's key problems.",
      "Therapist focused on specific cognitions or behaviors relevant to the target "
      "problem.",
      "Therapist very skillfully focused on key thoughts, assumptions, images, "
      "meanings, or behaviors that were most relevant to the problem area and offered "
      "considerable promise for progress.");
}

inline std::string ctrs_strategy_for_change() {
  return ctrs_prompt(
      "To what extent does the therapist follow a coherent and promising strategy for "
      "promoting change that incorporates cognitive-behavioral techniques?",
      "Therapist did not select cognitive-behavioral techniques.",
      "Therapist selected cognitive-behavioral techniques, but the overall strategy "
      "for bringing about change either seemed vague or did not seem promising in "
      "helping the patient.",
      "Therapist seemed to have a generally coherent strategy for change that showed "
      "reasonable promise and incorporated cognitive-behavioral techniques.",
      "Therapist followed a consistent strategy for change that seemed very promising "
      "and incorporated the most appropriate cognitive-behavioral techniques.");
}

}  // namespace default_prompts

// Named template store. Starts from the embedded defaults; a prompts
// directory of <name>.txt files overrides or extends them.
class PromptLibrary {
 public:
  static PromptLibrary embedded() {
    PromptLibrary lib;
    auto put = [&](const std::string& name, std::string body) {
      lib.templates_[name] = PromptTemplate{name, std::move(body)};
    };
    put("client_base", default_prompts::kClientBase);
    put("therapist_system", default_prompts::kTherapistSystem);
    put("rapport_judge", default_prompts::kRapportJudge);
    put("exploration_judge", default_prompts::kExplorationJudge);
    put("extraction", default_prompts::kExtraction);
    put("annotation", default_prompts::kAnnotation);
    put("ctrs_understanding", default_prompts::ctrs_understanding());
    put("ctrs_interpersonal_effectiveness",
        default_prompts::ctrs_interpersonal_effectiveness());
    put("ctrs_collaboration", default_prompts::ctrs_collaboration());
    put("ctrs_guided_discovery", default_prompts::ctrs_guided_discovery());
    put("ctrs_key_cognitions_or_behaviors",
        default_prompts::ctrs_key_cognitions_or_behaviors());
    put("ctrs_strategy_for_change", default_prompts::ctrs_strategy_for_change());
    return lib;
  }

  // Embedded defaults plus overrides from dir/*.txt (template name = stem).
  static PromptLibrary load(const std::filesystem::path& dir) {
    PromptLibrary lib = embedded();
    if (!std::filesystem::is_directory(dir))
      throw ConfigError("prompt directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      std::ifstream in(file);
      if (!in) throw ConfigError("cannot read prompt file: " + file.string());
      std::ostringstream body;
      body << in.rdbuf();
      std::string text = body.str();
      // Files conventionally end with one newline the template should not carry.
      if (!text.empty() && text.back() == '\n') text.pop_back();
      const std::string name = file.stem().string();
      lib.templates_[name] = PromptTemplate{name, std::move(text)};
    }
    return lib;
  }

  const PromptTemplate& get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end())
      throw ConfigError("no prompt template named \"" + name + "\"");
    return it->second;
  }

  bool contains(const std::string& name) const { return templates_.count(name) > 0; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : templates_) out.push_back(name);
    return out;
  }

  // Writes every template to dir/<name>.txt (creating dir), so users can
  // start customizing from the shipped texts.
  void dump(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, tmpl] : templates_) {
      std::ofstream out(dir / (name + ".txt"));
      if (!out) throw ConfigError("cannot write prompt file in " + dir.string());
      out << tmpl.body << "\n";
    }
  }

 private:
  std::map<std::string, PromptTemplate> templates_;
};

}  // namespace delve
