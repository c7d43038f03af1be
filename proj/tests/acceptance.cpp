// Standalone shipping gate. Runs one check per release criterion and prints
// a [PASS]/[FAIL] line for each; exits nonzero if any criterion fails.
//
//   acceptance                 run every offline criterion
//   acceptance --write-golden  regenerate the golden transcripts and exit
//
// The golden transcript directory comes from DELVE_TEST_GOLDEN_DIR.

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <delve/delve.hpp>
#include <delve/fixtures.hpp>

using namespace delve;

namespace {

int g_failures = 0;

struct CheckFailure {
  std::string message;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw CheckFailure{message};
}

void criterion(const std::string& name, const std::function<void()>& body) {
  try {
    body();
    std::cout << "[PASS] " << name << "\n";
  } catch (const CheckFailure& f) {
    ++g_failures;
    std::cout << "[FAIL] " << name << " — " << f.message << "\n";
  } catch (const std::exception& e) {
    ++g_failures;
    std::cout << "[FAIL] " << name << " — unexpected exception: " << e.what() << "\n";
  }
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("delve-acceptance-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Round-half-up percentage to 2 decimals, derived independently of the
// library: scale the exact rational count/total into hundredths of a
// percent, then round the remainder.
double oracle_pct(std::int64_t count, std::int64_t total) {
  const std::int64_t scaled = count * 10000;
  std::int64_t base = scaled / total;
  if (2 * (scaled % total) >= total) ++base;
  return static_cast<double>(base) / 100.0;
}

// A structurally valid profile with distinctive marker texts, so that
// information-hiding scans cannot false-negative on generic words.
ClientProfile make_profile(const std::string& name) {
  ClientProfile p;
  p.name = name;
  p.trait_descriptors = {"guarded", "self-critical"};
  p.openness = TraitLevel::low;
  p.metacognition = TraitLevel::high;
  p.intake.age = 29;
  p.intake.job = "archivist";
  p.intake.reason_for_counseling = "persistent dread before every workday";
  p.diagram.internal = {
      {ElementKind::relevant_history, "ACCEPT-RH raised by a relentlessly critical father",
       MaskState::unmasked},
      {ElementKind::core_belief, "ACCEPT-CB I am fundamentally inadequate",
       MaskState::unmasked},
      {ElementKind::intermediate_belief,
       "ACCEPT-IB if I ever relax my guard, everything collapses", MaskState::unmasked},
      {ElementKind::coping_strategy, "ACCEPT-CS triple-checking every email before sending",
       MaskState::unmasked},
  };
  for (int i = 1; i <= kExperienceCount; ++i) {
    ExperienceBundle b;
    b.index = i;
    const std::string tag = "ACCEPT-X" + std::to_string(i);
    b.situation = {ElementKind::situation, tag + " the quarterly review meeting",
                   MaskState::unmasked};
    b.automatic_thought = {ElementKind::automatic_thought,
                           tag + " they have finally noticed I am a fraud",
                           MaskState::unmasked};
    b.emotion = {ElementKind::emotion, tag + " cold spreading panic", MaskState::unmasked};
    b.behavior = {ElementKind::behavior, tag + " rewriting the report overnight",
                  MaskState::unmasked};
    p.diagram.external.push_back(std::move(b));
  }
  return p;
}

std::vector<std::string> diagram_texts(const CognitiveDiagram& g) {
  std::vector<std::string> out;
  for (const auto& e : g.internal) out.push_back(e.text);
  for (const auto& b : g.external) {
    out.push_back(b.situation.text);
    out.push_back(b.automatic_thought.text);
    out.push_back(b.emotion.text);
    out.push_back(b.behavior.text);
  }
  return out;
}

// --- criterion bodies -------------------------------------------------------------

void check_mask_machine() {
  std::mt19937 rng(20260816);
  const ClientProfile profile = make_profile("Masker");
  int sequences = 0;
  for (; sequences < 10000; ++sequences) {
    const int initial = static_cast<int>(rng() % 4);  // 0..3 bundles open at start
    DifficultyPreset preset{"prop", initial, 1, 1};
    CognitiveDiagram g = initialize_mask(profile, preset);
    require(g.accessible_count() == initial, "initial accessibility mismatch");
    require(g.internal_all(MaskState::masked), "internal must start hidden");

    const int ops = static_cast<int>(rng() % 12);
    for (int op = 0; op < ops; ++op) {
      const CognitiveDiagram before = g;
      const bool external_op = rng() % 2 == 0;
      g = external_op ? unmask_next_external(std::move(g)) : unmask_internal(std::move(g));

      // Monotonicity: nothing ever re-masks.
      for (std::size_t i = 0; i < g.internal.size(); ++i)
        require(!(before.internal[i].mask == MaskState::unmasked &&
                  g.internal[i].mask == MaskState::masked),
                "internal element re-masked");
      for (std::size_t i = 0; i < g.external.size(); ++i)
        require(!(before.external[i].unmasked() && !g.external[i].unmasked()),
                "bundle re-masked");

      // Atomicity: a bundle's four constituents always share one state.
      for (const auto& b : g.external) {
        const MaskState m = b.situation.mask;
        require(b.automatic_thought.mask == m && b.emotion.mask == m &&
                    b.behavior.mask == m,
                "bundle with mixed constituent masks");
      }

      // Disclosure order: the open bundles always form a prefix of 1..3.
      bool seen_masked = false;
      for (const auto& b : g.external) {
        if (!b.unmasked()) seen_masked = true;
        else require(!seen_masked, "bundle opened out of order");
      }
      require(g.accessible_count() <= kExperienceCount, "external cap exceeded");

      // All-or-nothing internal disclosure.
      require(g.internal_all(MaskState::masked) || g.internal_all(MaskState::unmasked),
              "internal partially revealed");

      // Full exposure is exactly the conjunction of the two scopes.
      const ExposureStatus s = exposure_status(g);
      require(s.full_revealed == (s.external_revealed && s.internal_revealed),
              "full-exposure flag is not the conjunction");
      require(s.external_revealed == (g.accessible_count() == kExperienceCount),
              "external-exposure flag wrong");
    }
  }
  require(sequences == 10000, "sequence count");
}

void check_schedule() {
  const ClientProfile profile = make_profile("Scheduler");
  const PromptLibrary prompts = PromptLibrary::embedded();
  for (int k = 1; k <= 5; ++k) {
    for (int l = 1; l <= 5; ++l) {
      for (int turns = 1; turns <= 30; ++turns) {
        std::vector<std::string> therapist_lines(
            static_cast<std::size_t>(turns),
            "Tell me more about how that week unfolded.");
        std::vector<std::string> client_lines(
            static_cast<std::size_t>(turns), "It was one long blur of deadlines.");
        std::vector<std::string> judge_lines;
        for (int t = 1; t <= turns; ++t) {
          if (t % k == 0) judge_lines.push_back("Rating: 3\nSteady but shallow.");
          if (t % l == 0)
            judge_lines.push_back("[Rating]: 3\n[Justification]: Plateaued.");
        }
        ScriptedChatBackend therapist(therapist_lines);
        ScriptedChatBackend client(client_lines);
        ScriptedChatBackend judge(judge_lines);
        SessionConfig config =
            make_session_config(DifficultyPreset{"sched", 3, l, k}, prompts);
        config.max_turns = turns;

        const SessionRecord record =
            run_session(profile, therapist, client, judge, config);
        int rapport = 0, exploration = 0, unmasks = 0;
        for (const auto& e : record.events) {
          if (e.kind == SessionEventKind::rapport_check) ++rapport;
          if (e.kind == SessionEventKind::exploration_check) ++exploration;
          if (e.kind == SessionEventKind::unmask_external ||
              e.kind == SessionEventKind::unmask_internal)
            ++unmasks;
        }
        std::ostringstream at;
        at << " at k=" << k << " l=" << l << " T=" << turns;
        require(rapport == turns / k, "rapport check count" + at.str());
        require(exploration == turns / l, "exploration check count" + at.str());
        require(unmasks == 0, "failing scores must not unmask" + at.str());
        require(record.termination == Termination::max_turns,
                "expected the turn cap" + at.str());
        require(judge.remaining() == 0, "judge lines left over" + at.str());
      }
    }
  }
}

void check_traces(const std::filesystem::path& golden_dir) {
  // Hand-derived expectations, asserted structurally first.
  const SessionRecord easy = fixtures::run_fixture(fixtures::easy_pass());
  bool internal_at_one = false;
  for (const auto& e : easy.events)
    if (e.kind == SessionEventKind::unmask_internal && e.turn_index == 1)
      internal_at_one = true;
  require(internal_at_one, "easy fixture: internal must open on the first exchange");
  require(easy.events.front().kind == SessionEventKind::exploration_check &&
              easy.events.front().payload.at("score") == 5,
          "easy fixture: first check is a top-scored exploration pass");
  require(easy.termination == Termination::farewell, "easy fixture termination");
  require(exposure_status(easy.final_diagram).full_revealed,
          "easy fixture must end fully revealed");

  const SessionRecord hard = fixtures::run_fixture(fixtures::hard_stonewall());
  for (const auto& e : hard.events)
    require(e.kind != SessionEventKind::unmask_external &&
                e.kind != SessionEventKind::unmask_internal,
            "stonewall fixture must never unmask");
  require(hard.termination == Termination::max_turns, "stonewall termination");
  require(completed_turns(hard.transcript) == 15, "stonewall runs the full 15 turns");
  require(!exposure_status(hard.final_diagram).external_revealed &&
              !exposure_status(hard.final_diagram).internal_revealed,
          "stonewall exposure flags");

  // Byte-exact comparison against the checked-in transcripts.
  TempDir tmp;
  const auto easy_path = tmp.path / "easy_pass.jsonl";
  const auto hard_path = tmp.path / "hard_stonewall.jsonl";
  persist_record(easy, easy_path.string());
  persist_record(hard, hard_path.string());
  for (const char* name : {"easy_pass.jsonl", "hard_stonewall.jsonl"}) {
    const auto golden = golden_dir / name;
    require(std::filesystem::exists(golden),
            "missing golden transcript " + golden.string() +
                " (regenerate with --write-golden)");
    require(slurp(tmp.path / name) == slurp(golden),
            std::string("transcript drifted from golden ") + name);
  }
}

void check_cder_oracle() {
  std::mt19937 rng(424242);
  const ClientProfile profile = make_profile("Counter");
  SessionRecord base;
  base.profile = profile;
  base.termination = Termination::max_turns;

  for (int batch = 0; batch < 1000; ++batch) {
    const int n = 1 + static_cast<int>(rng() % 40);
    std::vector<SessionRecord> records;
    records.reserve(static_cast<std::size_t>(n));
    std::int64_t want_external = 0, want_internal = 0, want_full = 0;
    for (int i = 0; i < n; ++i) {
      SessionRecord r = base;
      r.final_diagram = profile.diagram;
      for (auto& b : r.final_diagram.external)
        b.set_mask(rng() % 2 ? MaskState::unmasked : MaskState::masked);
      for (auto& e : r.final_diagram.internal)
        e.mask = rng() % 2 ? MaskState::unmasked : MaskState::masked;

      // Independent recount straight off the element masks.
      bool ext = true;
      for (const auto& b : r.final_diagram.external)
        ext = ext && b.situation.mask == MaskState::unmasked &&
              b.automatic_thought.mask == MaskState::unmasked &&
              b.emotion.mask == MaskState::unmasked &&
              b.behavior.mask == MaskState::unmasked;
      bool inter = true;
      for (const auto& e : r.final_diagram.internal)
        inter = inter && e.mask == MaskState::unmasked;
      want_external += ext ? 1 : 0;
      want_internal += inter ? 1 : 0;
      want_full += (ext && inter) ? 1 : 0;
      records.push_back(std::move(r));
    }

    const double got_external = compute_cder(records, DisclosureScope::external);
    const double got_internal = compute_cder(records, DisclosureScope::internal);
    const double got_full = compute_cder(records, DisclosureScope::full);
    require(got_external == oracle_pct(want_external, n), "external rate recount");
    require(got_internal == oracle_pct(want_internal, n), "internal rate recount");
    require(got_full == oracle_pct(want_full, n), "full rate recount");
    require(got_full <= std::min(got_external, got_internal) + 1e-12,
            "full rate exceeded a per-scope rate");
  }
}

void check_idss_oracle() {
  const ClientProfile profile = make_profile("Matcher");
  const std::string truth_rh = profile.diagram.internal_of(ElementKind::relevant_history)[0]->text;
  const std::string truth_cb = profile.diagram.internal_of(ElementKind::core_belief)[0]->text;
  const std::string truth_ib =
      profile.diagram.internal_of(ElementKind::intermediate_belief)[0]->text;
  const std::string truth_cs = profile.diagram.internal_of(ElementKind::coping_strategy)[0]->text;
  FixedEmbeddingBackend embedder(
      64, {{truth_rh, "holds himself to a punishing standard learned young", 0.90},
           {truth_cb, "believes at bottom that he is not good enough", 0.90},
           {truth_ib, "assumes any lapse in vigilance ends in disaster", 0.90},
           {truth_cs, "compulsively re-verifies his work", 0.90}});

  SessionRecord base;
  base.profile = profile;
  base.final_diagram = profile.diagram;

  auto full_extraction = [&]() {
    ExtractedDiagram x;
    x.relevant_history = "holds himself to a punishing standard learned young";
    x.core_belief = "believes at bottom that he is not good enough";
    x.intermediate_belief = "assumes any lapse in vigilance ends in disaster";
    x.coping_strategy = "compulsively re-verifies his work";
    return x;
  };

  // 48 of 49 sessions recover the core belief.
  {
    std::vector<SessionRecord> records(49, base);
    std::vector<IdssEntry> entries;
    for (int i = 0; i < 49; ++i) {
      IdssEntry e;
      e.record = &records[static_cast<std::size_t>(i)];
      ExtractedDiagram x = full_extraction();
      if (i == 7) x.core_belief = "wants a better desk chair";  // unrelated text
      e.extraction = x;
      entries.push_back(std::move(e));
    }
    const IdssResult result = compute_idss(entries, embedder, 0.85);
    require(result.by_kind.at(ElementKind::core_belief) == 97.96,
            "48-of-49 must round to 97.96");
    require(result.by_kind.at(ElementKind::relevant_history) == 100.0,
            "uncontested kind must score 100");
    require(result.session_count == 49 && result.excluded == 0, "49-session bookkeeping");
  }

  // 3 of 11 sessions recover the core belief.
  {
    std::vector<SessionRecord> records(11, base);
    std::vector<IdssEntry> entries;
    for (int i = 0; i < 11; ++i) {
      IdssEntry e;
      e.record = &records[static_cast<std::size_t>(i)];
      ExtractedDiagram x = full_extraction();
      if (i >= 3) x.core_belief = "mostly talks about the weather";
      e.extraction = x;
      entries.push_back(std::move(e));
    }
    const IdssResult result = compute_idss(entries, embedder, 0.85);
    require(result.by_kind.at(ElementKind::core_belief) == 27.27,
            "3-of-11 must round to 27.27");
  }

  // Randomized batches against an independent per-session recount.
  std::mt19937 rng(777);
  auto my_cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };
  const std::map<ElementKind, std::string> matching = {
      {ElementKind::relevant_history, "holds himself to a punishing standard learned young"},
      {ElementKind::core_belief, "believes at bottom that he is not good enough"},
      {ElementKind::intermediate_belief, "assumes any lapse in vigilance ends in disaster"},
      {ElementKind::coping_strategy, "compulsively re-verifies his work"},
  };
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 20);
    std::vector<SessionRecord> records(static_cast<std::size_t>(n), base);
    std::vector<IdssEntry> entries;
    int included = 0;
    for (int i = 0; i < n; ++i) {
      IdssEntry e;
      e.record = &records[static_cast<std::size_t>(i)];
      if (rng() % 5 == 0) {
        e.extraction_error = "extractor offline";
      } else {
        ExtractedDiagram x;
        auto choose = [&](ElementKind kind) -> std::optional<std::string> {
          switch (rng() % 3) {
            case 0: return matching.at(kind);
            case 1: return "a prediction that resembles nothing on file";
            default: return std::nullopt;  // extractor answered NONE
          }
        };
        x.relevant_history = choose(ElementKind::relevant_history);
        x.core_belief = choose(ElementKind::core_belief);
        x.intermediate_belief = choose(ElementKind::intermediate_belief);
        x.coping_strategy = choose(ElementKind::coping_strategy);
        e.extraction = x;
        ++included;
      }
      entries.push_back(std::move(e));
    }
    if (included == 0) continue;

    const IdssResult got = compute_idss(entries, embedder, 0.85);
    std::map<ElementKind, std::int64_t> matches;
    std::int64_t match_sum = 0;
    for (ElementKind kind : kInternalKinds) matches[kind] = 0;
    for (const auto& e : entries) {
      if (!e.extraction) continue;
      for (ElementKind kind : kInternalKinds) {
        const std::optional<std::string>& predicted = e.extraction->by_kind(kind);
        if (!predicted) continue;
        double best = -2.0;
        for (const CognitiveElement* truth : e.record->profile.diagram.internal_of(kind))
          best = std::max(best, my_cosine(embedder.embed(truth->text),
                                          embedder.embed(*predicted)));
        if (best >= 0.85) {
          ++matches[kind];
          ++match_sum;
        }
      }
    }
    for (ElementKind kind : kInternalKinds)
      require(got.by_kind.at(kind) == oracle_pct(matches[kind], included),
              std::string("per-kind recount diverged for ") + kind_name(kind));
    require(got.average == oracle_pct(match_sum, 4LL * included), "average recount");
    require(got.session_count == included && got.excluded == n - included,
            "inclusion bookkeeping");
  }
}

void check_cosine() {
  std::mt19937 rng(31337);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t dim = 2 + rng() % 15;
    std::vector<double> a(dim), b(dim);
    double na = 0, nb = 0;
    for (std::size_t d = 0; d < dim; ++d) {
      a[d] = coord(rng);
      b[d] = coord(rng);
      na += a[d] * a[d];
      nb += b[d] * b[d];
    }
    if (na == 0.0 || nb == 0.0) continue;

    const double ab = cosine(a, b);
    require(std::abs(ab) <= 1.0 + 1e-9, "cosine out of bounds");
    require(ab == cosine(b, a), "cosine asymmetric");

    std::vector<double> a_scaled(dim), b_scaled(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      a_scaled[d] = 4.0 * a[d];   // power-of-two scales keep the arithmetic exact
      b_scaled[d] = 0.25 * b[d];
    }
    require(std::abs(cosine(a_scaled, b_scaled) - ab) <= 1e-9,
            "cosine not scale-invariant");
  }
  const double diagonal = cosine({1.0, 0.0}, {1.0, 1.0});
  require(std::abs(diagonal - 1.0 / std::sqrt(2.0)) <= 1e-12,
          "axis-vs-diagonal cosine must be 1/sqrt(2)");
}

void check_verdict_parser() {
  for (int score = kScoreMin; score <= kScoreMax; ++score) {
    const VerdictScore original{score, "The turn surfaced a new pattern."};
    for (VerdictStyle style : {VerdictStyle::rapport, VerdictStyle::exploration})
      require(parse_verdict(format_verdict(original, style)) == original,
              "format/parse round trip lost the verdict");

    std::ostringstream plain;
    plain << "Rating: " << score << "\nThe alliance held steady.";
    require(parse_verdict(plain.str()).value == score, "plain-label parse");

    std::ostringstream bracketed;
    bracketed << "[Rating]: " << score
              << "\n[Justification]: The turn surfaced a new pattern.";
    const VerdictScore v = parse_verdict(bracketed.str());
    require(v.value == score, "bracketed-label parse");
    require(v.justification == "The turn surfaced a new pattern.",
            "justification extraction");
  }

  std::mt19937 rng(90210);
  const std::string alphabet =
      "Rating:[]ustifcno 0123456789\n\t!@#$%^&*()abcdefghijklmnopqrstuvwxyz-+.";
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const std::size_t len = rng() % 40;
    for (std::size_t c = 0; c < len; ++c) s += alphabet[rng() % alphabet.size()];
    try {
      const VerdictScore v = parse_verdict(s);
      require(v.value >= kScoreMin && v.value <= kScoreMax,
              "fuzz produced an out-of-range score");
    } catch (const ParseError&) {
      // rejected input: the acceptable failure mode
    }
  }
}

void check_information_hiding() {
  const PromptLibrary prompts = PromptLibrary::embedded();
  for (const fixtures::ScriptedSession& fx :
       {fixtures::easy_pass(), fixtures::hard_stonewall()}) {
    auto therapist = std::make_shared<RecordingChatBackend>(
        std::make_shared<ScriptedChatBackend>(fx.therapist_lines));
    auto client = std::make_shared<RecordingChatBackend>(
        std::make_shared<ScriptedChatBackend>(fx.client_lines));
    ScriptedChatBackend judge(fx.judge_lines);
    const SessionConfig config = make_session_config(fx.preset, prompts);
    const SessionRecord record =
        run_session(fx.profile, *therapist, *client, judge, config);

    // The therapist's request log must never contain any diagram text at
    // all: disclosures only ever reach it as client speech. One-word texts
    // (the emotion labels) are skipped — they also occur in ordinary intake
    // prose, so their absence cannot be asserted by substring scan.
    std::vector<std::string> scan_texts;
    for (const std::string& text : diagram_texts(fx.profile.diagram))
      if (text.find(' ') != std::string::npos) scan_texts.push_back(text);
    require(scan_texts.size() >= 12, "fixture texts too generic to scan");
    for (const auto& call : therapist->calls())
      for (const auto& message : call.messages)
        for (const auto& text : scan_texts)
          require(message.content.find(text) == std::string::npos,
                  "diagram text leaked into a therapist-bound message (" + fx.label +
                      ")");

    // The client's prompt at turn t must contain exactly the texts that the
    // event fold says were visible at that point, and none that were masked.
    const auto& calls = client->calls();
    for (std::size_t i = 0; i < calls.size(); ++i) {
      const int turn = static_cast<int>(i) + 1;
      std::vector<SessionEvent> prior;
      for (const auto& e : record.events)
        if (e.turn_index < turn &&
            (e.kind == SessionEventKind::unmask_external ||
             e.kind == SessionEventKind::unmask_internal))
          prior.push_back(e);
      const CognitiveDiagram visible =
          fold_events(fx.profile, fx.preset, prior);
      const std::string& system = calls[i].messages.front().content;

      // Visible texts must be present verbatim. Masked texts must be absent,
      // but that direction is only assertable for multi-word texts: one-word
      // labels also occur inside other legitimately rendered prose.
      const auto check_element = [&](const CognitiveElement& e, bool visible_now,
                                     const char* what) {
        const bool found = system.find(e.text) != std::string::npos;
        if (visible_now)
          require(found, std::string("client prompt is missing a visible ") +
                             what + " (" + fx.label + ", turn " +
                             std::to_string(turn) + ")");
        else if (e.text.find(' ') != std::string::npos)
          require(!found, std::string("client prompt shows a masked ") + what +
                              " (" + fx.label + ", turn " +
                              std::to_string(turn) + ")");
      };
      for (const auto& e : visible.internal)
        check_element(e, e.mask == MaskState::unmasked, "internal element");
      for (const auto& b : visible.external)
        for (const CognitiveElement* e :
             {&b.situation, &b.automatic_thought, &b.emotion, &b.behavior})
          check_element(*e, b.unmasked(), "bundle element");
    }
  }
}

void check_persistence() {
  std::mt19937 rng(5150);
  const PromptLibrary prompts = PromptLibrary::embedded();
  const std::vector<std::string> words = {
      "ledger",   "harbor",  "quiet \"quoted\" phrase", "tab\tstop",
      "new\nline", "émigré",  "backslash \\ path",       "semicolon;comma,",
  };
  auto random_text = [&](const std::string& prefix) {
    std::string out = prefix;
    const int extra = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < extra; ++i) out += " " + words[rng() % words.size()];
    return out;
  };

  TempDir tmp;
  for (int i = 0; i < 100; ++i) {
    // Random but schema-valid profile: internal elements stay grouped by
    // kind, bundles keep indices 1..3.
    ClientProfile profile = make_profile("Fixture" + std::to_string(i));
    profile.openness = rng() % 2 ? TraitLevel::high : TraitLevel::low;
    profile.metacognition = rng() % 2 ? TraitLevel::high : TraitLevel::low;
    if (rng() % 2) profile.intake.age.reset();
    if (rng() % 2) profile.intake.job.reset();
    profile.intake.reason_for_counseling = random_text("reason");
    CognitiveDiagram rebuilt;
    for (ElementKind kind : kInternalKinds) {
      const int copies = 1 + static_cast<int>(rng() % 2);
      for (int c = 0; c < copies; ++c)
        rebuilt.internal.push_back(
            {kind, random_text(std::string(kind_name(kind)) + std::to_string(c)),
             MaskState::unmasked});
    }
    rebuilt.external = profile.diagram.external;
    for (auto& b : rebuilt.external) {
      b.situation.text = random_text("situation");
      b.automatic_thought.text = random_text("thought");
      b.emotion.text = random_text("emotion");
      b.behavior.text = random_text("behavior");
    }
    profile.diagram = std::move(rebuilt);

    const DifficultyPreset preset =
        std::vector<DifficultyPreset>{easy_preset(), normal_preset(),
                                      hard_preset()}[rng() % 3];
    SessionRecord record;
    record.profile_ref = "fixture-" + std::to_string(i);
    record.profile = profile;
    record.config = make_session_config(preset, prompts);
    record.config.max_turns = 1 + static_cast<int>(rng() % 20);
    record.config.seed = rng();

    const int turns = 1 + static_cast<int>(rng() % 6);
    std::int64_t ts = rng() % 2 ? 1 : 1700000000000LL;
    CognitiveDiagram state = initialize_mask(profile, preset);
    for (int t = 1; t <= turns; ++t) {
      record.transcript.push_back({t, Speaker::therapist, random_text("asks"), ts++});
      record.transcript.push_back({t, Speaker::client, random_text("replies"), ts++});
      if (rng() % 2) {
        const bool passed = rng() % 2 == 0;
        record.events.push_back(
            {t,
             rng() % 2 ? SessionEventKind::rapport_check
                       : SessionEventKind::exploration_check,
             {{"score", static_cast<int>(1 + rng() % 5)},
              {"justification", random_text("because")},
              {"raw", random_text("Rating: 4")},
              {"passed", passed}}});
      }
      if (rng() % 3 == 0 && state.accessible_count() < kExperienceCount) {
        state = unmask_next_external(std::move(state));
        record.events.push_back({t,
                                 SessionEventKind::unmask_external,
                                 {{"bundle", state.accessible_count()}}});
      }
      if (rng() % 4 == 0 && state.internal_all(MaskState::masked)) {
        state = unmask_internal(std::move(state));
        record.events.push_back(
            {t, SessionEventKind::unmask_internal, nlohmann::json::object()});
      }
      if (rng() % 6 == 0)
        record.events.push_back({t,
                                 SessionEventKind::check_skipped,
                                 {{"check", rng() % 2 ? "rapport" : "exploration"},
                                  {"reason", random_text("judge failed")}}});
    }
    const std::vector<Termination> ends = {Termination::farewell,
                                           Termination::client_done,
                                           Termination::max_turns};
    record.termination = ends[rng() % ends.size()];
    record.events.push_back({turns,
                             SessionEventKind::termination,
                             {{"reason", termination_name(record.termination)}}});
    record.final_diagram = state;
    require(fold_events(record.profile, preset, record.events) == state,
            "generator produced an inconsistent fold");

    const auto first_path = tmp.path / ("round-" + std::to_string(i) + "-a.jsonl");
    const auto second_path = tmp.path / ("round-" + std::to_string(i) + "-b.jsonl");
    persist_record(record, first_path.string());
    const SessionRecord loaded = load_record(first_path.string());
    require(loaded == record, "record changed across persist/load");
    require(fold_events(loaded.profile, loaded.config.preset, loaded.events) ==
                loaded.final_diagram,
            "event fold disagrees with the stored final state");
    persist_record(loaded, second_path.string());
    require(slurp(first_path) == slurp(second_path),
            "re-persisting a loaded record changed the bytes");
  }
}

void check_batch_determinism() {
  // Each transcript header records its own output path, so byte comparison
  // needs both runs to target the same directory: run serial, capture the
  // bytes, then overwrite with a wide run and compare in place.
  TempDir tmp;
  fixtures::seed_fixtures(tmp.path.string());
  ExperimentConfig serial =
      load_experiment_config((tmp.path / "config.json").string());
  serial.parallelism = 1;
  const BatchSummary first = run_batch(serial);
  require(first.ok, "scripted batch failed at parallelism 1");

  const std::filesystem::path out = serial.output_dir;
  std::map<std::string, std::string> baseline;
  baseline["report.json"] = slurp(out / "report.json");
  for (const char* name : {"alex__easy__s001.jsonl", "grace__easy__s001.jsonl"})
    baseline[name] = slurp(out / "sessions" / name);

  ExperimentConfig wide = load_experiment_config((tmp.path / "config.json").string());
  wide.parallelism = 8;
  require(wide.output_dir == serial.output_dir,
          "reloaded config resolved a different output directory");
  const BatchSummary second = run_batch(wide);
  require(second.ok, "scripted batch failed at parallelism 8");

  require(slurp(out / "report.json") == baseline["report.json"],
          "reports differ across parallelism");
  for (const char* name : {"alex__easy__s001.jsonl", "grace__easy__s001.jsonl"})
    require(slurp(out / "sessions" / name) == baseline[name],
            std::string("transcript differs across parallelism: ") + name);
}

void check_live_smoke() {
  const char* config_path = std::getenv("DELVE_LIVE_SMOKE_CONFIG");
  if (config_path == nullptr || std::string(config_path).empty()) {
    std::cout << "       (skipped: DELVE_LIVE_SMOKE_CONFIG is not set; "
                 "offline run)\n";
    return;
  }
  TempDir tmp;
  ExperimentConfig config = load_experiment_config(config_path);
  config.presets = {"easy"};
  config.sessions_per_cell = 1;
  config.output_dir = (tmp.path / "out").string();
  const BatchSummary summary = run_batch(config);
  require(summary.ok, "live session did not complete cleanly");
  require(summary.sessions_run >= 1, "no live session ran");
}

void write_golden(const std::filesystem::path& golden_dir) {
  std::filesystem::create_directories(golden_dir);
  persist_record(fixtures::run_fixture(fixtures::easy_pass()),
                 (golden_dir / "easy_pass.jsonl").string());
  persist_record(fixtures::run_fixture(fixtures::hard_stonewall()),
                 (golden_dir / "hard_stonewall.jsonl").string());
  std::cout << "golden transcripts written to " << golden_dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
#ifndef DELVE_TEST_GOLDEN_DIR
#error "DELVE_TEST_GOLDEN_DIR must point at the golden transcript directory"
#endif
  const std::filesystem::path golden_dir = DELVE_TEST_GOLDEN_DIR;
  if (argc > 1 && std::string(argv[1]) == "--write-golden") {
    write_golden(golden_dir);
    return 0;
  }

  criterion("mask transitions stay monotone, atomic, ordered, and capped "
            "across 10000 random sequences",
            check_mask_machine);
  criterion("rapport and exploration checks fire exactly every k-th and l-th "
            "turn for all intervals 1..5 over 1..30 turns",
            check_schedule);
  criterion("scripted fixture sessions reproduce their hand-derived traces "
            "byte-for-byte",
            [&] { check_traces(golden_dir); });
  criterion("disclosure rates equal an independent recount on 1000 random "
            "batches and full never exceeds either scope",
            check_cder_oracle);
  criterion("semantic-match rates equal an independent recount, including the "
            "97.96 and 27.27 boundary batches",
            check_idss_oracle);
  criterion("cosine similarity is bounded, symmetric, and scale-invariant on "
            "10000 random pairs",
            check_cosine);
  criterion("judge verdicts round-trip for every score in both reply styles "
            "and survive 10000-string fuzzing",
            check_verdict_parser);
  criterion("no hidden diagram text reaches the therapist and client prompts "
            "track the event fold exactly",
            check_information_hiding);
  criterion("100 randomized session records survive persist/load untouched "
            "with consistent event folds",
            check_persistence);
  criterion("scripted batches are byte-identical at parallelism 1 and 8",
            check_batch_determinism);
  criterion("a live remote session completes end to end when configured",
            check_live_smoke);

  if (g_failures == 0) {
    std::cout << "acceptance: all criteria passed\n";
    return 0;
  }
  std::cout << "acceptance: " << g_failures << " criterion(s) failed\n";
  return 1;
}
