#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>

#include <delve/fixtures.hpp>
#include <delve/persona.hpp>

using namespace delve;

TEST_CASE("persona documents load with every field in place") {
  const ClientProfile alex = fixtures::alex_profile();
  CHECK(alex.name == "Alex");
  CHECK(alex.trait_descriptors == std::vector<std::string>{"hostile", "guarded"});
  CHECK(alex.openness == TraitLevel::low);
  CHECK(alex.metacognition == TraitLevel::low);
  REQUIRE(alex.intake.age.has_value());
  CHECK(*alex.intake.age == 34);
  REQUIRE(alex.intake.job.has_value());
  CHECK(*alex.intake.job == "warehouse stocker");
  CHECK(alex.intake.reason_for_counseling.find("rehabilitation") != std::string::npos);

  CHECK(alex.diagram.internal.size() == 4);
  CHECK(alex.diagram.external.size() == 3);
  CHECK(alex.diagram.internal_of(ElementKind::core_belief).size() == 1);
  CHECK(alex.diagram.internal_of(ElementKind::core_belief).front()->text ==
        "I am out of control.");
  CHECK(alex.diagram.external[0].index == 1);
  CHECK(alex.diagram.external[2].index == 3);
}

TEST_CASE("profile serialization round-trips") {
  const ClientProfile alex = fixtures::alex_profile();
  const ClientProfile again = load_profile(profile_to_json(alex));
  CHECK(again == alex);

  const ClientProfile grace = fixtures::grace_profile();
  CHECK(load_profile(profile_to_json(grace)) == grace);
}

TEST_CASE("persona documents reject structural problems") {
  nlohmann::json good = fixtures::alex_persona_json();

  SECTION("not an object") {
    CHECK_THROWS_AS(load_profile(nlohmann::json::array()), ParseError);
    CHECK_THROWS_AS(load_profile(std::string("not json at all {")), ParseError);
  }
  SECTION("missing name") {
    good.erase("name");
    CHECK_THROWS_AS(load_profile(good), ParseError);
  }
  SECTION("bad trait level") {
    good["openness"] = "medium";
    CHECK_THROWS_AS(load_profile(good), ParseError);
  }
  SECTION("missing internal block") {
    good.erase("internal");
    CHECK_THROWS_AS(load_profile(good), SchemaError);
  }
  SECTION("wrong experience count") {
    good["experiences"].erase(2);
    CHECK_THROWS_AS(load_profile(good), SchemaError);
  }
  SECTION("empty internal kind") {
    good["internal"]["core_beliefs"] = nlohmann::json::array();
    CHECK_THROWS_AS(load_profile(good), SchemaError);
  }
  SECTION("missing experience field") {
    good["experiences"][1].erase("emotion");
    CHECK_THROWS_AS(load_profile(good), ParseError);
  }
}

TEST_CASE("the mask token is banned from persona text, as a whole word only") {
  nlohmann::json doc = fixtures::alex_persona_json();

  SECTION("verbatim word is rejected wherever it appears") {
    doc["internal"]["core_beliefs"][0] = "My future is unknown.";
    CHECK_THROWS_AS(load_profile(doc), SchemaError);
  }
  SECTION("case variants are rejected") {
    doc["experiences"][0]["situation"] = "An Unknown caller kept phoning.";
    CHECK_THROWS_AS(load_profile(doc), SchemaError);
  }
  SECTION("words merely containing the token pass") {
    doc["experiences"][0]["situation"] =
        "He unknowingly signed up for the unknowns of a new job.";
    CHECK_NOTHROW(load_profile(doc));
  }
}

TEST_CASE("difficulty presets carry the published knob settings") {
  CHECK(easy_preset().initial_accessible == 3);
  CHECK(easy_preset().exploration_interval == 1);
  CHECK(easy_preset().rapport_interval == 4);

  CHECK(normal_preset().initial_accessible == 2);
  CHECK(normal_preset().exploration_interval == 2);
  CHECK(normal_preset().rapport_interval == 4);

  CHECK(hard_preset().initial_accessible == 1);
  CHECK(hard_preset().exploration_interval == 3);
  CHECK(hard_preset().rapport_interval == 4);

  CHECK(preset_by_label("easy").label == "easy");
  CHECK(preset_by_label("normal").label == "normal");
  CHECK(preset_by_label("hard").label == "hard");
  CHECK_THROWS_AS(preset_by_label("nightmare"), ConfigError);
}

TEST_CASE("initial masking hides the internal model and caps the bundles") {
  const ClientProfile alex = fixtures::alex_profile();

  const CognitiveDiagram easy = initialize_mask(alex, easy_preset());
  CHECK(easy.internal_all(MaskState::masked));
  CHECK(easy.accessible_count() == 3);

  const CognitiveDiagram normal = initialize_mask(alex, normal_preset());
  CHECK(normal.accessible_count() == 2);
  CHECK(normal.external[0].unmasked());
  CHECK(normal.external[1].unmasked());
  CHECK_FALSE(normal.external[2].unmasked());

  const CognitiveDiagram hard = initialize_mask(alex, hard_preset());
  CHECK(hard.accessible_count() == 1);
  CHECK(hard.external[0].unmasked());
  CHECK_FALSE(hard.external[1].unmasked());
}

TEST_CASE("external disclosure follows bundle order and saturates") {
  const ClientProfile alex = fixtures::alex_profile();
  CognitiveDiagram g = initialize_mask(alex, hard_preset());

  g = unmask_next_external(std::move(g));
  CHECK(g.accessible_count() == 2);
  CHECK(g.external[1].unmasked());
  CHECK_FALSE(g.external[2].unmasked());

  g = unmask_next_external(std::move(g));
  CHECK(g.accessible_count() == 3);

  const CognitiveDiagram saturated = unmask_next_external(g);
  CHECK(saturated == g);
}

TEST_CASE("internal disclosure is all-or-nothing and idempotent") {
  const ClientProfile alex = fixtures::alex_profile();
  CognitiveDiagram g = initialize_mask(alex, easy_preset());
  CHECK(g.internal_all(MaskState::masked));

  g = unmask_internal(std::move(g));
  CHECK(g.internal_all(MaskState::unmasked));

  const CognitiveDiagram again = unmask_internal(g);
  CHECK(again == g);
}

TEST_CASE("masking is one-way across the exposed transitions") {
  // Neither transition function can re-mask: applying any sequence of
  // them never lowers accessible_count or re-hides internals.
  const ClientProfile alex = fixtures::alex_profile();
  CognitiveDiagram g = initialize_mask(alex, normal_preset());
  int accessible = g.accessible_count();
  bool internal_open = g.internal_all(MaskState::unmasked);
  for (int step = 0; step < 12; ++step) {
    g = (step % 2 == 0) ? unmask_next_external(std::move(g))
                        : unmask_internal(std::move(g));
    CHECK(g.accessible_count() >= accessible);
    accessible = g.accessible_count();
    const bool now_open = g.internal_all(MaskState::unmasked);
    CHECK((now_open || !internal_open));
    internal_open = now_open;
  }
  CHECK(accessible == 3);
  CHECK(internal_open);
}

TEST_CASE("exposure status tracks both dimensions") {
  const ClientProfile alex = fixtures::alex_profile();

  CognitiveDiagram g = initialize_mask(alex, hard_preset());
  CHECK(exposure_status(g) == ExposureStatus{false, false, false});

  g = unmask_internal(std::move(g));
  CHECK(exposure_status(g) == ExposureStatus{false, true, false});

  g = unmask_next_external(std::move(g));
  g = unmask_next_external(std::move(g));
  CHECK(exposure_status(g) == ExposureStatus{true, true, true});
}

TEST_CASE("the accessible rendering masks exactly the hidden fields") {
  const ClientProfile alex = fixtures::alex_profile();

  SECTION("fully masked view") {
    const CognitiveDiagram g = initialize_mask(alex, hard_preset());
    const std::string text = render_accessible(alex, g);
    CHECK(text.find("CASE SYNOPSIS") == 0);
    CHECK(text.find("Name: Alex") != std::string::npos);
    CHECK(text.find("Type: hostile, guarded") != std::string::npos);
    CHECK(text.find("  Openness: low") != std::string::npos);
    CHECK(text.find("  Metacognition: low") != std::string::npos);
    CHECK(text.find("Core Beliefs: unknown") != std::string::npos);
    CHECK(text.find("I am out of control.") == std::string::npos);
    // Bundle 1 is disclosed; bundles 2 and 3 collapse to the token.
    CHECK(text.find("PREVIOUS EXPERIENCE 1\nSituation: Alex's cousin") !=
          std::string::npos);
    CHECK(text.find("PREVIOUS EXPERIENCE 2\nSituation: unknown\nReactions: unknown") !=
          std::string::npos);
    CHECK(text.find("PREVIOUS EXPERIENCE 3\nSituation: unknown\nReactions: unknown") !=
          std::string::npos);
  }

  SECTION("fully revealed view leaks nothing as masked") {
    CognitiveDiagram g = initialize_mask(alex, easy_preset());
    g = unmask_internal(std::move(g));
    const std::string text = render_accessible(alex, g);
    CHECK(text.find("unknown") == std::string::npos);
    CHECK(text.find("Core Beliefs: I am out of control.") != std::string::npos);
    CHECK(text.find("Relevant Histories: The patient has a history of substance "
                    "abuse") != std::string::npos);
    CHECK(text.find("Automatic Thought: Everyone there will be watching for me to "
                    "slip up.") != std::string::npos);
  }
}

TEST_CASE("diagram validation rejects malformed shapes") {
  ClientProfile alex = fixtures::alex_profile();

  SECTION("well-formed passes") { CHECK_NOTHROW(validate_diagram(alex.diagram)); }
  SECTION("wrong bundle indices") {
    alex.diagram.external[1].index = 7;
    CHECK_THROWS_AS(validate_diagram(alex.diagram), SchemaError);
  }
  SECTION("missing internal kind") {
    auto& internal = alex.diagram.internal;
    internal.erase(std::remove_if(internal.begin(), internal.end(),
                                  [](const CognitiveElement& e) {
                                    return e.kind == ElementKind::coping_strategy;
                                  }),
                   internal.end());
    CHECK_THROWS_AS(validate_diagram(alex.diagram), SchemaError);
  }
  SECTION("external kind stored in the internal list") {
    alex.diagram.internal.push_back(
        {ElementKind::emotion, "Misplaced feeling", MaskState::masked});
    CHECK_THROWS_AS(validate_diagram(alex.diagram), SchemaError);
  }
  SECTION("empty element text") {
    alex.diagram.internal[0].text = "";
    CHECK_THROWS_AS(validate_diagram(alex.diagram), SchemaError);
  }
}
