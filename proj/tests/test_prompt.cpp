#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tqre/harness/prompt.hpp"

using namespace tqre;
using namespace tqre::harness;

namespace {

const std::vector<GameSpec>& lib() {
  static const auto l = builtin_library();
  return l;
}

const GameSpec& game(std::string_view id) { return *find_game(lib(), id); }

Persona reference_persona() {
  using F = PersonaField;
  Persona p;
  p.set(F::AgeBand, "25-34")
      .set(F::Gender, "female")
      .set(F::Education, "bachelor")
      .set(F::MaritalStatus, "married")
      .set(F::LivingArea, "urban")
      .set(F::SexualOrientation, "heterosexual")
      .set(F::Disability, "able-bodied")
      .set(F::Race, "Asian")
      .set(F::Religion, "Christian")
      .set(F::PoliticalAffiliation, "lifelong Democrat");
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const std::filesystem::path golden_root = std::filesystem::path(TQRE_TEST_DATA_DIR) / "prompts";

constexpr std::string_view kRisk =
    "Consider the risk preferences and decision-making processes of a person with these characteristics.";

}  // namespace

TEST(Prompt, EveryCombinationMatchesGoldenFile) {
  int checked = 0;
  for (const auto& g : lib())
    for (Role r : g.legal_roles())
      for (Variant v : {Variant::Vanilla, Variant::Cot, Variant::Persona, Variant::PersonaCot}) {
        const auto path = golden_root / g.id / std::string(to_string(r)) / (std::string(to_string(v)) + ".txt");
        ASSERT_TRUE(std::filesystem::exists(path)) << path;
        EXPECT_EQ(build_prompt({g, r, v, reference_persona()}), slurp(path)) << path;
        ++checked;
      }
  EXPECT_EQ(checked, 108);
}

TEST(Prompt, VanillaCompetitiveRow) {
  const auto text = build_prompt({game("competitive/base"), Role::Row, Variant::Vanilla, {}});
  EXPECT_EQ(text.rfind("You are an assistant who helps to make a choice in a game.", 0), 0u);
  EXPECT_NE(text.find("Assume the matrix is [[(10, -10), (0, 5), (-5, 8)], [(-10, 10), (5, 0), (8, -5)], "
                      "[(0, 0), (5, -5), (-5, 5)]]\n"),
            std::string::npos);
  EXPECT_TRUE(text.ends_with("do not include any thinking process."));
}

TEST(Prompt, BayesianCarriesBothMatrices) {
  const auto text = build_prompt({game("bayesian/p0.5"), Role::Row, Variant::Vanilla, {}});
  EXPECT_NE(text.find("With a 50 percent chance, you will be facing Matrix: [[(10, 10), (5, 2)], [(7, 5), (3, 3)]]."),
            std::string::npos);
  EXPECT_NE(text.find("With a 50 percent chance, you will be facing Matrix: [[(8, 8), (6, 3)], [(5, 4), (2, 2)]]."),
            std::string::npos);
}

TEST(Prompt, CotClosingReplacesInstruction) {
  const auto text = build_prompt({game("sw10/base"), Role::Column, Variant::Cot, {}});
  EXPECT_EQ(text.find("do not include any thinking process"), std::string::npos);
  EXPECT_TRUE(text.ends_with("Explain your reasoning step by step and then provide only the column number you picked "
                             "as the final answer."));
}

TEST(Prompt, PersonaVariantsPrependPreamble) {
  const auto p = reference_persona();
  const auto plain = build_prompt({game("stag-hunt/base"), Role::Row, Variant::Vanilla, p});
  const auto with = build_prompt({game("stag-hunt/base"), Role::Row, Variant::Persona, p});
  EXPECT_EQ(with, build_persona_preamble(p) + "\n" + plain);
  // An empty persona leaves the prompt unchanged.
  EXPECT_EQ(build_prompt({game("stag-hunt/base"), Role::Row, Variant::Persona, {}}), plain);
}

TEST(Prompt, Deterministic) {
  const PromptSpec s{game("signaling/base"), Role::Column, Variant::PersonaCot, reference_persona()};
  EXPECT_EQ(build_prompt(s), build_prompt(s));
}

TEST(Prompt, SequentialResponderIsNotPrompted) {
  EXPECT_THROW(build_prompt({game("sequential/base"), Role::Column, Variant::Vanilla, {}}), RoleUnsupported);
}

TEST(Prompt, NonIntegerPayoffsKeepTheirDecimals) {
  EXPECT_EQ(render_matrix(PayoffMatrix{{{1.5, -2}, {0.25, 3}}}), "[[(1.5, -2), (0.25, 3)]]");
}

TEST(PersonaPreamble, FullTemplate) {
  EXPECT_EQ(build_persona_preamble(reference_persona()),
            "Imagine a 25-34 year old female with a bachelor degree, who is married and lives in a urban area. "
            "This individual identifies as heterosexual and is able-bodied, of Asian descent, adheres to Christian "
            "beliefs, and supports lifelong Democrat policies. " +
                std::string(kRisk));
}

TEST(PersonaPreamble, EmptyPersonaIsEmpty) { EXPECT_EQ(build_persona_preamble({}), ""); }

TEST(PersonaPreamble, GenderOnly) {
  Persona p;
  p.set(PersonaField::Gender, "female");
  EXPECT_EQ(build_persona_preamble(p), "Imagine a female. " + std::string(kRisk));
}

TEST(PersonaPreamble, OmitsAbsentClauses) {
  using F = PersonaField;
  Persona p;
  p.set(F::AgeBand, "65+").set(F::LivingArea, "rural").set(F::Race, "Hispanic").set(F::Religion, "Atheist");
  EXPECT_EQ(build_persona_preamble(p),
            "Imagine a 65+ year old person, who lives in a rural area. "
            "This individual is of Hispanic descent and adheres to Atheist beliefs. " +
                std::string(kRisk));
  Persona q;
  q.set(F::PoliticalAffiliation, "Donald Trump supporter");
  EXPECT_EQ(build_persona_preamble(q),
            "This individual supports Donald Trump supporter policies. " + std::string(kRisk));
}

TEST(PersonaPreamble, EveryOptionAccepted) {
  for (auto f : kPersonaFields)
    for (const auto& v : field_options(f)) {
      Persona p;
      p.set(f, v);
      const auto text = build_persona_preamble(p);
      EXPECT_NE(text.find(v), std::string::npos) << v;
      EXPECT_TRUE(text.ends_with(kRisk));
    }
}

TEST(PersonaPreamble, RejectsUnknownValues) {
  Persona p;
  p.set(PersonaField::Gender, "robot");
  EXPECT_FALSE(p.violations().empty());
  EXPECT_THROW(build_persona_preamble(p), DomainError);
}

TEST(Variant, RoundTripsNames) {
  for (Variant v : {Variant::Vanilla, Variant::Cot, Variant::Persona, Variant::PersonaCot})
    EXPECT_EQ(variant_from_string(to_string(v)), v);
  EXPECT_THROW(variant_from_string("fancy"), DomainError);
}
