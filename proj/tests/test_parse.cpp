#include <gtest/gtest.h>

#include "tqre/harness/parse.hpp"

using namespace tqre::harness;

TEST(ParseChoice, BareDigit) {
  const auto r = parse_choice("2", 3);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r.action, 2);
}

TEST(ParseChoice, AnchoredAnswerInProse) {
  EXPECT_EQ(*parse_choice("I analyze... therefore I pick row 0.", 3).action, 0);
  EXPECT_EQ(*parse_choice("Column 2 gives me the most, so: Column 1 it is? No. Final: column 2", 3).action, 2);
}

TEST(ParseChoice, AnchoredBeatsLaterLooseIntegers) {
  EXPECT_EQ(*parse_choice("I choose row 1 because it pays 2 in 0 cases", 3).action, 1);
}

TEST(ParseChoice, LastAnchoredWins) {
  const auto text =
      "Row 0 and Row 2 tie on expected payoff.\nRow 1 is dominated.\nTherefore, I would choose Row 0.";
  EXPECT_EQ(*parse_choice(text, 3).action, 0);
}

TEST(ParseChoice, BareLineAfterReasoning) {
  EXPECT_EQ(*parse_choice("Step 1: consider row 2 payoffs.\nStep 2: compare.\n\n**1**", 3).action, 1);
  EXPECT_EQ(*parse_choice("Reasoning...\nFinal answer: 0", 2).action, 0);
}

TEST(ParseChoice, FallsBackToLastLooseInteger) {
  EXPECT_EQ(*parse_choice("My pick: option 1, not 7", 3).action, 1);
}

TEST(ParseChoice, IgnoresGluedNumbers) {
  EXPECT_FALSE(parse_choice("x2 and 1.5 and 2nd", 3).ok());
  EXPECT_EQ(parse_choice("0Retry", 3).failure, ParseFailure::NoInteger);
  EXPECT_EQ(*parse_choice("I would choose Row 0.\n0Retry", 3).action, 0);
}

TEST(ParseChoice, RefusalClassified) {
  const auto r = parse_choice("I cannot help with that.", 3);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.failure, ParseFailure::RefusalPhrase);
}

TEST(ParseChoice, OutOfRangeClassified) {
  const auto r = parse_choice("row 5", 3);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.failure, ParseFailure::OutOfRange);
  EXPECT_EQ(parse_choice("-1", 3).failure, ParseFailure::OutOfRange);
}

TEST(ParseChoice, NoIntegerClassified) {
  const auto r = parse_choice("the top one", 3);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.failure, ParseFailure::NoInteger);
  EXPECT_EQ(parse_choice("", 3).failure, ParseFailure::NoInteger);
}

TEST(ParseChoice, HugeNumbersAreOutOfRange) {
  EXPECT_EQ(parse_choice("99999999999999999999999", 3).failure, ParseFailure::OutOfRange);
}

TEST(ParseChoice, ParsedActionAlwaysInRange) {
  for (const char* text : {"1", "row 2", "col 1", "5 4 3 2 1 0", "choose 9 then 1", "Column number: 2", "2\n7"})
    for (int n : {2, 3}) {
      const auto r = parse_choice(text, n);
      if (r.ok()) {
        EXPECT_GE(*r.action, 0) << text;
        EXPECT_LT(*r.action, n) << text;
      }
    }
}
