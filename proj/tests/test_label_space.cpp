#include <gtest/gtest.h>

#include "presort/error.hpp"
#include "presort/label_space.hpp"

using namespace presort;

TEST(LabelSpace, CanonicalizesAliasesAndCase) {
  EXPECT_EQ(canonical_label("  Chimpanzee "), "chimpanzee");
  EXPECT_EQ(canonical_label("BKGD"), "background");
  EXPECT_EQ(canonical_label("noise"), "background");
}

TEST(LabelSpace, BinaryHasBackgroundFirst) {
  const auto b = LabelSpace::binary();
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b.name(0), "background");
  EXPECT_EQ(b.name(1), "primate");
}

TEST(LabelSpace, FromLabelsOrdersBackgroundThenSorted) {
  const auto s = LabelSpace::from_labels({"redcap", "noise", "chimpanzee", "redcap", "Mandrill"});
  EXPECT_EQ(s.names(), (std::vector<std::string>{"background", "chimpanzee", "mandrill", "redcap"}));
  EXPECT_TRUE(s.has_background());
  EXPECT_EQ(s.index_of("Redcap"), 3u);
}

TEST(LabelSpace, RejectsDuplicatesAndBadNames) {
  EXPECT_THROW(LabelSpace({"a", "A"}), Error);
  EXPECT_THROW(LabelSpace({"has space"}), Error);
  EXPECT_THROW(LabelSpace({""}), Error);
}

TEST(LabelSpace, UnknownLabelIsNamed) {
  const LabelSpace s({"background", "guenon"});
  try {
    s.index_of("gorilla");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("gorilla"), std::string::npos);
  }
  EXPECT_FALSE(s.contains("gorilla"));
}
