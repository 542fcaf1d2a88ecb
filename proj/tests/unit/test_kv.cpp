#include <gtest/gtest.h>

#include "dadnn/errors.hpp"
#include "dadnn/kv.hpp"

using namespace dadnn;

TEST(KeyValues, ParsesCommentsListsAndOverrides) {
  const auto kv = KeyValues::parse("# header\n a = 1 \n\nlist = 1, 2,3\nx = 0.5\na = 2\nflag = true\n");
  EXPECT_EQ(kv.get_int("a", 0), 2);
  EXPECT_EQ(kv.get_size_list("list", {}), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(kv.get_double("x", 0), 0.5);
  EXPECT_TRUE(kv.get_bool("flag", false));
  EXPECT_EQ(kv.get_string("missing", "dflt"), "dflt");
  EXPECT_THROW(kv.require("missing"), ConfigError);
}

TEST(KeyValues, ErrorsCarrySourceLine) {
  try {
    KeyValues::parse("a = 1\nno equals sign\n", "spec.kv");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("spec.kv:2"), std::string::npos) << e.what();
  }
  const auto kv = KeyValues::parse("n = -3\nd = abc\nb = maybe\n");
  EXPECT_THROW(kv.get_size("n", 0), ConfigError);
  EXPECT_THROW(kv.get_double("d", 0), ConfigError);
  EXPECT_THROW(kv.get_bool("b", false), ConfigError);
}

TEST(KeyValues, DumpRoundTripsDoublesExactly) {
  KeyValues kv;
  kv.set("pi", 3.141592653589793);
  kv.set("tiny", 1e-300);
  kv.set("n", std::int64_t{42});
  kv.set("on", true);
  kv.set_list("w", std::vector<double>{0.1, 0.2});
  const auto back = KeyValues::parse(kv.dump());
  EXPECT_EQ(back.get_double("pi", 0), 3.141592653589793);
  EXPECT_EQ(back.get_double("tiny", 0), 1e-300);
  EXPECT_EQ(back.get_double_list("w", {}), (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(back.dump(), kv.dump());
}
