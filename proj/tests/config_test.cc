// Copyright 2026 The vqlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vqlab/config.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

namespace vqlab {
namespace {

TEST(KeyValueConfigTest, ParsesSectionsCommentsAndWhitespace) {
  const KeyValueConfig cfg = KeyValueConfig::ParseString(
      "# header\n"
      "top = 1\n"
      "\n"
      "[model]\n"
      "  codebook_size = 64  \n"
      "[corpus]\n"
      "seed=7\n");
  EXPECT_EQ(cfg.GetInt("", "top", 0), 1);
  EXPECT_EQ(cfg.GetInt("model", "codebook_size", 0), 64);
  EXPECT_EQ(cfg.GetUint("corpus", "seed", 0), 7u);
  EXPECT_EQ(cfg.GetDouble("corpus", "missing", 2.5), 2.5);
  EXPECT_EQ(cfg.SectionNames(), (std::vector<std::string>{"", "model", "corpus"}));
}

TEST(KeyValueConfigTest, RejectsMalformedInput) {
  EXPECT_THROW(KeyValueConfig::ParseString("[model\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::ParseString("novalue\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::ParseString("=3\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::ParseString("[a]\nk=1\nk=2\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::ParseString("[a]\n[a]\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::Load("/nonexistent/vqlab.cfg"), ConfigError);
}

TEST(KeyValueConfigTest, TypedGettersRejectBadValues) {
  const KeyValueConfig cfg = KeyValueConfig::ParseString("[s]\ni=1.5\nu=-3\nd=abc\nb=maybe\n");
  EXPECT_THROW(cfg.GetInt("s", "i", 0), ConfigError);
  EXPECT_THROW(cfg.GetUint("s", "u", 0), ConfigError);
  EXPECT_THROW(cfg.GetDouble("s", "d", 0.0), ConfigError);
  EXPECT_THROW(cfg.GetBool("s", "b", false), ConfigError);
  EXPECT_THROW(cfg.GetSection("missing"), ConfigError);
}

TEST(KeyValueConfigTest, WriteParseRoundTrip) {
  KeyValueConfig cfg;
  cfg.Set("model", "beta", "0.25");
  cfg.Set("corpus", "seed", "3");
  cfg.Set("model", "beta", "0.5");
  const KeyValueConfig back = KeyValueConfig::ParseString(cfg.ToString());
  EXPECT_EQ(back, cfg);
  EXPECT_EQ(back.GetString("model", "beta", ""), "0.5");
}

TEST(ParseTest, Scalars) {
  EXPECT_EQ(ParseInt("-12", "x"), -12);
  EXPECT_THROW(ParseInt("", "x"), ConfigError);
  EXPECT_THROW(ParseInt("3x", "x"), ConfigError);
  EXPECT_TRUE(std::isinf(ParseDouble("inf", "x")));
  EXPECT_THROW(ParseDouble("nan", "x"), ConfigError);
  EXPECT_THROW(ParseDouble("1e999", "x"), ConfigError);
  EXPECT_TRUE(ParseBool("yes", "x"));
  EXPECT_FALSE(ParseBool("0", "x"));
}

TEST(FormatDoubleTest, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 0.0}) {
    EXPECT_EQ(ParseDouble(FormatDouble(v), "v"), v);
  }
  EXPECT_EQ(FormatDouble(0.25), "0.25");
  EXPECT_EQ(FormatDouble(std::numeric_limits<double>::infinity()), "inf");
}

}  // namespace
}  // namespace vqlab
