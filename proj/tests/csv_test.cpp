#include <gtest/gtest.h>

#include "revsent/csv.hpp"
#include "revsent/random.hpp"

namespace revsent::csv {
namespace {

TEST(Csv, ParsesQuotedFieldsWithCommasQuotesAndNewlines) {
  const auto rows = parse("a,b,c\n\"x, y\",\"say \"\"hi\"\"\",\"two\nlines\"\r\nlast,,\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].fields, (Row{"x, y", "say \"hi\"", "two\nlines"}));
  EXPECT_EQ(rows[2].fields, (Row{"last", "", ""}));
  EXPECT_EQ(rows[2].line, 4u);
}

TEST(Csv, SkipsBlankLinesAndHandlesMissingFinalNewline) {
  const auto rows = parse("h\n\nv1\nv2");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].fields, (Row{"v2"}));
}

TEST(Csv, UnterminatedQuoteIsAnError) { EXPECT_THROW(parse("a\n\"open,1\n"), DataError); }

TEST(Csv, WriteThenParseIsIdentityOnRandomFields) {
  Rng rng(7);
  const std::string alphabet = "ab ,\"\n\r;x";
  std::vector<Row> rows;
  for (int r = 0; r < 200; ++r) {
    Row row;
    for (int c = 0; c < 4; ++c) {
      std::string f;
      const auto len = rng.uniform_index(6);
      for (std::size_t i = 0; i < len; ++i) f += alphabet[rng.uniform_index(alphabet.size())];
      row.push_back(f);
    }
    // A lone empty single field would read back as a blank line.
    row[0] = "k" + row[0];
    rows.push_back(row);
  }
  const auto parsed = parse(write({"a", "b", "c", "d"}, rows));
  ASSERT_EQ(parsed.size(), rows.size() + 1);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(parsed[i + 1].fields, rows[i]) << "row " << i;
}

}  // namespace
}  // namespace revsent::csv
