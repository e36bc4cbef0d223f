#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "collapse_lab/io.hpp"
#include "collapse_lab/random.hpp"

using namespace collapse_lab;

TEST(FormatReal, SeventeenDigitsRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, -0.0, 5e-324}) {
    const auto text = io::format_real(v);
    EXPECT_EQ(io::parse_real(text), v) << text;
  }
  EXPECT_EQ(io::format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(io::format_real(std::nan("")), "nan");
  EXPECT_EQ(io::format_real(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_TRUE(std::isnan(io::parse_real("nan")));
}

TEST(ParseReal, RejectsGarbage) {
  EXPECT_THROW(io::parse_real(""), std::invalid_argument);
  EXPECT_THROW(io::parse_real("1.5x"), std::invalid_argument);
  EXPECT_THROW(io::parse_real("1e999"), std::invalid_argument);
}

TEST(SplitCsvLine, KeepsEmptyFields) {
  const auto f = io::split_csv_line("a,,b,");
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[1], "");
  EXPECT_EQ(f[3], "");
}

TEST(Streams, IndependentAndReproducible) {
  auto a = make_stream(1, 0), b = make_stream(1, 0), c = make_stream(1, 1), d = make_stream(2, 0);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
  EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafULL);
}
