#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <stochastize/scheme.hpp>

#include "support/generators.hpp"

namespace sz = stochastize;

namespace {

const char* kLotkaVolterra = "x -> 2x @ k_1\nx + y -> 2y @ k_2\ny -> 0 @ k_3\n";
const char* kVerhulst = "phi <-> 2phi @ lambda, gamma\nphi -> 0 @ beta\n";

std::vector<std::vector<unsigned>> initial_matrix(const sz::InteractionScheme& s) {
  std::vector<std::vector<unsigned>> out;
  for (const auto& it : s.interactions()) out.push_back(it.initial);
  return out;
}

std::vector<std::vector<unsigned>> final_matrix(const sz::InteractionScheme& s) {
  std::vector<std::vector<unsigned>> out;
  for (const auto& it : s.interactions()) out.push_back(it.final);
  return out;
}

template <class F>
sz::SyntaxError syntax_error_of(F&& f) {
  try {
    f();
  } catch (const sz::SyntaxError& e) {
    return e;
  }
  ADD_FAILURE() << "no SyntaxError raised";
  return sz::SyntaxError(0, 0, "");
}

}  // namespace

TEST(ParseSchemeTest, LotkaVolterraMatrices) {
  auto s = sz::parse_scheme("x -> 2x @ k_1\nx + y -> 2y @ k_2\ny -> 0 @ k_3");
  EXPECT_EQ(s.dimension(), 2u);
  EXPECT_EQ(s.size(), 3u);
  using M = std::vector<std::vector<unsigned>>;
  EXPECT_EQ(initial_matrix(s), (M{{1, 0}, {1, 1}, {0, 1}}));
  EXPECT_EQ(final_matrix(s), (M{{2, 0}, {0, 2}, {0, 0}}));
  EXPECT_EQ(s.species()[0], sz::species("x"));
  EXPECT_EQ(s.species()[1], sz::species("y"));
  for (const auto& it : s.interactions()) EXPECT_FALSE(it.reversible());
}

TEST(ParseSchemeTest, VerhulstMatricesAndRates) {
  auto s = sz::parse_scheme("phi <-> 2 phi @ lambda, gamma\nphi -> 0 @ beta");
  EXPECT_EQ(s.dimension(), 1u);
  EXPECT_EQ(s.size(), 2u);
  using M = std::vector<std::vector<unsigned>>;
  EXPECT_EQ(initial_matrix(s), (M{{1}, {1}}));
  EXPECT_EQ(final_matrix(s), (M{{2}, {0}}));
  EXPECT_EQ(s.interactions()[0].forward_rate, sz::rate("lambda"));
  EXPECT_EQ(s.interactions()[0].backward_rate, sz::rate("gamma"));
  EXPECT_EQ(s.interactions()[1].forward_rate, sz::rate("beta"));
  EXPECT_FALSE(s.interactions()[1].backward_rate.has_value());
  EXPECT_EQ(s.rate_symbols(),
            (std::vector<sz::SymbolId>{sz::rate("lambda"), sz::rate("beta"), sz::rate("gamma")}));
}

TEST(ParseSchemeTest, NoOpInteractionReportsLine) {
  try {
    sz::parse_scheme("x -> 2x @ a\n\nx -> x @ k\n");
    FAIL();
  } catch (const sz::NoOpInteraction& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(sz::parse_scheme("x + y -> y + x @ k"), sz::NoOpInteraction);
}

TEST(ParseSchemeTest, CommentsBlankLinesAndCrlf) {
  auto s = sz::parse_scheme("# logistic\r\n\r\nphi <-> 2*phi @ lambda, gamma  # birth\r\nphi -> 0 @ beta\r\n");
  EXPECT_EQ(s, sz::parse_scheme(kVerhulst));
}

TEST(ParseSchemeTest, CatalyticSpeciesCountedOnBothSides) {
  auto s = sz::parse_scheme("x + x + y -> 3x + y @ k");
  EXPECT_EQ(s.interactions()[0].initial, (std::vector<unsigned>{2, 1}));
  EXPECT_EQ(s.interactions()[0].final, (std::vector<unsigned>{3, 1}));
}

TEST(ParseSchemeTest, Errors) {
  EXPECT_THROW(sz::parse_scheme(""), sz::EmptyScheme);
  EXPECT_THROW(sz::parse_scheme("# only a comment\n\n"), sz::EmptyScheme);
  EXPECT_THROW(sz::parse_scheme("x -> 0 @ k\ny -> 0 @ k"), sz::DuplicateRateSymbol);
  EXPECT_NO_THROW(sz::parse_scheme("x -> 0 @ k\ny -> 0 @ k", {.allow_shared_rates = true}));
  EXPECT_THROW(sz::parse_scheme("x -> 0 @ x"), sz::SchemeError);
  EXPECT_THROW(sz::parse_scheme("65x -> 0 @ k"), sz::SyntaxError);
  EXPECT_NO_THROW(sz::parse_scheme("64x -> 0 @ k"));

  auto e = syntax_error_of([] { sz::parse_scheme("x -> 0 @ a\nx => y @ k"); });
  EXPECT_EQ(e.line(), 2u);
  EXPECT_EQ(e.position(), 2u);
  e = syntax_error_of([] { sz::parse_scheme("x <-> y @ k"); });
  EXPECT_EQ(e.line(), 1u);
  e = syntax_error_of([] { sz::parse_scheme("x -> y @ a, b"); });
  EXPECT_EQ(e.line(), 1u);
  e = syntax_error_of([] { sz::parse_scheme("x -> y"); });
  EXPECT_EQ(e.position(), 6u);
  e = syntax_error_of([] { sz::parse_scheme("x + -> y @ k"); });
  EXPECT_EQ(e.position(), 4u);
}

TEST(SchemeConstructionTest, Validation) {
  const auto x = sz::species("x");
  sz::Interaction birth{{0}, {1}, sz::rate("k"), std::nullopt};
  EXPECT_THROW(sz::InteractionScheme({x}, {}), sz::EmptyScheme);
  EXPECT_THROW(sz::InteractionScheme({}, {birth}), sz::SchemeError);
  EXPECT_THROW(sz::InteractionScheme({x, x}, {{{0, 0}, {1, 0}, sz::rate("k"), {}}}), sz::SchemeError);
  EXPECT_THROW(sz::InteractionScheme({x}, {{{0, 0}, {1, 0}, sz::rate("k"), {}}}), sz::SchemeError);
  EXPECT_THROW(sz::InteractionScheme({sz::rate("x")}, {birth}), sz::SchemeError);
  EXPECT_THROW(sz::InteractionScheme({x}, {{{0}, {1}, sz::species("k"), {}}}), sz::SchemeError);
  EXPECT_THROW(sz::InteractionScheme({x}, {{{65}, {1}, sz::rate("k"), {}}}), sz::SchemeError);
  EXPECT_NO_THROW(sz::InteractionScheme({x}, {birth}));
}

TEST(ChangeVectorsTest, Examples) {
  EXPECT_EQ(sz::change_vectors(sz::parse_scheme(kVerhulst)),
            (std::vector<sz::ChangeVector>{{1}, {-1}}));
  EXPECT_EQ(sz::change_vectors(sz::parse_scheme(kLotkaVolterra)),
            (std::vector<sz::ChangeVector>{{1, 0}, {-1, 1}, {0, -1}}));
}

TEST(FormatSchemeTest, Snapshots) {
  EXPECT_EQ(sz::format_scheme(sz::parse_scheme(kLotkaVolterra)), kLotkaVolterra);
  EXPECT_EQ(sz::format_scheme(sz::parse_scheme("phi <-> 2 phi @ lambda, gamma\nphi -> 0 @ beta")),
            "phi <-> 2phi @ lambda, gamma\nphi -> 0 @ beta\n");
  EXPECT_EQ(sz::format_scheme(sz::parse_scheme("0 -> x @ k")), "0 -> x @ k\n");
}

TEST(SchemeJsonTest, RoundTrip) {
  auto s = sz::parse_scheme(kVerhulst);
  auto j = sz::scheme_to_json(s);
  EXPECT_EQ(j["species"], nlohmann::ordered_json::array({"phi"}));
  EXPECT_TRUE(j["interactions"][1]["backward_rate"].is_null());
  EXPECT_EQ(j["interactions"][0]["backward_rate"], "gamma");
  EXPECT_EQ(sz::scheme_from_json(j), s);
  EXPECT_EQ(sz::scheme_from_json(nlohmann::json::parse(j.dump())), s);
  EXPECT_THROW(sz::scheme_from_json(nlohmann::json::parse(R"({"species": ["x"]})")), sz::SchemeError);
}

// Properties over random schemes.

TEST(SchemeProperties, FormatThenParseIsIdentity) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    auto s = sz::testing::random_scheme(rng, 4, 5, 3);
    const std::string text = sz::format_scheme(s);
    auto back = sz::parse_scheme(text);
    EXPECT_EQ(back, s) << text;
    EXPECT_EQ(sz::parse_scheme(text).species(), back.species());
    EXPECT_EQ(sz::scheme_from_json(sz::scheme_to_json(s)), s);
  }
}

TEST(SchemeProperties, ChangeVectorsRelateComplexes) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    auto s = sz::testing::random_scheme(rng, 4, 5, 3);
    auto r = sz::change_vectors(s);
    ASSERT_EQ(r.size(), s.size());
    for (std::size_t a = 0; a < s.size(); ++a) {
      const auto& it = s.interactions()[a];
      bool nonzero = false;
      for (std::size_t i = 0; i < s.dimension(); ++i) {
        EXPECT_EQ(static_cast<long>(it.initial[i]) + r[a][i], static_cast<long>(it.final[i]));
        nonzero |= r[a][i] != 0;
      }
      EXPECT_TRUE(nonzero);
    }
  }
}
