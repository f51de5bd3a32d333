#include <doctest.h>

#include <string>

#include "tasep/lattice.hpp"
#include "tasep/state_set.hpp"

using namespace tasep;

namespace {

// Independent string-level transition map for TASEP and ASEP.
std::string reference_hop(std::string s, int k) {
  const int n = static_cast<int>(s.size());
  auto at = [&](int site) -> char& { return s[static_cast<std::size_t>(site - 1)]; };
  if (k == 0) {
    at(1) = '1';
  } else if (k == n) {
    at(n) = '0';
  } else if (k > 0) {
    if (at(k) == '1' && at(k + 1) == '0') {
      at(k) = '0';
      at(k + 1) = '1';
    }
  } else if (k == -(n + 1)) {
    at(n) = '1';
  } else {
    const int m = -k;
    if (at(m + 1) == '1' && at(m) == '0') {
      at(m + 1) = '0';
      at(m) = '1';
    }
  }
  return s;
}

std::string literal(std::uint64_t code, int n) {
  std::string s;
  for (int i = n - 1; i >= 0; --i) s += ((code >> i) & 1) ? '1' : '0';
  return s;
}

}  // namespace

TEST_CASE("hop examples") {
  CHECK(hop(LatticeState::parse("000"), SiteIndex(0)).to_string() == "100");
  CHECK(hop(LatticeState::parse("100"), SiteIndex(0)).to_string() == "100");
  CHECK(hop(LatticeState::parse("101"), SiteIndex(3)).to_string() == "100");
  CHECK(hop(LatticeState::parse("110"), SiteIndex(2)).to_string() == "101");
  CHECK(hop(LatticeState::parse("110"), SiteIndex(1)).to_string() == "110");
  CHECK(hop(LatticeState::parse("1"), SiteIndex(1)).to_string() == "0");
  CHECK(hop(LatticeState::parse("0"), SiteIndex(0)).to_string() == "1");
}

TEST_CASE("hop rejects indices outside the alphabet") {
  const LatticeState x = LatticeState::parse("010");
  CHECK_THROWS_AS(hop(x, SiteIndex(4)), Error);
  CHECK_THROWS_AS(hop(x, SiteIndex(-1)), Error);
  CHECK_THROWS_AS(hop(x, SiteIndex(-3), Model::asep), Error);  // no left exit
  CHECK_THROWS_AS(hop(x, SiteIndex(-5), Model::asep), Error);
  try {
    hop(x, SiteIndex(7));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::index_out_of_range);
  }
}

TEST_CASE("asep moves") {
  CHECK(hop(LatticeState::parse("010"), SiteIndex(-1), Model::asep).to_string() == "100");
  CHECK(hop(LatticeState::parse("001"), SiteIndex(-2), Model::asep).to_string() == "010");
  CHECK(hop(LatticeState::parse("011"), SiteIndex(-2), Model::asep).to_string() == "011");
  CHECK(hop(LatticeState::parse("000"), SiteIndex(-4), Model::asep).to_string() == "001");
  CHECK(is_valid_index(1, SiteIndex(-2), Model::asep));
  CHECK_FALSE(is_valid_index(1, SiteIndex(-1), Model::asep));
}

TEST_CASE("hop agrees with the string oracle for every state and index, n <= 7") {
  for (int n = 1; n <= 7; ++n) {
    for (std::uint64_t code = 0; code < (1ULL << n); ++code) {
      const std::string s = literal(code, n);
      for (int k = -(n + 1); k <= n; ++k) {
        if (!is_valid_index(n, SiteIndex(k), Model::asep)) continue;
        const Model m = k < 0 ? Model::asep : Model::tasep;
        const std::string want = reference_hop(s, k);
        REQUIRE(hop(LatticeState::parse(s), SiteIndex(k), m).to_string() == want);
        REQUIRE(literal(hop_code(code, n, k), n) == want);
      }
    }
  }
}

TEST_CASE("hop is monotone, exhaustively for n <= 6") {
  for (int n = 1; n <= 6; ++n) {
    const std::uint64_t states = 1ULL << n;
    for (std::uint64_t a = 0; a < states; ++a) {
      for (std::uint64_t b = 0; b < states; ++b) {
        if ((a & ~b) != 0) continue;  // need a <= b
        for (int k = -(n + 1); k <= n; ++k) {
          if (!is_valid_index(n, SiteIndex(k), Model::asep)) continue;
          const std::uint64_t fa = hop_code(a, n, k);
          const std::uint64_t fb = hop_code(b, n, k);
          REQUIRE((fa & ~fb) == 0);
        }
      }
    }
  }
}

TEST_CASE("hop_in_place reports changes") {
  LatticeState x = LatticeState::parse("10");
  CHECK(hop_in_place(x.sites(), 1));
  CHECK(x.to_string() == "01");
  CHECK_FALSE(hop_in_place(x.sites(), 1));
}

TEST_CASE("state index round trip, n <= 10") {
  CHECK(state_index(LatticeState::parse("100")) == 4);
  CHECK(state_index(LatticeState::parse("001")) == 1);
  for (int n = 1; n <= 10; ++n) {
    for (std::uint64_t code = 0; code < (1ULL << n); ++code) {
      REQUIRE(state_index(index_state(code, n)) == code);
      REQUIRE(index_state(code, n).to_string() == literal(code, n));
    }
  }
  CHECK_THROWS_AS(index_state(8, 3), Error);
  CHECK_THROWS_AS(state_index(LatticeState(63)), Error);
}

TEST_CASE("state basics") {
  const LatticeState x = LatticeState::parse("1011");
  CHECK(x.size() == 4);
  CHECK(x.particles() == 3);
  CHECK(x.occupied(1));
  CHECK_FALSE(x.occupied(2));
  CHECK(LatticeState::parse("0011").leq(x));
  CHECK_FALSE(x.leq(LatticeState::parse("0111")));
  CHECK(LatticeState::empty(3) == LatticeState::parse("000"));
  CHECK(LatticeState::full(3) == LatticeState::parse("111"));
  CHECK_THROWS_AS(LatticeState::parse("10a"), Error);
  CHECK_THROWS_AS(LatticeState::parse(""), Error);
  CHECK_THROWS_AS(LatticeState(0), Error);
  CHECK_THROWS_AS(LatticeState(kMaxSites + 1), Error);
}

TEST_CASE("rate validation") {
  CHECK_NOTHROW(RateConfig::tasep(4, 1.0, 0.5, 1.0).validate());
  CHECK_THROWS_AS(RateConfig::tasep(4, -1.0, 0.5).validate(), Error);
  RateConfig bad = RateConfig::tasep(4, 1.0, 1.0);
  bad.interior.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
  RateConfig asep = RateConfig::asep_uniform(3, 1.0, 1.0, 1.0, 0.5, 0.2);
  CHECK_NOTHROW(asep.validate());
  asep.asep->left_rates[0] = 0.3;  // a left exit
  CHECK_THROWS_AS(asep.validate(), Error);
}

TEST_CASE("state sets") {
  const StateSet s(8, {5, 1, 5, 3});
  CHECK(s.size() == 3);
  CHECK(s.contains(3));
  CHECK_FALSE(s.contains(2));
  CHECK(s.subset_of(StateSet::full(8)));
  CHECK_FALSE(StateSet::full(8).subset_of(s));
  CHECK_THROWS_AS(StateSet(4, {4}), Error);
  CHECK(all_states(3).size() == 8);
  CHECK_THROWS_AS(all_states(21), Error);
  const auto members = lattice_members(StateSet(8, {0, 7}), 3);
  REQUIRE(members.size() == 2);
  CHECK(members[1].to_string() == "111");
}
