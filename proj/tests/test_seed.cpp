#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "edgy/seed.hpp"

using namespace edgy;

TEST_CASE("seed line parsing") {
    auto t = parse_seed_line(
        R"({"dst":"2a03:4980:2b6:9624:8643:b70f:adae:4f40","hops":[null,null,null,null,)"
        R"("2001:7f8:1::a502:4904:1","2a03:4980::6:0:2","2a03:4980::b:0:5",null,null]})",
        1);
    REQUIRE(t.hops.size() == 9);
    REQUIRE(t.last_responsive_hop().has_value());
    CHECK(format_address(*t.last_responsive_hop()) == "2a03:4980::b:0:5");
    CHECK(t.last_responsive_ttl() == 7);

    auto empty = parse_seed_line(R"({"dst":"::1","hops":[]})", 2);
    CHECK_FALSE(empty.last_responsive_hop().has_value());
    CHECK(empty.last_responsive_ttl() == 0);
}

TEST_CASE("seed file parsing and errors") {
    std::istringstream in(
        "{\"dst\":\"2001:db8::1\",\"hops\":[\"2001:db8::2\"]}\n"
        "\n"
        "{\"dst\":\"2001:db8::3\",\"hops\":[null]}\n");
    auto traces = parse_seed_file(in);
    CHECK(traces.size() == 2);

    std::istringstream bad("{\"dst\":\"2001:db8::1\",\"hops\":[\"2001:db8::2\"]}\nnot json\n");
    try {
        parse_seed_file(bad);
        FAIL("expected SeedParseError");
    } catch (const SeedParseError& e) {
        CHECK(e.line == 2);
    }

    std::istringstream badaddr(R"({"dst":"zz","hops":[]})");
    CHECK_THROWS_WITH_AS(parse_seed_file(badaddr), doctest::Contains("dst"), SeedParseError);

    std::istringstream badhop(R"({"dst":"::1","hops":["::2", 5]})");
    CHECK_THROWS_WITH_AS(parse_seed_file(badhop), doctest::Contains("hops[1]"), SeedParseError);
}

namespace {

SeedTrace make_trace(const std::string& dst, const std::string& lh) {
    SeedTrace t;
    t.dst = parse_address(dst);
    t.hops = {parse_address(lh)};
    return t;
}

// O(n^2)-style hash-join reference for discover_init
std::set<Prefix> discover_oracle(const std::vector<SeedTrace>& traces) {
    struct Pair {
        Address128 lh;
        Prefix dst48;
    };
    std::vector<Pair> pairs;
    for (const auto& t : traces)
        if (auto lh = t.last_responsive_hop()) pairs.push_back({*lh, subnet_id(t.dst, 48)});
    std::set<Prefix> out;
    for (const auto& p : pairs) {
        bool unique = true;
        for (const auto& q : pairs)
            if (q.lh == p.lh && q.dst48 != p.dst48) unique = false;
        if (unique) out.insert(p.dst48);
    }
    return out;
}

} // namespace

TEST_CASE("discover_init basics") {
    auto a1 = make_trace("aaaa:1:1::1", "2001:db8::10"); // LH x from A
    auto a2 = make_trace("bbbb:2:2::1", "2001:db8::10"); // LH x from B too
    auto a3 = make_trace("cccc:3:3::1", "2001:db8::20"); // LH y unique to C

    auto cands = discover_init({a1, a2, a3});
    CHECK(cands.prefixes == std::set<Prefix>{parse_prefix("cccc:3:3::/48")});
    CHECK(cands.provenance.at(parse_prefix("cccc:3:3::/48")) ==
          std::set<Address128>{parse_address("2001:db8::20")});

    auto single = discover_init({a1});
    CHECK(single.prefixes == std::set<Prefix>{parse_prefix("aaaa:1:1::/48")});
}

TEST_CASE("discover_init skips all-anonymous traces") {
    SeedTrace anon;
    anon.dst = parse_address("dddd::1");
    anon.hops = {std::nullopt, std::nullopt};
    auto cands = discover_init({anon, make_trace("cccc:3:3::1", "2001:db8::20")});
    CHECK(cands.prefixes.size() == 1);
}

TEST_CASE("discover_init equals brute-force oracle on random input") {
    std::mt19937_64 rng(123);
    std::vector<SeedTrace> traces;
    for (int i = 0; i < 1000; ++i) {
        SeedTrace t;
        t.dst = Address128{(rng() % 64) << 48 | 0x2000000000000000ULL, rng()};
        // small last-hop pool to force collisions across /48s
        t.hops = {Address128{0x20010db800000000ULL, rng() % 96}};
        traces.push_back(t);
    }
    auto cands = discover_init(traces);
    CHECK(cands.prefixes == discover_oracle(traces));
}

TEST_CASE("discover_init is order and duplication invariant") {
    std::mt19937_64 rng(5);
    std::vector<SeedTrace> traces;
    for (int i = 0; i < 200; ++i) {
        SeedTrace t;
        t.dst = Address128{(rng() % 16) << 48 | 0x2000000000000000ULL, rng()};
        t.hops = {Address128{0x20010db800000000ULL, rng() % 24}};
        traces.push_back(t);
    }
    auto base = discover_init(traces);

    auto shuffled = traces;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(discover_init(shuffled).prefixes == base.prefixes);

    auto doubled = traces;
    doubled.insert(doubled.end(), traces.begin(), traces.end());
    CHECK(discover_init(doubled).prefixes == base.prefixes);
}
