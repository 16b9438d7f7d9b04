#include <doctest.h>

#include <random>
#include <sstream>

#include "edgy/filter.hpp"

using namespace edgy;

TEST_CASE("alias file loading") {
    std::istringstream in("# curated aliases\n2001:db8:aa::/48\n\n2001:db8:bb::/48 # tail\n");
    auto aliases = load_alias_file(in);
    CHECK(aliases.size() == 2);
    CHECK(aliases.is_alias(parse_address("2001:db8:aa::1234")));
    CHECK_FALSE(aliases.is_alias(parse_address("2001:db8:cc::1")));

    std::istringstream empty("");
    CHECK_FALSE(load_alias_file(empty).is_alias(parse_address("::1")));

    std::istringstream nested("2001:db8::/32\n2001:db8:aa::/48\n");
    auto n = load_alias_file(nested);
    CHECK(n.is_alias(parse_address("2001:db8:ff::1"))); // union == the /32 alone

    std::istringstream bad("2001:db8::/32\nnonsense\n");
    CHECK_THROWS_WITH_AS(load_alias_file(bad), doctest::Contains("line 2"), std::runtime_error);
}

TEST_CASE("classify_response rule order") {
    AliasSet aliases;
    aliases.insert(parse_prefix("2001:db8:aa::/48"));
    AsnTable routable;
    routable.insert(parse_prefix("2001:db8::/32"), 64500);
    routable.insert(parse_prefix("2a03::/16"), 202053);

    auto verdict = [&](const char* tgt, const char* lh) {
        return classify_response(parse_address(tgt), parse_address(lh), 5, aliases, routable);
    };

    CHECK(verdict("2001:db8::5", "2001:db8::5").reason == FilterReason::self_response);
    CHECK(verdict("2001:db8::5", "2001:db8:aa::9").reason == FilterReason::alias);
    CHECK(verdict("2001:db8::5", "fe80::1").reason == FilterReason::link_local);
    CHECK(verdict("2001:db8::5", "fec0::7").reason == FilterReason::site_local);
    CHECK(verdict("2001:db8::5", "::ffff:192.0.2.1").reason == FilterReason::v4_in_v6);
    CHECK(verdict("2001:db8::5", "::192.0.2.1").reason == FilterReason::v4_in_v6);
    CHECK(verdict("2001:db8::5", "9999::1").reason == FilterReason::unroutable);
    auto ok = verdict("2001:db8::5", "2a03:4980::1");
    CHECK(ok.kept);
    CHECK(ok.reason == FilterReason::ok);

    // self beats alias when both apply
    CHECK(verdict("2001:db8:aa::9", "2001:db8:aa::9").reason == FilterReason::self_response);
}

TEST_CASE("empty routable table disables the unroutable rule") {
    AliasSet aliases;
    AsnTable empty;
    auto v = classify_response(parse_address("2001:db8::5"), parse_address("9999::1"), 5, aliases, empty);
    CHECK(v.kept);
}

TEST_CASE("spoof heuristic") {
    AliasSet aliases;
    AsnTable routable; // empty: unroutable rule off

    auto target = parse_address("2001:db8::1");
    std::vector<std::optional<Address128>> hops = {
        parse_address("2001:db8:0:1::1"), parse_address("2001:db8:0:2::1"), std::nullopt};

    FilterOptions opts;
    opts.spoof_check = true;
    opts.trace_hops = hops;

    // unrelated source claiming an earlier TTL than a responsive hop
    auto v = classify_response(target, parse_address("fd00::9"), 1, aliases, routable, opts);
    CHECK(v.reason == FilterReason::spoof_suspect);

    // same reply is kept with the heuristic off
    FilterOptions off;
    off.trace_hops = hops;
    CHECK(classify_response(target, parse_address("fd00::9"), 1, aliases, routable, off).kept);

    // nearby source is never flagged
    auto near = classify_response(target, parse_address("2001:db8::ffff"), 1, aliases, routable, opts);
    CHECK(near.kept);
}

TEST_CASE("filter totality and purity on random pairs") {
    AliasSet aliases;
    aliases.insert(parse_prefix("2001:db8:aa::/48"));
    AsnTable routable;
    routable.insert(parse_prefix("2000::/3"), 64500);

    std::mt19937_64 rng(77);
    for (int i = 0; i < 20000; ++i) {
        Address128 target{rng(), rng()};
        Address128 lasthop{rng(), rng()};
        auto v1 = classify_response(target, lasthop, 5, aliases, routable);
        auto v2 = classify_response(target, lasthop, 5, aliases, routable);
        CHECK(v1.reason == v2.reason); // pure
        CHECK(v1.kept == (v1.reason == FilterReason::ok));
        if (v1.kept) {
            CHECK(lasthop != target);
            CHECK_FALSE(aliases.is_alias(lasthop));
            CHECK(routable.lookup(lasthop).has_value());
        }
    }
}
