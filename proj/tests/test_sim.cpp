#include <doctest.h>

#include <set>

#include "edgy/sim.hpp"

using namespace edgy;

namespace {

const char* kBasicSpec = R"({
  "providers": [
    {
      "asn": 64500,
      "core_prefix": "2001:db8:fff0::/48",
      "core_depth": 2,
      "prefixes": [{"prefix": "2001:db8:100::/48", "delegation": "uniform60"}],
      "iid_style": {"kind": "eui64", "mac_pool": 4},
      "rotation": {"period_rounds": 1}
    },
    {
      "asn": 64501,
      "core_prefix": "2001:db8:ffe0::/48",
      "core_depth": 3,
      "prefixes": [{"prefix": "2001:db8:200::/48", "delegation": "uniform64"}],
      "iid_style": "random",
      "alias_prefixes": ["2001:db8:a11a::/48"]
    }
  ]
})";

Address128 region_target(const char* p48, std::uint32_t start64, std::uint64_t iid) {
    auto a = parse_prefix(p48).base;
    a.hi |= start64;
    a.lo = iid;
    return a;
}

} // namespace

TEST_CASE("sim trace structure matches ground truth") {
    auto net = build_sim_network_from_json(kBasicSpec, 7);
    SimProber prober(net);
    prober.begin_round(0);

    auto p48 = parse_prefix("2001:db8:100::/48");
    auto truth = net.cpe_addresses(p48, 0);
    REQUIRE(truth.size() == 4096); // uniform60 -> 4096 delegations

    ProbeBatch batch;
    for (std::uint32_t r = 0; r < 16; ++r) batch.targets.push_back(region_target("2001:db8:100::/48", r * 16, 1));
    auto results = prober.probe_serial(batch);
    REQUIRE(results.size() == 16);
    for (std::size_t i = 0; i < 16; ++i) {
        const auto& tr = results[i];
        REQUIRE(tr.hops.size() == 4); // core_depth 2 + provider edge + CPE
        CHECK(tr.hops[0].has_value());
        CHECK(parse_prefix("2001:db8:fff0::/48").contains(*tr.hops[0]));
        REQUIRE(tr.last_responsive_hop().has_value());
        CHECK(*tr.last_responsive_hop() == truth[i]);
        CHECK(p48.contains(truth[i]));
        CHECK(tr.last_responsive_ttl() == 4);
        REQUIRE(tr.penultimate_responsive_hop().has_value());
        CHECK(parse_prefix("2001:db8:fff0::/48").contains(*tr.penultimate_responsive_hop()));
        CHECK(tr.last_recv_ms().has_value());
    }
}

TEST_CASE("sim parallel batches equal the serial reference") {
    auto net = build_sim_network_from_json(kBasicSpec, 7);
    SimProber prober(net);
    prober.begin_round(1);
    ProbeBatch batch;
    for (std::uint32_t i = 0; i < 4096; ++i)
        batch.targets.push_back(region_target("2001:db8:100::/48", i % 256, i));
    for (std::uint32_t i = 0; i < 512; ++i)
        batch.targets.push_back(region_target("2001:db8:a11a::/48", i, i * 3 + 1));
    auto serial = prober.probe_serial(batch);
    auto parallel = prober.probe(batch);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].dst == parallel[i].dst);
        CHECK(serial[i].hops == parallel[i].hops);
        CHECK(serial[i].recv_ms == parallel[i].recv_ms);
    }
}

TEST_CASE("aliased space answers with one stable address") {
    auto net = build_sim_network_from_json(kBasicSpec, 7);
    SimProber prober(net);
    ProbeBatch batch;
    for (std::uint64_t i = 0; i < 64; ++i)
        batch.targets.push_back(region_target("2001:db8:a11a:42::/64", 0x42, i * 977 + 5));
    auto results = prober.probe_serial(batch);
    std::set<Address128> lasthops;
    for (const auto& tr : results) {
        REQUIRE(tr.last_responsive_hop().has_value());
        lasthops.insert(*tr.last_responsive_hop());
        CHECK(*tr.last_responsive_hop() != tr.dst); // echo is not a self response
    }
    REQUIRE(lasthops.size() == 1);
    CHECK(parse_prefix("2001:db8:a11a::/48").contains(*lasthops.begin()));
}

TEST_CASE("dead space is fully anonymous") {
    auto net = build_sim_network_from_json(kBasicSpec, 7);
    SimProber prober(net);
    ProbeBatch batch;
    batch.targets.push_back(parse_address("2001:db8:300::1"));
    auto results = prober.probe_serial(batch);
    CHECK_FALSE(results[0].last_responsive_hop().has_value());
}

TEST_CASE("mac pool reuse bounds distinct device macs") {
    auto net = build_sim_network_from_json(kBasicSpec, 7);
    std::set<MacAddress> macs;
    for (const auto& a : net.cpe_addresses(parse_prefix("2001:db8:100::/48"), 0)) {
        auto mac = eui64_to_mac(InterfaceId{a.lo});
        REQUIRE(mac.has_value());
        macs.insert(*mac);
    }
    CHECK(macs.size() == 4); // 4096 regions share a 4-entry pool
}

TEST_CASE("rotation moves addresses between epochs but keeps the identity set") {
    auto net = build_sim_network_from_json(kBasicSpec, 7);
    auto p48 = parse_prefix("2001:db8:100::/48");
    auto e0 = net.cpe_addresses(p48, 0);
    auto e1 = net.cpe_addresses(p48, 1);
    REQUIRE(e0.size() == e1.size());
    CHECK(e0 != e1);
    // rotation permutes identities across regions; the IID multiset is unchanged
    std::multiset<std::uint64_t> iids0, iids1;
    for (const auto& a : e0) iids0.insert(a.lo);
    for (const auto& a : e1) iids1.insert(a.lo);
    CHECK(iids0 == iids1);

    // period 1: the epoch equals the round; provider 1 never rotates
    CHECK(net.rotation_epoch(net.providers()[0], 3) == 3);
    CHECK(net.rotation_epoch(net.providers()[1], 3) == 0);
}

TEST_CASE("rate limit suppresses cpe replies past the per-second budget") {
    auto spec = std::string(R"({
      "providers": [{
        "asn": 64500,
        "core_prefix": "2001:db8:fff0::/48",
        "prefixes": [{"prefix": "2001:db8:100::/48", "delegation": "uniform64"}],
        "rate_limit": 5
      }]
    })");
    auto net = build_sim_network_from_json(spec, 7);
    SimProber prober(net);
    ProbeBatch batch;
    batch.rate_hint = 10.0; // 10 probes/second -> 10 per window, 5 allowed
    for (std::uint32_t i = 0; i < 40; ++i)
        batch.targets.push_back(region_target("2001:db8:100::/48", i, 1));
    auto results = prober.probe_serial(batch);
    std::size_t answered = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& tr = results[i];
        bool cpe = tr.hops.back().has_value();
        answered += cpe;
        // within each 10-probe window only the first five reach the edge
        CHECK(cpe == (i % 10 < 5));
        // the provider edge still answers when the CPE is silenced
        bool edge_or_cpe = tr.penultimate_responsive_hop().has_value() || cpe;
        CHECK(edge_or_cpe);
    }
    CHECK(answered == 20);
}

TEST_CASE("anonymous probability one silences every edge") {
    auto spec = std::string(R"({
      "providers": [{
        "asn": 64500,
        "core_prefix": "2001:db8:fff0::/48",
        "prefixes": [{"prefix": "2001:db8:100::/48", "delegation": "uniform64"}],
        "anon_prob": 1.0
      }]
    })");
    auto net = build_sim_network_from_json(spec, 7);
    SimProber prober(net);
    ProbeBatch batch;
    for (std::uint32_t i = 0; i < 32; ++i)
        batch.targets.push_back(region_target("2001:db8:100::/48", i, 1));
    for (const auto& tr : prober.probe_serial(batch)) {
        CHECK_FALSE(tr.hops.back().has_value());
        CHECK(tr.penultimate_responsive_hop().has_value()); // provider edge survives
    }
}

TEST_CASE("sim spec validation errors") {
    auto bad = [](const char* body) {
        return std::string(R"({"providers": [{"asn": 1, "core_prefix": "2001:db8::/48", "prefixes": [)") +
               body + "]}]}";
    };
    CHECK_THROWS_WITH_AS(
        build_sim_network_from_json(bad(R"({"prefix": "2001:db8:100::/48", "delegation": "uniform99"})"), 1),
        doctest::Contains("delegation policy"), std::runtime_error);
    CHECK_THROWS_WITH_AS(
        build_sim_network_from_json(bad(R"({"prefix": "2001:db8:100::/40", "delegation": "uniform64"})"), 1),
        doctest::Contains("/48"), std::runtime_error);
    CHECK_THROWS_WITH_AS(
        build_sim_network_from_json(
            bad(R"({"prefix": "2001:db8:100::/48", "delegation": [{"size": 56, "fraction": 0.5}]})"), 1),
        doctest::Contains("sum to 1"), std::runtime_error);
    CHECK_THROWS_WITH_AS(
        build_sim_network_from_json(
            bad(R"({"prefix": "2001:db8:100::/48", "delegation": [{"size": 47, "fraction": 1.0}]})"), 1),
        doctest::Contains("[48,64]"), std::runtime_error);
    CHECK_THROWS_AS(build_sim_network_from_json("{ nope", 1), std::runtime_error);
}

TEST_CASE("mixed delegation policies carve whole regions") {
    auto spec = std::string(R"({
      "providers": [{
        "asn": 64500,
        "core_prefix": "2001:db8:fff0::/48",
        "prefixes": [{"prefix": "2001:db8:100::/48",
                      "delegation": [{"size": 56, "fraction": 0.5},
                                     {"size": 60, "fraction": 0.25},
                                     {"size": 64, "fraction": 0.25}]}]
      }]
    })");
    auto net = build_sim_network_from_json(spec, 7);
    // 128 /56s + 1024 /60s + 16384 /64s
    CHECK(net.cpe_addresses(parse_prefix("2001:db8:100::/48"), 0).size() == 128 + 1024 + 16384);
}
