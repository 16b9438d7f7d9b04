#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "edgy/prober.hpp"

using namespace edgy;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("edgy_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("adapter_write_targets emits one canonical address per line") {
    TempDir dir;
    ProbeBatch batch;
    batch.targets = {parse_address("2001:db8::1"), parse_address("2a03:4980:0:0:0:0:b:5")};
    auto path = (dir.path / "t.targets").string();
    adapter_write_targets(batch, path);
    CHECK(slurp(path) == "2001:db8::1\n2a03:4980::b:5\n");
}

TEST_CASE("adapter_read_results aligns with targets and tolerates gaps") {
    TempDir dir;
    auto path = (dir.path / "r.results").string();
    {
        std::ofstream out(path);
        // extra unknown fields must be ignored; order differs from the target list
        out << R"({"dst":"2001:db8::2","hops":["2001:db8:f::1",null],"rtt":[1.5],"extra":true})" << "\n";
        out << R"({"dst":"2001:db8::1","hops":["2001:db8:f::9"]})" << "\n";
        out << R"({"dst":"2001:db8::99","hops":[]})" << "\n"; // not requested: dropped
    }
    std::vector<Address128> targets = {parse_address("2001:db8::1"), parse_address("2001:db8::2"),
                                       parse_address("2001:db8::3")};
    auto results = adapter_read_results(path, targets);
    REQUIRE(results.size() == 3);
    CHECK(results[0].dst == targets[0]);
    CHECK(*results[0].last_responsive_hop() == parse_address("2001:db8:f::9"));
    CHECK(*results[1].last_responsive_hop() == parse_address("2001:db8:f::1"));
    // missing target comes back fully anonymous
    CHECK(results[2].dst == targets[2]);
    CHECK_FALSE(results[2].last_responsive_hop().has_value());
}

TEST_CASE("adapter prober throws until results exist, then consumes them") {
    TempDir dir;
    AdapterProber::Options opts;
    opts.authorized = true;
    AdapterProber prober(dir.path.string(), opts);

    ProbeBatch batch;
    batch.targets = {parse_address("2001:db8::1")};
    CHECK_THROWS_AS(prober.probe(batch), ProberUnavailable);
    // the target list was written for the operator
    CHECK(fs::exists(dir.path / "batch_000000.targets"));

    {
        std::ofstream out(dir.path / "batch_000000.results");
        out << R"({"dst":"2001:db8::1","hops":["2001:db8:f::1"]})" << "\n";
    }
    AdapterProber retry(dir.path.string(), opts);
    auto results = retry.probe(batch);
    REQUIRE(results.size() == 1);
    CHECK(*results[0].last_responsive_hop() == parse_address("2001:db8:f::1"));
}

TEST_CASE("adapter prober refuses oversize batches without authorization") {
    TempDir dir;
    AdapterProber::Options opts;
    opts.probe_budget = 2;
    AdapterProber prober(dir.path.string(), opts);

    ProbeBatch batch;
    batch.targets = {parse_address("::1"), parse_address("::2"), parse_address("::3")};
    CHECK_THROWS_WITH_AS(prober.probe(batch), doctest::Contains("authoriz"), std::runtime_error);
    // nothing was written before the refusal
    CHECK_FALSE(fs::exists(dir.path / "batch_000000.targets"));

    opts.authorized = true;
    AdapterProber allowed(dir.path.string(), opts);
    CHECK_THROWS_AS(allowed.probe(batch), ProberUnavailable); // budget ok, results absent
    CHECK(fs::exists(dir.path / "batch_000000.targets"));
}

TEST_CASE("write_trace_jsonl round trips through the results reader") {
    TempDir dir;
    TraceResult t;
    t.dst = parse_address("2001:db8::5");
    t.hops = {parse_address("2001:db8:f::1"), std::nullopt, parse_address("2001:db8:f::3")};
    t.recv_ms = {10, std::nullopt, 30};
    auto path = (dir.path / "trace.jsonl").string();
    {
        std::ofstream out(path);
        write_trace_jsonl(out, t);
    }
    auto back = adapter_read_results(path, {t.dst});
    REQUIRE(back.size() == 1);
    CHECK(back[0].hops == t.hops);
    CHECK(back[0].last_responsive_ttl() == 3);
}
