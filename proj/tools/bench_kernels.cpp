// Compares the OpenMP kernels against their serial reference paths:
// simulator batch evaluation, matching-MSB histogram, IID entropy.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "edgy/analysis.hpp"
#include "edgy/campaign.hpp"
#include "edgy/sim.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace edgy;
using clock_type = std::chrono::steady_clock;

namespace {

double ms_since(clock_type::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

SimNetwork make_network() {
    std::vector<ProviderModel> providers;
    ProviderModel p;
    p.asn = 64500;
    p.core_prefix = parse_prefix("2001:db8::/32");
    p.core_depth = 3;
    p.iid_style = IidStyle::eui64;
    p.mac_pool = 4096;
    for (int k = 0; k < 8; ++k) {
        TargetPrefix tp;
        Address128 base = parse_address("2001:db8::");
        base.hi |= static_cast<std::uint64_t>(k + 1) << 16;
        tp.prefix = Prefix(base, 48);
        for (std::uint32_t r = 0; r < 4096; ++r) tp.regions.push_back({r * 16, 16, 60});
        p.prefixes.push_back(std::move(tp));
    }
    providers.push_back(std::move(p));
    return SimNetwork(7, std::move(providers));
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (no OpenMP)\n");
#endif

    auto net = make_network();
    SimProber prober(net);

    ProbeBatch batch;
    for (const auto& tp : net.providers()[0].prefixes) {
        auto targets = generate_round_targets(tp.prefix, 64, 0x1234);
        batch.targets.insert(batch.targets.end(), targets.begin(), targets.end());
    }
    std::printf("sim batch: %zu targets\n", batch.targets.size());

    auto t0 = clock_type::now();
    auto serial = prober.probe_serial(batch);
    double serial_ms = ms_since(t0);
    t0 = clock_type::now();
    auto parallel = prober.probe(batch);
    double parallel_ms = ms_since(t0);
    bool same = serial.size() == parallel.size();
    for (std::size_t i = 0; same && i < serial.size(); ++i)
        same = serial[i].hops == parallel[i].hops;
    std::printf("sim probe   serial %8.1f ms   omp %8.1f ms   speedup %.2fx   match %s\n",
                serial_ms, parallel_ms, serial_ms / parallel_ms, same ? "yes" : "NO");

    std::vector<LastHopRecord> records;
    records.reserve(serial.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        auto lh = serial[i].last_responsive_hop();
        if (!lh) continue;
        LastHopRecord r;
        r.target = batch.targets[i];
        r.lasthop = *lh;
        records.push_back(r);
    }

    t0 = clock_type::now();
    auto hist_s = msb_histogram_serial(records);
    double hs = ms_since(t0);
    t0 = clock_type::now();
    auto hist_p = msb_histogram(records);
    double hp = ms_since(t0);
    std::printf("msb hist    serial %8.1f ms   omp %8.1f ms   speedup %.2fx   match %s\n", hs, hp,
                hs / hp, hist_s == hist_p ? "yes" : "NO");

    std::vector<Address128> addrs;
    addrs.reserve(records.size());
    for (const auto& r : records) addrs.push_back(r.lasthop);
    t0 = clock_type::now();
    auto ent_s = iid_entropies_serial(addrs);
    double es = ms_since(t0);
    t0 = clock_type::now();
    auto ent_p = iid_entropies(addrs);
    double ep = ms_since(t0);
    std::printf("entropy     serial %8.1f ms   omp %8.1f ms   speedup %.2fx   match %s\n", es, ep,
                es / ep, ent_s == ent_p ? "yes" : "NO");
    return 0;
}
