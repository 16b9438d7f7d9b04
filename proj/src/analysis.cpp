#include "edgy/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace edgy {

Eui64Stats eui64_stats(std::span<const LastHopRecord> records, const Eui64Options& opts) {
    std::set<Address128> distinct;
    for (const auto& r : records) distinct.insert(r.lasthop);
    Eui64Stats out;
    for (const auto& a : distinct) {
        InterfaceId iid = iid_of(a);
        if (!is_eui64(iid)) continue;
        ++out.eui64_count;
        auto mac = eui64_to_mac(iid);
        if (!opts.normalize_ul_bit) mac->octets[0] ^= 0x02; // keep the raw EUI-64 byte
        ++out.macs[*mac];
    }
    return out;
}

double iid_entropy(const InterfaceId& iid) {
    std::array<int, 16> counts{};
    for (int i = 0; i < 16; ++i) ++counts[(iid.low64 >> (4 * i)) & 0xf];
    double h = 0.0;
    for (int c : counts) {
        if (c == 0) continue;
        double p = c / 16.0;
        h -= p * std::log2(p);
    }
    return h / 4.0; // log2(16) bits max
}

double iid_entropy(const Address128& addr) { return iid_entropy(iid_of(addr)); }

std::array<std::uint64_t, 129> msb_histogram_serial(std::span<const LastHopRecord> records) {
    std::array<std::uint64_t, 129> hist{};
    for (const auto& r : records) ++hist[static_cast<std::size_t>(matching_msb(r.target, r.lasthop))];
    return hist;
}

std::array<std::uint64_t, 129> msb_histogram(std::span<const LastHopRecord> records) {
    std::array<std::uint64_t, 129> hist{};
    const auto n = static_cast<long long>(records.size());
#pragma omp parallel
    {
        std::array<std::uint64_t, 129> local{};
#pragma omp for schedule(static) nowait
        for (long long i = 0; i < n; ++i)
            ++local[static_cast<std::size_t>(
                matching_msb(records[static_cast<std::size_t>(i)].target,
                             records[static_cast<std::size_t>(i)].lasthop))];
#pragma omp critical(edgy_msb_hist)
        for (std::size_t b = 0; b < hist.size(); ++b) hist[b] += local[b];
    }
    return hist;
}

std::vector<double> iid_entropies_serial(std::span<const Address128> addrs) {
    std::vector<double> out(addrs.size());
    for (std::size_t i = 0; i < addrs.size(); ++i) out[i] = iid_entropy(addrs[i]);
    return out;
}

std::vector<double> iid_entropies(std::span<const Address128> addrs) {
    std::vector<double> out(addrs.size());
    const auto n = static_cast<long long>(addrs.size());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = iid_entropy(addrs[static_cast<std::size_t>(i)]);
    return out;
}

EdginessReport edginess(std::span<const LastHopRecord> records,
                        std::span<const SeedTrace> traces, const AsnTable& asn_table,
                        const EdginessOptions& opts) {
    EdginessReport rep;
    rep.msb_histogram = msb_histogram(records);

    if (!asn_table.empty() && !records.empty()) {
        std::size_t same = 0, scored = 0;
        for (const auto& r : records) {
            auto a1 = asn_table.lookup(r.target);
            auto a2 = asn_table.lookup(r.lasthop);
            ++scored;
            if (a1 && a2 && *a1 == *a2) ++same;
        }
        rep.same_as_fraction = scored ? static_cast<double>(same) / static_cast<double>(scored) : 0.0;
    }

    std::set<Address128> lasthops;
    std::unordered_map<Address128, std::unordered_set<Address128, Address128Hash>, Address128Hash>
        fanout; // lasthop -> distinct targets
    std::set<std::pair<Address128, Address128>> edges;
    for (const auto& r : records) {
        lasthops.insert(r.lasthop);
        fanout[r.lasthop].insert(r.target);
        if (r.penultimate) edges.emplace(*r.penultimate, r.lasthop);
    }
    rep.unique_lasthops = lasthops.size();
    rep.unique_final_edges = edges.size();

    // intermediate = every responsive hop before a trace's last responsive one
    std::unordered_set<Address128, Address128Hash> intermediates;
    for (const auto& t : traces) {
        int last_ttl = t.last_responsive_ttl();
        for (int ttl = 1; ttl < last_ttl; ++ttl) {
            const auto& h = t.hops[static_cast<std::size_t>(ttl - 1)];
            if (h) intermediates.insert(*h);
        }
    }
    std::size_t periphery_only = 0;
    for (const auto& lh : lasthops)
        if (!intermediates.count(lh)) ++periphery_only;
    rep.periphery_only_fraction =
        lasthops.empty() ? 0.0 : static_cast<double>(periphery_only) / static_cast<double>(lasthops.size());

    for (const auto& [lh, targets] : fanout)
        if (targets.size() > opts.high_fanout_threshold) rep.high_fanout_lasthops.push_back(lh);
    std::sort(rep.high_fanout_lasthops.begin(), rep.high_fanout_lasthops.end());
    return rep;
}

std::vector<EtaSweepRow> eta_sweep(const std::map<Prefix, std::set<Address128>>& round1_lasthops,
                                   const std::vector<std::size_t>& etas,
                                   std::uint64_t probes_per_prefix_next_round,
                                   const std::map<Prefix, std::set<Address128>>* round2_lasthops) {
    std::vector<EtaSweepRow> rows;
    for (std::size_t eta : etas) {
        EtaSweepRow row;
        row.eta = eta;
        std::set<Address128> uniques;
        for (const auto& [p, lhs] : round1_lasthops) {
            if (lhs.size() <= eta) continue;
            ++row.selected_prefixes;
            const std::set<Address128>* src = &lhs;
            if (round2_lasthops) {
                auto it = round2_lasthops->find(p);
                src = it != round2_lasthops->end() ? &it->second : nullptr;
            }
            if (src) uniques.insert(src->begin(), src->end());
        }
        row.unique_lasthops = uniques.size();
        row.probes_per_lasthop =
            row.unique_lasthops == 0
                ? 0.0
                : static_cast<double>(row.selected_prefixes * probes_per_prefix_next_round) /
                      static_cast<double>(row.unique_lasthops);
        rows.push_back(row);
    }
    return rows;
}

BoundaryResult detect_boundary(Prober& prober, const Address128& dst, int max_mask,
                               std::uint64_t rng_seed) {
    std::mt19937_64 rng(rng_seed);
    int mask = 64;
    while (true) {
        std::uint64_t t = rng();
        Address128 net = dst.masked(mask);
        int e = 128 - mask; // neighbor stride 2^(128-mask)
        Address128 step = e >= 64 ? Address128{1ULL << (e - 64), 0} : Address128{0, 1ULL << e};
        Address128 offset{0, t};
        ProbeBatch batch;
        batch.targets = {net - step + offset, net + step + offset};
        auto results = prober.probe(batch);
        std::set<Address128> lasthops;
        for (const auto& tr : results)
            if (auto lh = tr.last_responsive_hop()) lasthops.insert(*lh);
        if (lasthops.size() <= 1) return {mask, false};
        ++mask;
        if (mask > max_mask) return {max_mask, true};
    }
}

AnalysisBundle analyze_records(std::span<const LastHopRecord> records,
                               std::span<const SeedTrace> traces, const AsnTable& asn_table) {
    AnalysisBundle b;
    b.eui64 = eui64_stats(records);
    b.edges = edginess(records, traces, asn_table);

    std::set<Address128> distinct;
    for (const auto& r : records) distinct.insert(r.lasthop);
    std::vector<Address128> addrs(distinct.begin(), distinct.end());
    auto ents = iid_entropies(addrs);
    b.entropy_by_lasthop.reserve(addrs.size());
    for (std::size_t i = 0; i < addrs.size(); ++i) b.entropy_by_lasthop.emplace_back(addrs[i], ents[i]);

    // round-1 sweep over the standard eta ladder when round data is present
    std::map<Prefix, std::set<Address128>> round1, round2;
    for (const auto& r : records) {
        if (r.round_mask == 56) round1[r.target_prefix].insert(r.lasthop);
        if (r.round_mask == 60) round2[r.target_prefix].insert(r.lasthop);
    }
    if (!round1.empty())
        b.sweep = eta_sweep(round1, {4, 8, 16, 32, 64, 128}, 4096,
                            round2.empty() ? nullptr : &round2);
    return b;
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

void emit_report(const AnalysisBundle& bundle, const std::string& outdir) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    auto open = [&](const std::string& name) {
        std::ofstream out(outdir + "/" + name, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + outdir + "/" + name);
        return out;
    };

    {
        auto out = open("msb_histogram.csv");
        out << "matching_msb,count\n";
        for (std::size_t b = 0; b <= 128; ++b) out << b << ',' << bundle.edges.msb_histogram[b] << '\n';
    }
    {
        auto out = open("mac_histogram.csv");
        out << "mac,distinct_addresses\n";
        for (const auto& [mac, n] : bundle.eui64.macs) out << format_mac(mac) << ',' << n << '\n';
    }
    {
        auto out = open("entropy_distribution.csv");
        out << "lasthop,iid_entropy\n";
        for (const auto& [a, e] : bundle.entropy_by_lasthop)
            out << format_address(a) << ',' << fmt_double(e) << '\n';
    }
    {
        auto out = open("eta_sweep.csv");
        out << "eta,selected_prefixes,unique_lasthops,probes_per_lasthop\n";
        for (const auto& row : bundle.sweep)
            out << row.eta << ',' << row.selected_prefixes << ',' << row.unique_lasthops << ','
                << fmt_double(row.probes_per_lasthop) << '\n';
    }
    {
        nlohmann::json j;
        j["unique_lasthops"] = bundle.edges.unique_lasthops;
        j["unique_final_edges"] = bundle.edges.unique_final_edges;
        j["eui64_lasthops"] = bundle.eui64.eui64_count;
        j["unique_macs"] = bundle.eui64.macs.size();
        j["periphery_only_fraction"] = bundle.edges.periphery_only_fraction;
        if (bundle.edges.same_as_fraction)
            j["same_as_fraction"] = *bundle.edges.same_as_fraction;
        else
            j["same_as_fraction"] = nullptr;
        auto flagged = nlohmann::json::array();
        for (const auto& a : bundle.edges.high_fanout_lasthops) flagged.push_back(format_address(a));
        j["high_fanout_lasthops"] = std::move(flagged);
        auto out = open("summary.json");
        out << j.dump(2) << '\n';
    }
}

} // namespace edgy
