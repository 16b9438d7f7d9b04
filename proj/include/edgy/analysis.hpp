#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "edgy/address.hpp"
#include "edgy/asn_table.hpp"
#include "edgy/campaign.hpp"
#include "edgy/prober.hpp"
#include "edgy/seed.hpp"

namespace edgy {

/// MAC -> number of distinct EUI-64 last-hop addresses embedding it.
using MacHistogram = std::map<MacAddress, std::size_t>;

struct Eui64Stats {
    std::size_t eui64_count = 0; // distinct EUI-64 last hops
    MacHistogram macs;
};

struct Eui64Options {
    /// Normalize the universal/local bit when recovering MACs (raw mode off).
    bool normalize_ul_bit = true;
};

/// Deduplicates by last-hop address, counts EUI-64 IIDs and recovered MACs.
Eui64Stats eui64_stats(std::span<const LastHopRecord> records, const Eui64Options& opts = {});

/// Shannon entropy of the 16 IID nybbles, normalized by 4 bits; in [0,1].
double iid_entropy(const Address128& addr);
double iid_entropy(const InterfaceId& iid);

struct EdginessOptions {
    /// A last hop observed for more than this many targets is flagged as
    /// probable infrastructure or rotation artifact.
    std::size_t high_fanout_threshold = 256;
};

struct EdginessReport {
    std::optional<double> same_as_fraction; // unavailable with an empty table
    std::array<std::uint64_t, 129> msb_histogram{};
    double periphery_only_fraction = 0.0;
    std::size_t unique_lasthops = 0;
    std::size_t unique_final_edges = 0; // distinct (penultimate, lasthop) pairs
    std::vector<Address128> high_fanout_lasthops;
};

/// The three edginess metrics plus edge counts. `traces` supplies the
/// intermediate-hop corpus for the periphery-only metric.
EdginessReport edginess(std::span<const LastHopRecord> records,
                        std::span<const SeedTrace> traces, const AsnTable& asn_table,
                        const EdginessOptions& opts = {});

// Aggregation kernels behind the report. The OpenMP versions are the
// default path; the serial ones are the reference kept for testing and
// the benchmark target.
std::array<std::uint64_t, 129> msb_histogram(std::span<const LastHopRecord> records);
std::array<std::uint64_t, 129> msb_histogram_serial(std::span<const LastHopRecord> records);
std::vector<double> iid_entropies(std::span<const Address128> addrs);
std::vector<double> iid_entropies_serial(std::span<const Address128> addrs);

struct EtaSweepRow {
    std::size_t eta = 0;
    std::size_t selected_prefixes = 0;
    std::size_t unique_lasthops = 0;
    double probes_per_lasthop = 0.0;
};

/// For each eta: prefixes whose round-1 unique count exceeds it, the last
/// hops the selection yields in round 2 (or, without round-2 data, the
/// projected round-1 union), and probe cost per unique last hop.
std::vector<EtaSweepRow> eta_sweep(
    const std::map<Prefix, std::set<Address128>>& round1_lasthops,
    const std::vector<std::size_t>& etas, std::uint64_t probes_per_prefix_next_round,
    const std::map<Prefix, std::set<Address128>>* round2_lasthops = nullptr);

struct BoundaryResult {
    int mask = 64;
    bool capped = false;
};

/// Probes both mask-granularity neighbors of dst with a fresh random IID
/// offset per iteration, widening the mask until at most one distinct last
/// hop remains (capped at max_mask).
BoundaryResult detect_boundary(Prober& prober, const Address128& dst, int max_mask = 96,
                               std::uint64_t rng_seed = 0);

struct AnalysisBundle {
    Eui64Stats eui64;
    EdginessReport edges;
    std::vector<EtaSweepRow> sweep;
    std::vector<std::pair<Address128, double>> entropy_by_lasthop;
};

AnalysisBundle analyze_records(std::span<const LastHopRecord> records,
                               std::span<const SeedTrace> traces, const AsnTable& asn_table);

/// Writes one CSV per metric plus summary.json; byte-stable given
/// identical inputs.
void emit_report(const AnalysisBundle& bundle, const std::string& outdir);

} // namespace edgy
