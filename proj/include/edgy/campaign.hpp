#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "edgy/address.hpp"
#include "edgy/filter.hpp"
#include "edgy/prober.hpp"
#include "edgy/seed.hpp"

namespace edgy {

/// Round masks, probed strictly in this order; a prefix never skips one.
inline constexpr int kRoundMasks[4] = {56, 60, 62, 64};

struct CampaignConfig {
    std::size_t eta1 = 16;  // round 1 (/56) advance threshold
    std::size_t eta2 = 256; // round 2 (/60) advance threshold
    std::uint64_t rng_seed = 0;
    double max_pps = 10000.0; // advisory, forwarded to the prober
    bool spoof_check = false;
    int max_ttl = 32;
};

struct LastHopRecord {
    Address128 target;
    Prefix target_prefix; // /48
    int round_mask = 0;
    Address128 lasthop;
    std::optional<Address128> penultimate;
    int hop_count = 0;
    std::uint64_t recv_ms = 0;
};

std::string record_to_jsonl(const LastHopRecord& r);
LastHopRecord record_from_jsonl(const std::string& line, std::size_t lineno);
std::vector<LastHopRecord> read_records_file(const std::string& path);

enum class PrefixStatus { pending, active, stopped, exhausted };
const char* to_string(PrefixStatus s);

struct RoundDecision {
    int mask = 0;
    std::size_t unique_lasthops = 0;
    bool advanced = false;
};

struct PrefixState {
    Prefix prefix; // /48
    PrefixStatus status = PrefixStatus::pending;
    int current_mask = 56; // meaningful while active
    std::uint64_t t = 0;   // per-prefix IID offset, fixed across rounds
    int completed_rounds = 0;
    std::uint64_t probes_issued = 0;
    std::vector<RoundDecision> decisions;
    std::vector<std::set<Address128>> lasthops_per_round; // post-filter, unique
};

/// Saturating distinct-target count per observed last hop, for the
/// round-3 "prefix-unique" rule.
struct Observation {
    int distinct_targets = 0; // saturates at 2
    Address128 first_target;
};

struct CampaignState {
    static constexpr int kFormatVersion = 1;
    std::uint64_t rng_seed = 0;
    CampaignConfig config;
    std::map<Prefix, PrefixState> prefixes;
    std::unordered_map<Address128, Observation, Address128Hash> observations;
    bool interrupted = false;
    std::string interrupt_reason;

    void observe(const Address128& lasthop, const Address128& target);
    bool is_prefix_unique(const Address128& lasthop) const;

    std::string to_json() const;
    static CampaignState from_json(const std::string& text);
};

/// Per-prefix IID offset: one deterministic draw from the campaign RNG.
std::uint64_t derive_prefix_offset(std::uint64_t rng_seed, const Prefix& p48);

/// The 2^(mask-48) round targets prefix.base + (i << (128-mask)) + t.
/// Throws std::invalid_argument for a mask outside {56,60,62,64}.
std::vector<Address128> generate_round_targets(const Prefix& p48, int mask, std::uint64_t t);

enum class RoundOutcome { advance, stop };

/// Applies the per-round advance rule to the post-filter target->lasthop
/// map of the prefix's current round. `is_prefix_unique` answers whether a
/// last hop has been observed for exactly one probe target so far.
RoundOutcome evaluate_round(const Prefix& p48, int round_mask,
                            const std::map<Address128, Address128>& filtered_lasthops,
                            const CampaignConfig& cfg,
                            const std::function<bool(const Address128&)>& is_prefix_unique);

struct CampaignIo {
    /// Called once per completed (prefix, round) with that round's records;
    /// together with save_state this forms the checkpoint boundary.
    std::function<void(std::span<const LastHopRecord>)> emit_records;
    /// Called after emit_records with the updated state; may be empty.
    std::function<void(const CampaignState&)> save_state;
};

/// Runs the four rounds over all candidates (round-major, prefixes in
/// sorted order). A ProberUnavailable error leaves the state resumable
/// with `interrupted` set. Pass the saved state to resume.
CampaignState run_campaign(const CandidateSet& candidates, Prober& prober,
                           const CampaignConfig& cfg, const AliasSet& aliases,
                           const AsnTable& routable, const CampaignIo& io,
                           std::optional<CampaignState> resume = std::nullopt);

} // namespace edgy
