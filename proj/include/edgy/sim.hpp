#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "edgy/address.hpp"
#include "edgy/prober.hpp"

namespace edgy {

enum class IidStyle { eui64, low_entropy, random_iid };

struct RotationSpec {
    int period_rounds = 0; // 0 = no rotation
    int rotate_bits = 16;
};

/// One delegated subnet inside a target /48. Offsets and lengths are in
/// units of /64 subnets (bits 48..64 of the address).
struct DelegatedRegion {
    std::uint32_t start64 = 0;
    std::uint32_t len64 = 1;
    int size = 64; // prefix length of the delegation
};

struct TargetPrefix {
    Prefix prefix; // /48
    std::vector<DelegatedRegion> regions;
};

struct ProviderModel {
    std::uint32_t asn = 0;
    Prefix core_prefix;
    int core_depth = 2;
    std::vector<TargetPrefix> prefixes;
    IidStyle iid_style = IidStyle::random_iid;
    std::size_t mac_pool = 0;          // eui64 style: pool size (reuse when < #regions)
    std::uint64_t low_entropy_iid = 1; // low_entropy style
    std::vector<Prefix> alias_prefixes;
    RotationSpec rotation;
    double anon_prob = 0.0;
    std::uint64_t rate_limit = 0; // CPE replies/second, 0 = unlimited
};

/// Deterministic ground-truth provider model. Identical (seed, spec) give
/// identical responses for identical probe sequences.
class SimNetwork {
public:
    SimNetwork(std::uint64_t seed, std::vector<ProviderModel> providers);

    std::uint64_t seed() const { return seed_; }
    const std::vector<ProviderModel>& providers() const { return providers_; }

    struct RegionRef {
        std::size_t provider = 0;
        std::size_t prefix = 0;
        std::size_t region = 0;
    };
    std::optional<RegionRef> find_region(const Address128& target) const;

    struct AliasRef {
        std::size_t provider = 0;
        std::size_t alias = 0;
    };
    std::optional<AliasRef> find_alias(const Address128& target) const;
    Address128 alias_echo_address(const AliasRef& r) const;

    /// CPE last-hop address for a region during a rotation epoch.
    Address128 cpe_address(const RegionRef& r, int epoch) const;
    MacAddress pool_mac(const ProviderModel& p, std::size_t identity) const;

    /// Ground truth: every CPE address inside a target /48 for an epoch.
    std::vector<Address128> cpe_addresses(const Prefix& p48, int epoch) const;

    int rotation_epoch(const ProviderModel& p, int round_index) const;

private:
    std::uint64_t seed_;
    std::vector<ProviderModel> providers_;
    std::unordered_map<Prefix, std::pair<std::size_t, std::size_t>, PrefixHash> by48_;
};

/// Parses the simulator spec JSON document. The file-level "seed" may be
/// overridden by the explicit argument.
SimNetwork build_sim_network(const std::string& spec_path, std::uint64_t seed);
SimNetwork build_sim_network_from_json(const std::string& json_text, std::uint64_t seed);

/// Simulator backend for the probe contract. Per-target traces are pure
/// functions of (seed, target, round), so batches are evaluated with an
/// OpenMP parallel loop; probe_serial is the reference path kept for tests.
class SimProber : public Prober {
public:
    explicit SimProber(const SimNetwork& net) : net_(&net) {}

    void begin_round(int round_index) override { round_ = round_index; }
    int current_round() const { return round_; }

    std::vector<TraceResult> probe(const ProbeBatch& batch) override;
    std::vector<TraceResult> probe_serial(const ProbeBatch& batch);

private:
    std::vector<TraceResult> run(const ProbeBatch& batch, bool parallel);

    const SimNetwork* net_;
    int round_ = 0;
};

} // namespace edgy
