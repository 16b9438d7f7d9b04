#include "edgy/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace edgy {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

} // namespace

SimNetwork::SimNetwork(std::uint64_t seed, std::vector<ProviderModel> providers)
    : seed_(seed), providers_(std::move(providers)) {
    for (std::size_t pi = 0; pi < providers_.size(); ++pi) {
        auto& p = providers_[pi];
        for (std::size_t xi = 0; xi < p.prefixes.size(); ++xi) {
            auto& tp = p.prefixes[xi];
            if (tp.prefix.length != 48)
                throw std::runtime_error("target prefix must be a /48: " + format_prefix(tp.prefix));
            std::sort(tp.regions.begin(), tp.regions.end(),
                      [](const auto& a, const auto& b) { return a.start64 < b.start64; });
            std::uint64_t covered = 0;
            for (const auto& r : tp.regions) {
                if (r.start64 != covered)
                    throw std::runtime_error("delegation regions do not partition " +
                                             format_prefix(tp.prefix));
                covered += r.len64;
            }
            if (covered != 65536)
                throw std::runtime_error("delegation regions do not cover " + format_prefix(tp.prefix));
            by48_[tp.prefix] = {pi, xi};
        }
    }
}

std::optional<SimNetwork::RegionRef> SimNetwork::find_region(const Address128& target) const {
    auto it = by48_.find(subnet_id(target, 48));
    if (it == by48_.end()) return std::nullopt;
    auto [pi, xi] = it->second;
    const auto& regions = providers_[pi].prefixes[xi].regions;
    auto offset64 = static_cast<std::uint32_t>(target.hi & 0xffff);
    auto rit = std::upper_bound(regions.begin(), regions.end(), offset64,
                                [](std::uint32_t v, const DelegatedRegion& r) { return v < r.start64; });
    if (rit == regions.begin()) return std::nullopt;
    --rit;
    return RegionRef{pi, xi, static_cast<std::size_t>(rit - regions.begin())};
}

std::optional<SimNetwork::AliasRef> SimNetwork::find_alias(const Address128& target) const {
    for (std::size_t pi = 0; pi < providers_.size(); ++pi)
        for (std::size_t ai = 0; ai < providers_[pi].alias_prefixes.size(); ++ai)
            if (providers_[pi].alias_prefixes[ai].contains(target)) return AliasRef{pi, ai};
    return std::nullopt;
}

Address128 SimNetwork::alias_echo_address(const AliasRef& r) const {
    // One stable responder per aliased prefix: every probed IID elicits the
    // same source address from inside the prefix.
    const auto& ap = providers_[r.provider].alias_prefixes[r.alias];
    std::uint64_t h = mix(mix(seed_, 0x616c6961ULL ^ r.provider), r.alias);
    Address128 echo = ap.base;
    if (ap.length <= 64) {
        echo.lo |= h | 1;
        if (ap.length < 64) echo.hi |= (h >> (ap.length % 64)) & (~0ULL >> ap.length);
    } else if (ap.length < 128) {
        echo.lo |= (h | 1) & (~0ULL >> (ap.length - 64));
    }
    return echo;
}

MacAddress SimNetwork::pool_mac(const ProviderModel& p, std::size_t identity) const {
    std::size_t k = p.mac_pool ? identity % p.mac_pool : identity;
    MacAddress m;
    std::uint64_t oui = mix(seed_, 0x6d616331ULL ^ p.asn);
    m.octets[0] = static_cast<std::uint8_t>(oui >> 8) & 0xfc; // unicast, universal
    m.octets[1] = static_cast<std::uint8_t>(oui);
    m.octets[2] = static_cast<std::uint8_t>(k >> 24);
    m.octets[3] = static_cast<std::uint8_t>(k >> 16);
    m.octets[4] = static_cast<std::uint8_t>(k >> 8);
    m.octets[5] = static_cast<std::uint8_t>(k);
    return m;
}

int SimNetwork::rotation_epoch(const ProviderModel& p, int round_index) const {
    if (p.rotation.period_rounds <= 0) return 0;
    return round_index / p.rotation.period_rounds;
}

Address128 SimNetwork::cpe_address(const RegionRef& r, int epoch) const {
    const auto& p = providers_[r.provider];
    const auto& tp = p.prefixes[r.prefix];
    std::size_t n = tp.regions.size();
    std::size_t off = (static_cast<std::uint64_t>(epoch) * 2654435761ULL) % n;
    std::size_t identity = (r.region + off) % n;
    const auto& region = tp.regions[r.region];
    Address128 base = tp.prefix.base;
    base.hi |= static_cast<std::uint64_t>(region.start64);
    std::uint64_t iid;
    switch (p.iid_style) {
        case IidStyle::eui64:
            iid = mac_to_eui64(pool_mac(p, identity)).low64;
            break;
        case IidStyle::low_entropy:
            iid = p.low_entropy_iid;
            break;
        case IidStyle::random_iid:
        default:
            iid = mix(mix(seed_, 0x696964ULL ^ r.provider), (r.prefix << 32) ^ identity);
            if (iid == 0) iid = 1;
            break;
    }
    base.lo |= iid;
    return base;
}

std::vector<Address128> SimNetwork::cpe_addresses(const Prefix& p48, int epoch) const {
    auto it = by48_.find(p48);
    if (it == by48_.end()) return {};
    auto [pi, xi] = it->second;
    const auto& regions = providers_[pi].prefixes[xi].regions;
    std::vector<Address128> out;
    out.reserve(regions.size());
    for (std::size_t ri = 0; ri < regions.size(); ++ri)
        out.push_back(cpe_address({pi, xi, ri}, epoch));
    return out;
}

std::vector<TraceResult> SimProber::probe(const ProbeBatch& batch) { return run(batch, true); }
std::vector<TraceResult> SimProber::probe_serial(const ProbeBatch& batch) { return run(batch, false); }

std::vector<TraceResult> SimProber::run(const ProbeBatch& batch, bool parallel) {
    const auto& net = *net_;
    const auto n = batch.targets.size();
    if (n == 0) return {};
    double rate = batch.rate_hint > 0 ? batch.rate_hint : 10000.0;

    struct Plan {
        std::optional<SimNetwork::RegionRef> region;
        std::optional<SimNetwork::AliasRef> alias;
        bool cpe_allowed = true;
        std::uint64_t send_ms = 0;
    };
    std::vector<Plan> plans(n);

    // Rate limiting depends on send order, so the plan pass is serial.
    std::unordered_map<std::uint64_t, std::uint64_t> window_counts; // provider<<32 | second
    for (std::size_t i = 0; i < n; ++i) {
        auto& pl = plans[i];
        pl.send_ms = static_cast<std::uint64_t>(std::floor(static_cast<double>(i) * 1000.0 / rate));
        pl.region = net.find_region(batch.targets[i]);
        if (!pl.region) pl.alias = net.find_alias(batch.targets[i]);
        std::size_t pi;
        if (pl.region)
            pi = pl.region->provider;
        else if (pl.alias)
            pi = pl.alias->provider;
        else
            continue;
        const auto& prov = net.providers()[pi];
        if (prov.rate_limit > 0) {
            std::uint64_t key = (static_cast<std::uint64_t>(pi) << 32) | (pl.send_ms / 1000);
            if (++window_counts[key] > prov.rate_limit) pl.cpe_allowed = false;
        }
    }

    std::vector<TraceResult> out(n);
    auto build = [&](std::size_t i) {
        const Address128& target = batch.targets[i];
        const Plan& pl = plans[i];
        TraceResult tr;
        tr.dst = target;
        if (!pl.region && !pl.alias) {
            out[i] = std::move(tr); // dead space: fully anonymous
            return;
        }
        std::size_t pi = pl.region ? pl.region->provider : pl.alias->provider;
        const auto& prov = net.providers()[pi];
        int depth = prov.core_depth;
        auto push_hop = [&](const std::optional<Address128>& h, int ttl) {
            tr.hops.push_back(h);
            tr.recv_ms.push_back(h ? std::optional<std::uint64_t>(pl.send_ms + static_cast<std::uint64_t>(ttl))
                                   : std::nullopt);
        };
        for (int d = 1; d <= depth && static_cast<int>(tr.hops.size()) < batch.max_ttl; ++d) {
            Address128 core = prov.core_prefix.base;
            core.lo |= static_cast<std::uint64_t>(d);
            push_hop(core, d);
        }
        if (pl.alias) {
            // Aliased space answers for every probed IID.
            push_hop(net.alias_echo_address(*pl.alias), depth + 1);
            out[i] = std::move(tr);
            return;
        }
        Address128 penult = prov.core_prefix.base;
        penult.lo |= (1ULL << 32) | static_cast<std::uint64_t>(pl.region->prefix + 1);
        push_hop(penult, depth + 1);
        int epoch = net.rotation_epoch(prov, round_);
        bool anon = prov.anon_prob > 0.0 &&
                    to_unit(splitmix64(net.seed() ^ target.hi ^ splitmix64(target.lo ^
                            static_cast<std::uint64_t>(round_)))) < prov.anon_prob;
        if (!pl.cpe_allowed || anon)
            push_hop(std::nullopt, depth + 2);
        else
            push_hop(net.cpe_address(*pl.region, epoch), depth + 2);
        out[i] = std::move(tr);
    };

    if (parallel) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            build(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < n; ++i) build(i);
    }
    return out;
}

namespace {

std::vector<DelegatedRegion> regions_from_policy(const nlohmann::json& policy, const Prefix& p48) {
    std::vector<std::pair<int, double>> parts;
    if (policy.is_string()) {
        const std::string s = policy.get<std::string>();
        if (s == "uniform56")
            parts = {{56, 1.0}};
        else if (s == "uniform60")
            parts = {{60, 1.0}};
        else if (s == "uniform64")
            parts = {{64, 1.0}};
        else
            throw std::runtime_error("unknown delegation policy '" + s + "' for " + format_prefix(p48));
    } else if (policy.is_array()) {
        for (const auto& e : policy)
            parts.emplace_back(e.at("size").get<int>(), e.at("fraction").get<double>());
    } else {
        throw std::runtime_error("delegation must be a string or a [{size,fraction}] array");
    }
    double total_frac = 0;
    for (auto [size, frac] : parts) total_frac += frac;
    if (std::abs(total_frac - 1.0) > 1e-9)
        throw std::runtime_error("delegation fractions must sum to 1 for " + format_prefix(p48));
    std::vector<DelegatedRegion> regions;
    std::uint64_t cursor = 0;
    for (auto [size, frac] : parts) {
        if (size < 48 || size > 64)
            throw std::runtime_error("delegation size must be in [48,64], got " + std::to_string(size));
        std::uint64_t len64 = 1ULL << (64 - size);
        double span = frac * 65536.0;
        auto count = static_cast<std::uint64_t>(std::llround(span / static_cast<double>(len64)));
        if (std::abs(static_cast<double>(count) * static_cast<double>(len64) - span) > 1e-6)
            throw std::runtime_error("fraction does not yield whole /" + std::to_string(size) +
                                     " regions in " + format_prefix(p48));
        for (std::uint64_t k = 0; k < count; ++k) {
            regions.push_back({static_cast<std::uint32_t>(cursor), static_cast<std::uint32_t>(len64), size});
            cursor += len64;
        }
    }
    if (cursor != 65536)
        throw std::runtime_error("delegation does not exactly cover " + format_prefix(p48));
    return regions;
}

ProviderModel provider_from_json(const nlohmann::json& j) {
    ProviderModel p;
    p.asn = j.at("asn").get<std::uint32_t>();
    p.core_prefix = parse_prefix(j.at("core_prefix").get<std::string>());
    p.core_depth = j.value("core_depth", 2);
    if (p.core_depth < 0 || p.core_depth > 28)
        throw std::runtime_error("core_depth out of range");
    for (const auto& e : j.at("prefixes")) {
        TargetPrefix tp;
        tp.prefix = parse_prefix(e.at("prefix").get<std::string>());
        tp.regions = regions_from_policy(e.at("delegation"), tp.prefix);
        p.prefixes.push_back(std::move(tp));
    }
    if (j.contains("iid_style")) {
        const auto& s = j["iid_style"];
        std::string kind = s.is_string() ? s.get<std::string>() : s.at("kind").get<std::string>();
        if (kind == "eui64") {
            p.iid_style = IidStyle::eui64;
            if (s.is_object()) p.mac_pool = s.value("mac_pool", std::size_t{0});
        } else if (kind == "low_entropy") {
            p.iid_style = IidStyle::low_entropy;
            if (s.is_object() && s.contains("iid")) {
                const auto& v = s["iid"];
                p.low_entropy_iid = v.is_number() ? v.get<std::uint64_t>()
                                                  : parse_address(v.get<std::string>()).lo;
            }
        } else if (kind == "random") {
            p.iid_style = IidStyle::random_iid;
        } else {
            throw std::runtime_error("unknown iid_style '" + kind + "'");
        }
    }
    for (const auto& a : j.value("alias_prefixes", nlohmann::json::array()))
        p.alias_prefixes.push_back(parse_prefix(a.get<std::string>()));
    if (j.contains("rotation") && !j["rotation"].is_null()) {
        p.rotation.period_rounds = j["rotation"].value("period_rounds", 1);
        p.rotation.rotate_bits = j["rotation"].value("rotate_bits", 16);
    }
    p.anon_prob = j.value("anon_prob", 0.0);
    if (p.anon_prob < 0.0 || p.anon_prob > 1.0) throw std::runtime_error("anon_prob out of [0,1]");
    p.rate_limit = j.value("rate_limit", std::uint64_t{0});
    return p;
}

} // namespace

SimNetwork build_sim_network_from_json(const std::string& json_text, std::uint64_t seed) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("sim spec is not valid JSON: ") + e.what());
    }
    std::vector<ProviderModel> providers;
    for (const auto& pj : j.at("providers")) providers.push_back(provider_from_json(pj));
    return SimNetwork(seed, std::move(providers));
}

SimNetwork build_sim_network(const std::string& spec_path, std::uint64_t seed) {
    std::ifstream in(spec_path);
    if (!in) throw std::runtime_error("cannot open sim spec: " + spec_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return build_sim_network_from_json(ss.str(), seed);
}

} // namespace edgy
