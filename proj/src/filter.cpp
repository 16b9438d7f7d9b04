#include "edgy/filter.hpp"

#include <fstream>
#include <sstream>

namespace edgy {

AliasSet load_alias_file(std::istream& in) {
    AliasSet out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string pfx_text;
        if (!(ls >> pfx_text)) continue;
        try {
            out.insert(parse_prefix(pfx_text));
        } catch (const std::exception& e) {
            throw std::runtime_error("alias file line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

AliasSet load_alias_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open alias file: " + path);
    return load_alias_file(in);
}

const char* to_string(FilterReason r) {
    switch (r) {
        case FilterReason::ok: return "ok";
        case FilterReason::self_response: return "self_response";
        case FilterReason::alias: return "alias";
        case FilterReason::link_local: return "link_local";
        case FilterReason::site_local: return "site_local";
        case FilterReason::v4_in_v6: return "v4_in_v6";
        case FilterReason::unroutable: return "unroutable";
        case FilterReason::spoof_suspect: return "spoof_suspect";
    }
    return "?";
}

namespace {

// fe80::/10 and fec0::/10
bool is_link_local(const Address128& a) { return (a.hi >> 54) == 0x3fa0ULL >> 4; }
bool is_site_local(const Address128& a) { return (a.hi >> 54) == 0x3fb0ULL >> 4; }

// ::ffff:0:0/96 (IPv4-mapped) or ::a.b.c.d (IPv4-compatible, excluding :: and ::1)
bool is_v4_embedded(const Address128& a) {
    if (a.hi == 0 && (a.lo >> 32) == 0x0000ffffULL) return true;
    if (a.hi == 0 && (a.lo >> 32) == 0 && a.lo > 1) return true;
    return false;
}

bool looks_spoofed(const Address128& target, const Address128& lasthop, int hop_count,
                   std::span<const std::optional<Address128>> hops) {
    if (matching_msb(lasthop, target) >= 16) return false;
    int highest_responsive_ttl = 0;
    for (std::size_t i = 0; i < hops.size(); ++i) {
        if (!hops[i]) continue;
        if (*hops[i] == lasthop) continue;
        if (matching_msb(lasthop, *hops[i]) >= 16) return false;
        highest_responsive_ttl = static_cast<int>(i) + 1;
    }
    return hop_count < highest_responsive_ttl;
}

} // namespace

ResponseVerdict classify_response(const Address128& target, const Address128& lasthop,
                                  int hop_count, const AliasSet& aliases,
                                  const AsnTable& routable, const FilterOptions& opts) {
    if (lasthop == target) return {false, FilterReason::self_response};
    if (aliases.is_alias(lasthop)) return {false, FilterReason::alias};
    if (is_link_local(lasthop)) return {false, FilterReason::link_local};
    if (is_site_local(lasthop)) return {false, FilterReason::site_local};
    if (is_v4_embedded(lasthop)) return {false, FilterReason::v4_in_v6};
    if (!routable.empty() && !routable.lookup(lasthop))
        return {false, FilterReason::unroutable};
    if (opts.spoof_check && looks_spoofed(target, lasthop, hop_count, opts.trace_hops))
        return {false, FilterReason::spoof_suspect};
    return {true, FilterReason::ok};
}

} // namespace edgy
