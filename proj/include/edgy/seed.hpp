#pragma once

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edgy/address.hpp"

namespace edgy {

/// One traced destination with its ordered hop list. Index i of `hops`
/// is the response at TTL i+1; nullopt marks an anonymous hop.
struct SeedTrace {
    Address128 dst;
    std::vector<std::optional<Address128>> hops;

    /// Highest-TTL responsive hop, or nullopt if every hop is anonymous.
    std::optional<Address128> last_responsive_hop() const;
    /// TTL (1-based) of the last responsive hop, 0 if none.
    int last_responsive_ttl() const;
};

/// Candidate /48 prefixes with the last hops that nominated them.
struct CandidateSet {
    std::set<Prefix> prefixes; // all length 48
    std::map<Prefix, std::set<Address128>> provenance;
};

struct SeedParseError : std::runtime_error {
    std::size_t line;
    SeedParseError(const std::string& msg, std::size_t ln)
        : std::runtime_error("line " + std::to_string(ln) + ": " + msg), line(ln) {}
};

/// Parses one JSON record: {"dst": "...", "hops": ["..."|null, ...]}.
/// Unknown fields are ignored.
SeedTrace parse_seed_line(const std::string& json_line, std::size_t lineno);

/// JSON Lines stream, one trace per line; blank lines skipped.
std::vector<SeedTrace> parse_seed_file(std::istream& in);
std::vector<SeedTrace> parse_seed_file(const std::string& path);

/// Groups destination /48s by last responsive hop and keeps the /48s whose
/// nominating last hop was seen from exactly one destination /48.
/// Traces with no responsive hop are skipped.
CandidateSet discover_init(const std::vector<SeedTrace>& traces);

} // namespace edgy
