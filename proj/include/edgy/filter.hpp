#pragma once

#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgy/address.hpp"
#include "edgy/asn_table.hpp"

namespace edgy {

/// Set of aliased prefixes with containment semantics (union of members).
class AliasSet {
public:
    void insert(const Prefix& p) { prefixes_.push_back(p); }
    bool is_alias(const Address128& a) const {
        for (const auto& p : prefixes_)
            if (p.contains(a)) return true;
        return false;
    }
    bool empty() const { return prefixes_.empty(); }
    std::size_t size() const { return prefixes_.size(); }

private:
    std::vector<Prefix> prefixes_;
};

/// One CIDR prefix per line, `#` comments, blank lines ignored.
/// Throws std::runtime_error with the line number on malformed input.
AliasSet load_alias_file(std::istream& in);
AliasSet load_alias_file(const std::string& path);

enum class FilterReason {
    ok,
    self_response,
    alias,
    link_local,
    site_local,
    v4_in_v6,
    unroutable,
    spoof_suspect,
};

const char* to_string(FilterReason r);

struct ResponseVerdict {
    bool kept = false;
    FilterReason reason = FilterReason::ok;
};

struct FilterOptions {
    /// The spoof heuristic is a guess at an undefined criterion; off by
    /// default for strict reproduction.
    bool spoof_check = false;
    /// Other responsive hops of the trace, needed only by the spoof check.
    std::span<const std::optional<Address128>> trace_hops{};
};

/// Applies the removal rules in fixed precedence order; exactly one reason
/// per response. An empty routable table disables the unroutable rule.
ResponseVerdict classify_response(const Address128& target, const Address128& lasthop,
                                  int hop_count, const AliasSet& aliases,
                                  const AsnTable& routable, const FilterOptions& opts = {});

} // namespace edgy
