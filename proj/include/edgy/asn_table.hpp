#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edgy/address.hpp"

namespace edgy {

/// Longest-prefix-match table mapping prefixes to origin ASNs.
/// Backed by a binary trie; immutable after load.
class AsnTable {
public:
    AsnTable() = default;

    /// Equal-length duplicate prefixes: last insert wins (a warning is
    /// collected in load_warnings by the loader).
    void insert(const Prefix& p, std::uint32_t asn);

    std::optional<std::uint32_t> lookup(const Address128& a) const;

    bool empty() const { return entry_count_ == 0; }
    std::size_t size() const { return entry_count_; }

    const std::vector<std::pair<Prefix, std::uint32_t>>& entries() const { return entries_; }

private:
    struct Node {
        std::unique_ptr<Node> child[2];
        std::optional<std::uint32_t> asn;
    };
    Node root_;
    std::size_t entry_count_ = 0;
    std::vector<std::pair<Prefix, std::uint32_t>> entries_;
};

struct AsnLoadResult {
    AsnTable table;
    std::vector<std::string> warnings;
};

/// Reads pfx2as-style lines: `prefix<TAB>asn` (whitespace-tolerant),
/// `#` comments, blank lines ignored. Throws std::runtime_error with the
/// line number on malformed input.
AsnLoadResult load_pfx2as(std::istream& in);
AsnLoadResult load_pfx2as_file(const std::string& path);

} // namespace edgy
