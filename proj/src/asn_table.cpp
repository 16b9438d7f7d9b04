#include "edgy/asn_table.hpp"

#include <fstream>
#include <sstream>

namespace edgy {

namespace {
int bit_at(const Address128& a, int i) {
    return i < 64 ? static_cast<int>((a.hi >> (63 - i)) & 1)
                  : static_cast<int>((a.lo >> (127 - i)) & 1);
}
} // namespace

void AsnTable::insert(const Prefix& p, std::uint32_t asn) {
    Node* n = &root_;
    for (int i = 0; i < p.length; ++i) {
        int b = bit_at(p.base, i);
        if (!n->child[b]) n->child[b] = std::make_unique<Node>();
        n = n->child[b].get();
    }
    if (!n->asn) ++entry_count_;
    n->asn = asn;
    entries_.emplace_back(p, asn);
}

std::optional<std::uint32_t> AsnTable::lookup(const Address128& a) const {
    const Node* n = &root_;
    std::optional<std::uint32_t> best = n->asn;
    for (int i = 0; i < 128 && n; ++i) {
        n = n->child[bit_at(a, i)].get();
        if (n && n->asn) best = n->asn;
    }
    return best;
}

AsnLoadResult load_pfx2as(std::istream& in) {
    AsnLoadResult out;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::pair<Prefix, std::size_t>> seen; // prefix, first line
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string pfx_text, asn_text;
        if (!(ls >> pfx_text)) continue; // blank
        if (!(ls >> asn_text))
            throw std::runtime_error("pfx2as line " + std::to_string(lineno) + ": missing asn");
        try {
            Prefix p = parse_prefix(pfx_text);
            unsigned long asn = std::stoul(asn_text);
            if (asn > 0xffffffffUL) throw std::out_of_range("asn");
            for (const auto& [q, ln] : seen)
                if (q == p)
                    out.warnings.push_back("pfx2as line " + std::to_string(lineno) + ": duplicate prefix " +
                                           format_prefix(p) + " overrides line " + std::to_string(ln));
            seen.emplace_back(p, lineno);
            out.table.insert(p, static_cast<std::uint32_t>(asn));
        } catch (const std::exception& e) {
            throw std::runtime_error("pfx2as line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

AsnLoadResult load_pfx2as_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pfx2as file: " + path);
    return load_pfx2as(in);
}

} // namespace edgy
