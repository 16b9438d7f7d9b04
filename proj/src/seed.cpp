#include "edgy/seed.hpp"

#include <fstream>
#include <unordered_map>

#include <json.hpp>

namespace edgy {

std::optional<Address128> SeedTrace::last_responsive_hop() const {
    for (auto it = hops.rbegin(); it != hops.rend(); ++it)
        if (it->has_value()) return *it;
    return std::nullopt;
}

int SeedTrace::last_responsive_ttl() const {
    for (std::size_t i = hops.size(); i-- > 0;)
        if (hops[i].has_value()) return static_cast<int>(i) + 1;
    return 0;
}

SeedTrace parse_seed_line(const std::string& json_line, std::size_t lineno) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_line);
    } catch (const nlohmann::json::parse_error& e) {
        throw SeedParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!j.is_object() || !j.contains("dst") || !j.contains("hops"))
        throw SeedParseError("record must be an object with 'dst' and 'hops'", lineno);
    SeedTrace t;
    try {
        t.dst = parse_address(j.at("dst").get<std::string>());
    } catch (const std::exception& e) {
        throw SeedParseError(std::string("field 'dst': ") + e.what(), lineno);
    }
    const auto& hops = j.at("hops");
    if (!hops.is_array()) throw SeedParseError("field 'hops' must be an array", lineno);
    t.hops.reserve(hops.size());
    for (std::size_t i = 0; i < hops.size(); ++i) {
        const auto& h = hops[i];
        if (h.is_null()) {
            t.hops.push_back(std::nullopt);
        } else if (h.is_string()) {
            try {
                t.hops.push_back(parse_address(h.get<std::string>()));
            } catch (const std::exception& e) {
                throw SeedParseError("field 'hops[" + std::to_string(i) + "]': " + e.what(), lineno);
            }
        } else {
            throw SeedParseError("field 'hops[" + std::to_string(i) + "]' must be string or null", lineno);
        }
    }
    return t;
}

std::vector<SeedTrace> parse_seed_file(std::istream& in) {
    std::vector<SeedTrace> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_seed_line(line, lineno));
    }
    return out;
}

std::vector<SeedTrace> parse_seed_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open seed file: " + path);
    return parse_seed_file(in);
}

CandidateSet discover_init(const std::vector<SeedTrace>& traces) {
    // density[last hop] = set of destination /48s that produced it
    std::unordered_map<Address128, std::set<Prefix>, Address128Hash> density;
    for (const auto& t : traces) {
        auto lh = t.last_responsive_hop();
        if (!lh) continue; // all-anonymous traces carry no signal
        density[*lh].insert(subnet_id(t.dst, 48));
    }
    CandidateSet out;
    for (const auto& [lh, dst48s] : density) {
        if (dst48s.size() != 1) continue;
        const Prefix& p = *dst48s.begin();
        out.prefixes.insert(p);
        out.provenance[p].insert(lh);
    }
    return out;
}

} // namespace edgy
