#include "edgy/campaign.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace edgy {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

int round_index_of_mask(int mask) {
    for (int i = 0; i < 4; ++i)
        if (kRoundMasks[i] == mask) return i;
    return -1;
}

} // namespace

std::string record_to_jsonl(const LastHopRecord& r) {
    nlohmann::json j;
    j["target"] = format_address(r.target);
    j["target_prefix"] = format_prefix(r.target_prefix);
    j["round"] = r.round_mask;
    j["lasthop"] = format_address(r.lasthop);
    j["penultimate"] = r.penultimate ? nlohmann::json(format_address(*r.penultimate))
                                     : nlohmann::json(nullptr);
    j["hop_count"] = r.hop_count;
    j["recv_ms"] = r.recv_ms;
    return j.dump();
}

LastHopRecord record_from_jsonl(const std::string& line, std::size_t lineno) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("record line " + std::to_string(lineno) + ": " + e.what());
    }
    LastHopRecord r;
    try {
        r.target = parse_address(j.at("target").get<std::string>());
        r.target_prefix = parse_prefix(j.at("target_prefix").get<std::string>());
        r.round_mask = j.at("round").get<int>();
        r.lasthop = parse_address(j.at("lasthop").get<std::string>());
        if (j.contains("penultimate") && !j["penultimate"].is_null())
            r.penultimate = parse_address(j["penultimate"].get<std::string>());
        r.hop_count = j.value("hop_count", 0);
        r.recv_ms = j.value("recv_ms", std::uint64_t{0});
    } catch (const std::exception& e) {
        throw std::runtime_error("record line " + std::to_string(lineno) + ": " + e.what());
    }
    return r;
}

std::vector<LastHopRecord> read_records_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open records file: " + path);
    std::vector<LastHopRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(record_from_jsonl(line, lineno));
    }
    return out;
}

const char* to_string(PrefixStatus s) {
    switch (s) {
        case PrefixStatus::pending: return "pending";
        case PrefixStatus::active: return "active";
        case PrefixStatus::stopped: return "stopped";
        case PrefixStatus::exhausted: return "exhausted";
    }
    return "?";
}

void CampaignState::observe(const Address128& lasthop, const Address128& target) {
    auto& obs = observations[lasthop];
    if (obs.distinct_targets == 0) {
        obs.distinct_targets = 1;
        obs.first_target = target;
    } else if (obs.distinct_targets == 1 && obs.first_target != target) {
        obs.distinct_targets = 2;
    }
}

bool CampaignState::is_prefix_unique(const Address128& lasthop) const {
    auto it = observations.find(lasthop);
    return it != observations.end() && it->second.distinct_targets == 1;
}

std::string CampaignState::to_json() const {
    nlohmann::json j;
    j["format_version"] = kFormatVersion;
    j["rng_seed"] = rng_seed;
    j["config"] = {{"eta1", config.eta1},
                   {"eta2", config.eta2},
                   {"rng_seed", config.rng_seed},
                   {"max_pps", config.max_pps},
                   {"spoof_check", config.spoof_check},
                   {"max_ttl", config.max_ttl}};
    j["interrupted"] = interrupted;
    j["interrupt_reason"] = interrupt_reason;
    auto parr = nlohmann::json::array();
    for (const auto& [p, st] : prefixes) {
        nlohmann::json pj;
        pj["prefix"] = format_prefix(p);
        pj["status"] = to_string(st.status);
        pj["current_mask"] = st.current_mask;
        pj["t"] = st.t;
        pj["completed_rounds"] = st.completed_rounds;
        pj["probes_issued"] = st.probes_issued;
        auto darr = nlohmann::json::array();
        for (const auto& d : st.decisions)
            darr.push_back({{"mask", d.mask}, {"unique", d.unique_lasthops}, {"advanced", d.advanced}});
        pj["decisions"] = std::move(darr);
        auto lharr = nlohmann::json::array();
        for (const auto& round_set : st.lasthops_per_round) {
            auto sarr = nlohmann::json::array();
            for (const auto& a : round_set) sarr.push_back(format_address(a));
            lharr.push_back(std::move(sarr));
        }
        pj["lasthops"] = std::move(lharr);
        parr.push_back(std::move(pj));
    }
    j["prefixes"] = std::move(parr);
    auto oarr = nlohmann::json::array();
    // deterministic order for byte-stable checkpoints
    std::vector<std::pair<Address128, Observation>> obs(observations.begin(), observations.end());
    std::sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [a, o] : obs)
        oarr.push_back({format_address(a), o.distinct_targets, format_address(o.first_target)});
    j["observations"] = std::move(oarr);
    return j.dump();
}

CampaignState CampaignState::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("format_version").get<int>() != kFormatVersion)
        throw std::runtime_error("unsupported checkpoint format_version " +
                                 std::to_string(j["format_version"].get<int>()));
    CampaignState s;
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    const auto& cj = j.at("config");
    s.config.eta1 = cj.at("eta1").get<std::size_t>();
    s.config.eta2 = cj.at("eta2").get<std::size_t>();
    s.config.rng_seed = cj.at("rng_seed").get<std::uint64_t>();
    s.config.max_pps = cj.at("max_pps").get<double>();
    s.config.spoof_check = cj.at("spoof_check").get<bool>();
    s.config.max_ttl = cj.at("max_ttl").get<int>();
    s.interrupted = j.value("interrupted", false);
    s.interrupt_reason = j.value("interrupt_reason", std::string{});
    for (const auto& pj : j.at("prefixes")) {
        PrefixState st;
        st.prefix = parse_prefix(pj.at("prefix").get<std::string>());
        std::string status = pj.at("status").get<std::string>();
        if (status == "pending") st.status = PrefixStatus::pending;
        else if (status == "active") st.status = PrefixStatus::active;
        else if (status == "stopped") st.status = PrefixStatus::stopped;
        else if (status == "exhausted") st.status = PrefixStatus::exhausted;
        else throw std::runtime_error("unknown prefix status '" + status + "'");
        st.current_mask = pj.at("current_mask").get<int>();
        st.t = pj.at("t").get<std::uint64_t>();
        st.completed_rounds = pj.at("completed_rounds").get<int>();
        st.probes_issued = pj.at("probes_issued").get<std::uint64_t>();
        for (const auto& dj : pj.at("decisions"))
            st.decisions.push_back({dj.at("mask").get<int>(), dj.at("unique").get<std::size_t>(),
                                    dj.at("advanced").get<bool>()});
        for (const auto& sj : pj.at("lasthops")) {
            std::set<Address128> round_set;
            for (const auto& a : sj) round_set.insert(parse_address(a.get<std::string>()));
            st.lasthops_per_round.push_back(std::move(round_set));
        }
        s.prefixes.emplace(st.prefix, std::move(st));
    }
    for (const auto& oj : j.at("observations")) {
        Observation o;
        o.distinct_targets = oj.at(1).get<int>();
        o.first_target = parse_address(oj.at(2).get<std::string>());
        s.observations.emplace(parse_address(oj.at(0).get<std::string>()), o);
    }
    return s;
}

std::uint64_t derive_prefix_offset(std::uint64_t rng_seed, const Prefix& p48) {
    return splitmix64(splitmix64(rng_seed ^ p48.base.hi) ^ p48.base.lo ^
                      static_cast<std::uint64_t>(p48.length));
}

std::vector<Address128> generate_round_targets(const Prefix& p48, int mask, std::uint64_t t) {
    if (round_index_of_mask(mask) < 0)
        throw std::invalid_argument("mask " + std::to_string(mask) + " not in {56,60,62,64}");
    std::uint64_t count = 1ULL << (mask - 48);
    std::vector<Address128> out;
    out.reserve(count);
    Address128 offset{0, t};
    for (std::uint64_t i = 0; i < count; ++i) {
        Address128 step = mask <= 64 ? Address128{i << (64 - mask), 0} : Address128{0, 0};
        out.push_back(p48.base + step + offset);
    }
    return out;
}

RoundOutcome evaluate_round(const Prefix& p48, int round_mask,
                            const std::map<Address128, Address128>& filtered_lasthops,
                            const CampaignConfig& cfg,
                            const std::function<bool(const Address128&)>& is_prefix_unique) {
    switch (round_mask) {
        case 56:
        case 60: {
            std::set<Address128> unique;
            for (const auto& [tgt, lh] : filtered_lasthops) unique.insert(lh);
            std::size_t eta = round_mask == 56 ? cfg.eta1 : cfg.eta2;
            return unique.size() > eta ? RoundOutcome::advance : RoundOutcome::stop;
        }
        case 62: {
            // Advance iff some /60 shows four distinct, campaign-wide
            // prefix-unique last hops across its four /62 targets.
            std::map<Prefix, std::set<Address128>> per60;
            std::map<Prefix, std::size_t> per60_targets;
            for (const auto& [tgt, lh] : filtered_lasthops) {
                Prefix p60 = subnet_id(tgt, 60);
                ++per60_targets[p60];
                if (is_prefix_unique(lh)) per60[p60].insert(lh);
            }
            for (const auto& [p60, uniques] : per60)
                if (uniques.size() == 4 && per60_targets[p60] == 4) return RoundOutcome::advance;
            return RoundOutcome::stop;
        }
        case 64:
            return RoundOutcome::stop; // terminal round
        default:
            throw std::invalid_argument("mask " + std::to_string(round_mask) + " not in {56,60,62,64}");
    }
    (void)p48;
}

CampaignState run_campaign(const CandidateSet& candidates, Prober& prober,
                           const CampaignConfig& cfg, const AliasSet& aliases,
                           const AsnTable& routable, const CampaignIo& io,
                           std::optional<CampaignState> resume) {
    CampaignState state;
    if (resume) {
        state = std::move(*resume);
        if (state.config.rng_seed != cfg.rng_seed || state.config.eta1 != cfg.eta1 ||
            state.config.eta2 != cfg.eta2)
            throw std::runtime_error("resume state was produced with a different configuration");
        state.interrupted = false;
        state.interrupt_reason.clear();
    } else {
        state.rng_seed = cfg.rng_seed;
        state.config = cfg;
        for (const auto& p : candidates.prefixes) {
            PrefixState st;
            st.prefix = p;
            st.status = PrefixStatus::active;
            st.current_mask = kRoundMasks[0];
            st.t = derive_prefix_offset(cfg.rng_seed, p);
            state.prefixes.emplace(p, st);
        }
    }

    for (int round = 0; round < 4; ++round) {
        int mask = kRoundMasks[round];
        prober.begin_round(round);
        for (auto& [prefix, st] : state.prefixes) {
            if (st.status != PrefixStatus::active) continue;
            if (st.completed_rounds > round) continue; // resume: round already done
            st.current_mask = mask;

            ProbeBatch batch;
            batch.targets = generate_round_targets(prefix, mask, st.t);
            batch.max_ttl = cfg.max_ttl;
            batch.rate_hint = cfg.max_pps;
            std::vector<TraceResult> results;
            try {
                results = prober.probe(batch);
            } catch (const ProberUnavailable& e) {
                state.interrupted = true;
                state.interrupt_reason = e.what();
                if (io.save_state) io.save_state(state);
                return state;
            }
            st.probes_issued += batch.targets.size();

            std::map<Address128, Address128> kept; // target -> lasthop
            std::vector<LastHopRecord> records;
            std::set<Address128> unique;
            for (std::size_t i = 0; i < results.size(); ++i) {
                const auto& tr = results[i];
                auto lh = tr.last_responsive_hop();
                if (!lh) continue; // anonymous: contributes nothing
                FilterOptions fopts;
                fopts.spoof_check = cfg.spoof_check;
                fopts.trace_hops = tr.hops;
                auto verdict = classify_response(batch.targets[i], *lh, tr.last_responsive_ttl(),
                                                aliases, routable, fopts);
                if (!verdict.kept) continue;
                kept[batch.targets[i]] = *lh;
                unique.insert(*lh);
                state.observe(*lh, batch.targets[i]);
                LastHopRecord rec;
                rec.target = batch.targets[i];
                rec.target_prefix = prefix;
                rec.round_mask = mask;
                rec.lasthop = *lh;
                rec.penultimate = tr.penultimate_responsive_hop();
                rec.hop_count = tr.last_responsive_ttl();
                rec.recv_ms = tr.last_recv_ms().value_or(0);
                records.push_back(rec);
            }

            auto outcome = evaluate_round(prefix, mask, kept, cfg,
                                          [&](const Address128& a) { return state.is_prefix_unique(a); });
            st.lasthops_per_round.push_back(std::move(unique));
            st.decisions.push_back({mask, st.lasthops_per_round.back().size(),
                                    outcome == RoundOutcome::advance});
            st.completed_rounds = round + 1;
            if (outcome == RoundOutcome::advance) {
                st.current_mask = round + 1 < 4 ? kRoundMasks[round + 1] : mask;
            } else {
                st.status = mask == 64 ? PrefixStatus::exhausted : PrefixStatus::stopped;
            }

            if (io.emit_records) io.emit_records(records);
            if (io.save_state) io.save_state(state);
        }
    }
    return state;
}

} // namespace edgy
