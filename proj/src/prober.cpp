#include "edgy/prober.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

namespace edgy {

std::optional<Address128> TraceResult::last_responsive_hop() const {
    for (auto it = hops.rbegin(); it != hops.rend(); ++it)
        if (it->has_value()) return *it;
    return std::nullopt;
}

int TraceResult::last_responsive_ttl() const {
    for (std::size_t i = hops.size(); i-- > 0;)
        if (hops[i].has_value()) return static_cast<int>(i) + 1;
    return 0;
}

std::optional<Address128> TraceResult::penultimate_responsive_hop() const {
    bool seen_last = false;
    for (auto it = hops.rbegin(); it != hops.rend(); ++it) {
        if (!it->has_value()) continue;
        if (seen_last) return *it;
        seen_last = true;
    }
    return std::nullopt;
}

std::optional<std::uint64_t> TraceResult::last_recv_ms() const {
    int ttl = last_responsive_ttl();
    if (ttl == 0) return std::nullopt;
    auto idx = static_cast<std::size_t>(ttl - 1);
    if (idx < recv_ms.size()) return recv_ms[idx];
    return std::nullopt;
}

void adapter_write_targets(const ProbeBatch& batch, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write target file: " + path);
    for (const auto& t : batch.targets) out << format_address(t) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<TraceResult> adapter_read_results(const std::string& path,
                                              const std::vector<Address128>& targets) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results file: " + path);
    std::unordered_map<Address128, TraceResult, Address128Hash> by_dst;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        SeedTrace st;
        try {
            st = parse_seed_line(line, lineno);
        } catch (const SeedParseError& e) {
            throw std::runtime_error("results file " + path + ": " + e.what());
        }
        TraceResult tr;
        tr.dst = st.dst;
        tr.hops = st.hops;
        // optional per-hop times
        try {
            auto j = nlohmann::json::parse(line);
            if (j.contains("recv_ms") && j["recv_ms"].is_array())
                for (const auto& v : j["recv_ms"])
                    tr.recv_ms.push_back(v.is_null() ? std::nullopt
                                                     : std::optional<std::uint64_t>(v.get<std::uint64_t>()));
        } catch (...) {
            // already validated above
        }
        by_dst[tr.dst] = std::move(tr);
    }
    std::vector<TraceResult> out;
    out.reserve(targets.size());
    for (const auto& t : targets) {
        auto it = by_dst.find(t);
        if (it != by_dst.end()) {
            out.push_back(it->second);
        } else {
            TraceResult anon;
            anon.dst = t;
            out.push_back(std::move(anon)); // missing target: fully anonymous
        }
    }
    return out;
}

void write_trace_jsonl(std::ostream& out, const TraceResult& t) {
    nlohmann::json j;
    j["dst"] = format_address(t.dst);
    auto hops = nlohmann::json::array();
    for (const auto& h : t.hops)
        hops.push_back(h ? nlohmann::json(format_address(*h)) : nlohmann::json(nullptr));
    j["hops"] = std::move(hops);
    if (!t.recv_ms.empty()) {
        auto times = nlohmann::json::array();
        for (const auto& m : t.recv_ms)
            times.push_back(m ? nlohmann::json(*m) : nlohmann::json(nullptr));
        j["recv_ms"] = std::move(times);
    }
    out << j.dump() << '\n';
}

AdapterProber::AdapterProber(std::string exchange_dir)
    : AdapterProber(std::move(exchange_dir), Options{}) {}

AdapterProber::AdapterProber(std::string exchange_dir, Options opts)
    : dir_(std::move(exchange_dir)), opts_(opts) {
    std::filesystem::create_directories(dir_);
}

std::vector<TraceResult> AdapterProber::probe(const ProbeBatch& batch) {
    if (batch.targets.size() > opts_.probe_budget && !opts_.authorized)
        throw std::runtime_error(
            "refusing to emit " + std::to_string(batch.targets.size()) +
            " targets (budget " + std::to_string(opts_.probe_budget) +
            "); pass --i-have-authorization to override");
    char name[32];
    std::snprintf(name, sizeof name, "batch_%06llu",
                  static_cast<unsigned long long>(batch_counter_++));
    auto targets_path = dir_ + "/" + name + ".targets";
    auto results_path = dir_ + "/" + name + ".results";
    if (!std::filesystem::exists(targets_path)) adapter_write_targets(batch, targets_path);
    if (!std::filesystem::exists(results_path))
        throw ProberUnavailable("awaiting results file " + results_path +
                                " (run the external tracer on " + targets_path + ")");
    return adapter_read_results(results_path, batch.targets);
}

} // namespace edgy
