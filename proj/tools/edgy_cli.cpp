#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "edgy/analysis.hpp"
#include "edgy/campaign.hpp"
#include "edgy/filter.hpp"
#include "edgy/prober.hpp"
#include "edgy/seed.hpp"
#include "edgy/sim.hpp"

namespace fs = std::filesystem;
using namespace edgy;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

std::vector<Prefix> read_prefix_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open prefix list: " + path);
    std::vector<Prefix> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        try {
            out.push_back(parse_prefix(tok));
        } catch (const std::exception& e) {
            throw SeedParseError(e.what(), lineno);
        }
    }
    return out;
}

void atomic_write(const std::string& path, const std::string& content) {
    auto tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    fs::rename(tmp, path);
}

struct RunOptions {
    std::string candidates_file;
    std::string backend = "sim";
    std::string sim_spec;
    std::uint64_t sim_seed = 1;
    std::string adapter_dir;
    std::string records_file;
    std::string checkpoint_dir;
    std::string alias_file;
    std::string pfx2as_file;
    bool resume = false;
    bool spoof_check = false;
    bool authorized = false;
    std::uint64_t probe_budget = 1'000'000;
    CampaignConfig cfg;
};

void emit_effective_config(const RunOptions& o) {
    if (o.checkpoint_dir.empty()) return;
    nlohmann::json j;
    j["subcommand"] = "run";
    j["candidates"] = o.candidates_file;
    j["backend"] = o.backend;
    j["sim_spec"] = o.sim_spec;
    j["sim_seed"] = o.sim_seed;
    j["adapter_dir"] = o.adapter_dir;
    j["records"] = o.records_file;
    j["checkpoint_dir"] = o.checkpoint_dir;
    j["alias_file"] = o.alias_file;
    j["pfx2as_file"] = o.pfx2as_file;
    j["eta1"] = o.cfg.eta1;
    j["eta2"] = o.cfg.eta2;
    j["rng_seed"] = o.cfg.rng_seed;
    j["max_pps"] = o.cfg.max_pps;
    j["spoof_check"] = o.spoof_check;
    atomic_write(o.checkpoint_dir + "/effective-config.json", j.dump(2) + "\n");
}

int cmd_init(const std::string& seed_file, const std::string& out_dir) {
    auto traces = parse_seed_file(seed_file);
    auto candidates = discover_init(traces);
    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/candidates.txt", std::ios::trunc);
        for (const auto& p : candidates.prefixes) out << format_prefix(p) << '\n';
    }
    {
        nlohmann::json prov;
        for (const auto& [p, lhs] : candidates.provenance) {
            auto arr = nlohmann::json::array();
            for (const auto& lh : lhs) arr.push_back(format_address(lh));
            prov[format_prefix(p)] = std::move(arr);
        }
        std::ofstream out(out_dir + "/provenance.json", std::ios::trunc);
        out << prov.dump(2) << '\n';
    }
    std::cerr << "init: " << traces.size() << " traces -> " << candidates.prefixes.size()
              << " candidate /48s\n";
    return kExitOk;
}

int cmd_run(const RunOptions& o) {
    CandidateSet candidates;
    for (const auto& p : read_prefix_list(o.candidates_file)) {
        if (p.length != 48)
            throw SeedParseError("candidate must be a /48: " + format_prefix(p), 0);
        candidates.prefixes.insert(p);
    }

    AliasSet aliases;
    if (!o.alias_file.empty()) aliases = load_alias_file(o.alias_file);
    AsnTable routable;
    if (!o.pfx2as_file.empty()) {
        auto loaded = load_pfx2as_file(o.pfx2as_file);
        for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
        routable = std::move(loaded.table);
    }

    std::unique_ptr<SimNetwork> net;
    std::unique_ptr<Prober> prober;
    if (o.backend == "sim") {
        if (o.sim_spec.empty()) throw SeedParseError("--backend sim requires --sim-spec", 0);
        net = std::make_unique<SimNetwork>(build_sim_network(o.sim_spec, o.sim_seed));
        prober = std::make_unique<SimProber>(*net);
    } else if (o.backend == "adapter") {
        if (o.adapter_dir.empty()) throw SeedParseError("--backend adapter requires --adapter-dir", 0);
        AdapterProber::Options aopts;
        aopts.probe_budget = o.probe_budget;
        aopts.authorized = o.authorized;
        prober = std::make_unique<AdapterProber>(o.adapter_dir, aopts);
    } else {
        throw SeedParseError("unknown backend '" + o.backend + "'", 0);
    }

    std::optional<CampaignState> resume_state;
    std::string state_path =
        o.checkpoint_dir.empty() ? std::string{} : o.checkpoint_dir + "/state.json";
    if (!o.checkpoint_dir.empty()) fs::create_directories(o.checkpoint_dir);
    if (o.resume) {
        if (state_path.empty() || !fs::exists(state_path))
            throw std::runtime_error("--resume requires an existing checkpoint in --checkpoint-dir");
        std::ifstream in(state_path);
        std::ostringstream ss;
        ss << in.rdbuf();
        resume_state = CampaignState::from_json(ss.str());
    }
    emit_effective_config(o);

    std::unique_ptr<std::ofstream> file_out;
    std::ostream* records_out = &std::cout;
    if (!o.records_file.empty()) {
        file_out = std::make_unique<std::ofstream>(
            o.records_file, o.resume ? std::ios::app : std::ios::trunc);
        if (!*file_out) throw std::runtime_error("cannot write records file: " + o.records_file);
        records_out = file_out.get();
    }

    CampaignIo io;
    io.emit_records = [&](std::span<const LastHopRecord> recs) {
        for (const auto& r : recs) *records_out << record_to_jsonl(r) << '\n';
        records_out->flush();
    };
    if (!state_path.empty())
        io.save_state = [&](const CampaignState& s) { atomic_write(state_path, s.to_json()); };

    CampaignConfig cfg = o.cfg;
    cfg.spoof_check = o.spoof_check;
    auto state = run_campaign(candidates, *prober, cfg, aliases, routable, io, resume_state);
    if (state.interrupted) {
        std::cerr << "run interrupted: " << state.interrupt_reason << "\n"
                  << "state saved; re-run with --resume when results are available\n";
        return kExitRuntime;
    }
    std::size_t discovered = 0;
    for (const auto& [p, st] : state.prefixes)
        for (const auto& s : st.lasthops_per_round) discovered += s.size();
    std::cerr << "run complete: " << state.prefixes.size() << " prefixes, " << discovered
              << " last-hop set entries\n";
    return kExitOk;
}

int cmd_analyze(const std::string& records_file, const std::string& traces_file,
                const std::string& pfx2as_file, const std::string& out_dir) {
    std::vector<LastHopRecord> records;
    if (fs::exists(records_file) && fs::file_size(records_file) > 0)
        records = read_records_file(records_file);
    else if (!fs::exists(records_file))
        throw std::runtime_error("cannot open records file: " + records_file);
    std::vector<SeedTrace> traces;
    if (!traces_file.empty()) traces = parse_seed_file(traces_file);
    AsnTable table;
    if (!pfx2as_file.empty()) table = load_pfx2as_file(pfx2as_file).table;
    auto bundle = analyze_records(records, traces, table);
    emit_report(bundle, out_dir);
    std::cerr << "analyze: " << records.size() << " records -> " << out_dir << "\n";
    return kExitOk;
}

int cmd_sweep(const std::string& records_file, const std::vector<std::size_t>& etas,
              std::uint64_t probes_next) {
    auto records = read_records_file(records_file);
    std::map<Prefix, std::set<Address128>> round1, round2;
    for (const auto& r : records) {
        if (r.round_mask == 56) round1[r.target_prefix].insert(r.lasthop);
        if (r.round_mask == 60) round2[r.target_prefix].insert(r.lasthop);
    }
    auto rows = eta_sweep(round1, etas, probes_next, round2.empty() ? nullptr : &round2);
    std::cout << "eta,selected_prefixes,unique_lasthops,probes_per_lasthop\n";
    for (const auto& row : rows)
        std::cout << row.eta << ',' << row.selected_prefixes << ',' << row.unique_lasthops << ','
                  << row.probes_per_lasthop << '\n';
    return kExitOk;
}

int cmd_detect(const std::string& dst_text, const std::string& sim_spec, std::uint64_t sim_seed,
               int max_mask, std::uint64_t rng_seed) {
    auto dst = parse_address(dst_text);
    auto net = build_sim_network(sim_spec, sim_seed);
    SimProber prober(net);
    auto res = detect_boundary(prober, dst, max_mask, rng_seed);
    std::cout << res.mask << '\n';
    if (res.capped) std::cerr << "detect: mask cap " << max_mask << " reached\n";
    return kExitOk;
}

int cmd_simspec_check(const std::string& sim_spec, std::uint64_t sim_seed) {
    auto net = build_sim_network(sim_spec, sim_seed);
    std::size_t prefixes = 0, regions = 0;
    for (const auto& p : net.providers()) {
        prefixes += p.prefixes.size();
        for (const auto& tp : p.prefixes) regions += tp.regions.size();
    }
    std::cout << "providers: " << net.providers().size() << "\nprefixes: " << prefixes
              << "\ndelegated_subnets: " << regions << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"edgy: multi-round IPv6 periphery discovery"};
    app.require_subcommand(1);
    app.set_config("--config")->description("key=value config file (flags win)");

    // init
    std::string seed_file, init_out = ".";
    auto* init = app.add_subcommand("init", "extract candidate /48s from seed traces");
    init->add_option("seed_file", seed_file, "seed traces (JSON Lines)")->required();
    init->add_option("--out-dir", init_out, "output directory");

    // run
    RunOptions run;
    auto* runc = app.add_subcommand("run", "run the four probing rounds");
    runc->add_option("--candidates", run.candidates_file, "candidate /48 list")->required();
    runc->add_option("--backend", run.backend, "sim | adapter");
    runc->add_option("--sim-spec", run.sim_spec, "simulator network spec (JSON)");
    runc->add_option("--sim-seed", run.sim_seed, "simulator seed");
    runc->add_option("--adapter-dir", run.adapter_dir, "file exchange directory");
    runc->add_option("--records", run.records_file, "records output (JSONL; default stdout)");
    runc->add_option("--checkpoint-dir", run.checkpoint_dir, "checkpoint directory");
    runc->add_option("--alias-file", run.alias_file, "aliased prefix list");
    runc->add_option("--pfx2as-file", run.pfx2as_file, "prefix to ASN file");
    runc->add_option("--eta1", run.cfg.eta1, "round-1 advance threshold");
    runc->add_option("--eta2", run.cfg.eta2, "round-2 advance threshold");
    runc->add_option("--rng-seed", run.cfg.rng_seed, "campaign RNG seed");
    runc->add_option("--max-pps", run.cfg.max_pps, "advisory probe rate");
    runc->add_option("--probe-budget", run.probe_budget, "adapter target-list budget");
    runc->add_flag("--spoof-check", run.spoof_check, "enable the spoof heuristic");
    runc->add_flag("--resume", run.resume, "resume from checkpoint");
    runc->add_flag("--i-have-authorization", run.authorized,
                   "confirm authorization for large adapter target lists");

    // analyze
    std::string an_records, an_traces, an_pfx2as, an_out = "report";
    auto* an = app.add_subcommand("analyze", "compute metrics from a records file");
    an->add_option("--records", an_records, "records JSONL")->required();
    an->add_option("--traces", an_traces, "full-trace corpus (JSON Lines)");
    an->add_option("--pfx2as", an_pfx2as, "prefix to ASN file");
    an->add_option("--out-dir", an_out, "report directory");

    // sweep
    std::string sw_records;
    std::vector<std::size_t> sw_etas{4, 8, 16, 32, 64, 128};
    std::uint64_t sw_probes = 4096;
    auto* sw = app.add_subcommand("sweep", "eta sensitivity sweep over round-1 results");
    sw->add_option("--records", sw_records, "records JSONL")->required();
    sw->add_option("--etas", sw_etas, "eta values (ascending)")->delimiter(',');
    sw->add_option("--probes-next", sw_probes, "probes per prefix in the next round");

    // detect
    std::string dt_dst, dt_spec;
    std::uint64_t dt_sim_seed = 1, dt_rng = 0;
    int dt_max_mask = 96;
    auto* dt = app.add_subcommand("detect", "subnet boundary detection for one destination");
    dt->add_option("--dst", dt_dst, "destination address")->required();
    dt->add_option("--sim-spec", dt_spec, "simulator network spec")->required();
    dt->add_option("--sim-seed", dt_sim_seed, "simulator seed");
    dt->add_option("--max-mask", dt_max_mask, "termination cap");
    dt->add_option("--rng-seed", dt_rng, "offset RNG seed");

    // simspec-check
    std::string sc_spec;
    std::uint64_t sc_seed = 1;
    auto* sc = app.add_subcommand("simspec-check", "validate a simulator spec");
    sc->add_option("sim_spec", sc_spec, "simulator network spec")->required();
    sc->add_option("--sim-seed", sc_seed, "simulator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (init->parsed()) return cmd_init(seed_file, init_out);
        if (runc->parsed()) return cmd_run(run);
        if (an->parsed()) return cmd_analyze(an_records, an_traces, an_pfx2as, an_out);
        if (sw->parsed()) return cmd_sweep(sw_records, sw_etas, sw_probes);
        if (dt->parsed()) return cmd_detect(dt_dst, dt_spec, dt_sim_seed, dt_max_mask, dt_rng);
        if (sc->parsed()) return cmd_simspec_check(sc_spec, sc_seed);
    } catch (const AddressParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const SeedParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
