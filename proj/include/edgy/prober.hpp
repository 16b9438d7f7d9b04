#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "edgy/address.hpp"
#include "edgy/seed.hpp"

namespace edgy {

struct ProbeBatch {
    std::vector<Address128> targets;
    int max_ttl = 32;
    int min_ttl = 1;
    double rate_hint = 10000.0; // probes/second, advisory
};

/// Same shape as SeedTrace plus optional per-hop receive times.
struct TraceResult {
    Address128 dst;
    std::vector<std::optional<Address128>> hops;
    std::vector<std::optional<std::uint64_t>> recv_ms;

    std::optional<Address128> last_responsive_hop() const;
    int last_responsive_ttl() const;
    std::optional<Address128> penultimate_responsive_hop() const;
    std::optional<std::uint64_t> last_recv_ms() const;
};

/// Raised when a backend cannot currently serve a batch; the campaign marks
/// the round incomplete and resumable.
struct ProberUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Probe contract shared by the simulator and the external-tracer adapter.
/// Results are order-aligned with batch targets; |results| == |targets|.
class Prober {
public:
    virtual ~Prober() = default;
    /// Called by the campaign at each global round boundary (0-based).
    virtual void begin_round(int /*round_index*/) {}
    virtual std::vector<TraceResult> probe(const ProbeBatch& batch) = 0;
};

/// One textual address per line, newline-terminated.
void adapter_write_targets(const ProbeBatch& batch, const std::string& path);

/// Parses results in the seed-trace JSON Lines format; targets absent from
/// the file come back fully anonymous. Unknown JSON fields are ignored.
std::vector<TraceResult> adapter_read_results(const std::string& path,
                                              const std::vector<Address128>& targets);

void write_trace_jsonl(std::ostream& out, const TraceResult& t);

/// File-exchange backend for an external high-speed tracer. probe() writes
/// `batch_NNNN.targets` into the exchange directory and expects
/// `batch_NNNN.results` to already exist; otherwise it throws
/// ProberUnavailable so the operator can run the tracer and resume.
class AdapterProber : public Prober {
public:
    struct Options {
        std::uint64_t probe_budget = 1'000'000; // refuse larger target lists...
        bool authorized = false;                // ...unless explicitly authorized
    };

    explicit AdapterProber(std::string exchange_dir);
    AdapterProber(std::string exchange_dir, Options opts);

    std::vector<TraceResult> probe(const ProbeBatch& batch) override;

private:
    std::string dir_;
    Options opts_;
    std::uint64_t batch_counter_ = 0;
};

} // namespace edgy
