#ifndef TGEN_TRACE_IO_HPP
#define TGEN_TRACE_IO_HPP

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace tgen {

// One packet: application payload in bytes and inter-arrival time in seconds.
// Raw domain; positivity is enforced later by the preprocessing clamp.
struct Packet {
  double payload = 0.0;
  double iat = 0.0;
};

// Ordered packets sharing one identifier. Ids are kept as opaque strings so
// any capture exporter's labels survive a round trip.
struct Flow {
  std::string id;
  std::vector<Packet> packets;
};

struct TraceDataset {
  std::vector<Flow> flows;

  std::size_t total_packets() const;
  bool empty() const { return flows.empty(); }
};

struct SummaryStats {
  std::size_t total_flows = 0;
  std::size_t total_packets = 0;
  double avg_pkts_per_flow = 0.0;
  double total_volume = 0.0;       // bytes
  double avg_flow_duration = 0.0;  // seconds, mean over flows of the iat sum
};

// Reads rows of the form `<flow_id>,<payload_bytes>,<iat_seconds>`.
// A header row is auto-detected (non-numeric payload or iat column) and
// skipped. Rows with equal flow id become one flow, first-appearance order;
// packet order within a flow follows the file.
// Throws ParseError for malformed rows, DataError for negative values.
TraceDataset parse_trace(std::istream& in);
TraceDataset load_trace(const std::string& path);

// Inverse of parse_trace; numbers use the shortest representation that
// round-trips exactly.
void serialize_trace(const TraceDataset& ds, std::ostream& out);
void save_trace(const TraceDataset& ds, const std::string& path);

// Seed-deterministic partition by flow. |test| = round(fraction * flows),
// clamped to [1, flows - 1]; original flow order is preserved inside each part.
std::pair<TraceDataset, TraceDataset> split_by_flow(const TraceDataset& ds, double test_fraction,
                                                    std::uint64_t seed);

SummaryStats summarize(const TraceDataset& ds);

}  // namespace tgen

#endif  // TGEN_TRACE_IO_HPP
