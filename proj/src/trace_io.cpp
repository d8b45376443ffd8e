#include "tgen/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "tgen/errors.hpp"
#include "tgen/rng.hpp"

namespace tgen {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

void format_double(std::ostream& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

std::size_t TraceDataset::total_packets() const {
  std::size_t n = 0;
  for (const auto& f : flows) n += f.packets.size();
  return n;
}

TraceDataset parse_trace(std::istream& in) {
  TraceDataset ds;
  std::unordered_map<std::string, std::size_t> index_by_id;

  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;

    const auto fields = split_fields(stripped);
    if (fields.size() != 3) {
      throw ParseError("expected 3 comma-separated columns, got " + std::to_string(fields.size()),
                       line_no);
    }

    double payload = 0.0, iat = 0.0;
    const bool numeric = parse_double(fields[1], payload) && parse_double(fields[2], iat);
    if (first_row && !numeric) {
      // Header row.
      first_row = false;
      continue;
    }
    first_row = false;
    if (!numeric) {
      throw ParseError("non-numeric payload or iat field", line_no);
    }
    if (payload < 0.0) {
      throw DataError("negative payload at line " + std::to_string(line_no));
    }
    if (iat < 0.0) {
      throw DataError("negative iat at line " + std::to_string(line_no));
    }

    const std::string& id = fields[0];
    auto it = index_by_id.find(id);
    if (it == index_by_id.end()) {
      it = index_by_id.emplace(id, ds.flows.size()).first;
      ds.flows.push_back(Flow{id, {}});
    }
    ds.flows[it->second].packets.push_back(Packet{payload, iat});
  }
  return ds;
}

TraceDataset load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file: " + path);
  return parse_trace(in);
}

void serialize_trace(const TraceDataset& ds, std::ostream& out) {
  for (const auto& flow : ds.flows) {
    for (const auto& pkt : flow.packets) {
      out << flow.id << ',';
      format_double(out, pkt.payload);
      out << ',';
      format_double(out, pkt.iat);
      out << '\n';
    }
  }
}

void save_trace(const TraceDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace file: " + path);
  serialize_trace(ds, out);
  if (!out) throw IoError("short write on trace file: " + path);
}

std::pair<TraceDataset, TraceDataset> split_by_flow(const TraceDataset& ds, double test_fraction,
                                                    std::uint64_t seed) {
  const std::size_t n = ds.flows.size();
  if (n < 2) throw DataError("split_by_flow needs at least 2 flows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError("test_fraction must lie in (0, 1)");
  }

  auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  // Seeded Fisher-Yates over flow indices; membership depends only on
  // (seed, flow order).
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = derive_rng(seed, "split_by_flow");
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng.below(i + 1);
    std::swap(order[i], order[j]);
  }

  std::vector<bool> in_test(n, false);
  for (std::size_t i = 0; i < n_test; ++i) in_test[order[i]] = true;

  TraceDataset train, test;
  for (std::size_t i = 0; i < n; ++i) {
    (in_test[i] ? test : train).flows.push_back(ds.flows[i]);
  }
  return {std::move(train), std::move(test)};
}

SummaryStats summarize(const TraceDataset& ds) {
  if (ds.empty()) throw DataError("summarize: empty dataset");
  SummaryStats s;
  s.total_flows = ds.flows.size();
  double duration_sum = 0.0;
  for (const auto& flow : ds.flows) {
    s.total_packets += flow.packets.size();
    double flow_duration = 0.0;
    for (const auto& pkt : flow.packets) {
      s.total_volume += pkt.payload;
      flow_duration += pkt.iat;
    }
    duration_sum += flow_duration;
  }
  s.avg_pkts_per_flow = static_cast<double>(s.total_packets) / static_cast<double>(s.total_flows);
  s.avg_flow_duration = duration_sum / static_cast<double>(s.total_flows);
  return s;
}

}  // namespace tgen
