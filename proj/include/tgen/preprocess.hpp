#ifndef TGEN_PREPROCESS_HPP
#define TGEN_PREPROCESS_HPP

#include <string>
#include <vector>

#include "tgen/mathutil.hpp"
#include "tgen/trace_io.hpp"

namespace tgen {

// Operational ranges for raw values; applied before the log transform and
// again after the inverse transform.
struct ClipConfig {
  double payload_min = 1.0;      // bytes; also absorbs zero-payload packets
  double payload_max = 65535.0;  // MTU bound
  double iat_min = 1e-7;         // seconds
  double iat_max = 3600.0;       // practical timeout
};

// Fitted log-space moments plus the tail threshold and flow-length moments.
// The invertible bridge between raw packets and model space.
struct Normalizer {
  Vec2 m{};                         // mean of (ln payload, ln iat), training packets
  Vec2 r{};                         // std of the same, population convention
  double tail_log_threshold = 0.0;  // empirical tail quantile of ln(iat)
  double tail_norm_threshold = 0.0; // (tail_log_threshold - m[1]) / r[1]
  double flow_len_mean = 0.0;       // mean of ln(flow length) over training flows
  double flow_len_std = 1.0;
  ClipConfig clip;
};

// Dataset view in normalized space; xi and id are per-flow, aligned with z.
struct NormalizedFlows {
  std::vector<std::vector<Vec2>> z;
  std::vector<double> xi;
  std::vector<std::string> ids;
};

Packet clip_packet(const ClipConfig& clip, const Packet& p);

// Fits all moments on the clipped training data. Throws DataError when a
// packet coordinate or the flow lengths have zero variance.
Normalizer fit_normalizer(const TraceDataset& train, const ClipConfig& clip,
                          double tail_quantile = 0.998);

// z = (ln(clip(p)) - m) / r, componentwise.
Vec2 transform(const Normalizer& norm, const Packet& p);

// p = clip(exp(z * r + m)); exact inverse of transform for in-range packets.
Packet inverse_transform(const Normalizer& norm, const Vec2& z);

// xi = (ln L - flow_len_mean) / flow_len_std.
double flow_length_feature(const Normalizer& norm, std::size_t flow_length);

NormalizedFlows normalize_dataset(const Normalizer& norm, const TraceDataset& ds);

}  // namespace tgen

#endif  // TGEN_PREPROCESS_HPP
