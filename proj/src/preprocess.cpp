#include "tgen/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "tgen/errors.hpp"

namespace tgen {

Packet clip_packet(const ClipConfig& clip, const Packet& p) {
  return Packet{std::clamp(p.payload, clip.payload_min, clip.payload_max),
                std::clamp(p.iat, clip.iat_min, clip.iat_max)};
}

Normalizer fit_normalizer(const TraceDataset& train, const ClipConfig& clip,
                          double tail_quantile) {
  if (!(clip.payload_min > 0.0 && clip.payload_min <= clip.payload_max))
    throw DataError("fit_normalizer: invalid payload clip range");
  if (!(clip.iat_min > 0.0 && clip.iat_min < clip.iat_max))
    throw DataError("fit_normalizer: invalid iat clip range");
  if (!(tail_quantile > 0.0 && tail_quantile <= 1.0))
    throw DataError("fit_normalizer: tail_quantile must lie in (0, 1]");

  std::vector<double> log_payload, log_iat, log_len;
  log_len.reserve(train.flows.size());
  for (const auto& flow : train.flows) {
    if (flow.packets.empty()) continue;
    log_len.push_back(std::log(static_cast<double>(flow.packets.size())));
    for (const auto& raw : flow.packets) {
      const Packet p = clip_packet(clip, raw);
      log_payload.push_back(std::log(p.payload));
      log_iat.push_back(std::log(p.iat));
    }
  }
  if (log_payload.size() < 2) throw DataError("fit_normalizer: need at least 2 training packets");

  Normalizer norm;
  norm.clip = clip;
  norm.m = {mean(log_payload), mean(log_iat)};
  const double var_payload = variance(log_payload);
  const double var_iat = variance(log_iat);
  if (var_payload <= 0.0) throw DataError("fit_normalizer: degenerate payload variance");
  if (var_iat <= 0.0) throw DataError("fit_normalizer: degenerate iat variance");
  norm.r = {std::sqrt(var_payload), std::sqrt(var_iat)};

  norm.tail_log_threshold = nearest_rank_quantile(log_iat, tail_quantile);
  norm.tail_norm_threshold = (norm.tail_log_threshold - norm.m[1]) / norm.r[1];

  norm.flow_len_mean = mean(log_len);
  const double var_len = variance(log_len);
  if (var_len <= 0.0) throw DataError("fit_normalizer: degenerate flow-length variance");
  norm.flow_len_std = std::sqrt(var_len);
  return norm;
}

Vec2 transform(const Normalizer& norm, const Packet& p) {
  const Packet c = clip_packet(norm.clip, p);
  return {(std::log(c.payload) - norm.m[0]) / norm.r[0],
          (std::log(c.iat) - norm.m[1]) / norm.r[1]};
}

Packet inverse_transform(const Normalizer& norm, const Vec2& z) {
  const Packet raw{std::exp(z[0] * norm.r[0] + norm.m[0]),
                   std::exp(z[1] * norm.r[1] + norm.m[1])};
  return clip_packet(norm.clip, raw);
}

double flow_length_feature(const Normalizer& norm, std::size_t flow_length) {
  return (std::log(static_cast<double>(flow_length)) - norm.flow_len_mean) / norm.flow_len_std;
}

NormalizedFlows normalize_dataset(const Normalizer& norm, const TraceDataset& ds) {
  NormalizedFlows out;
  out.z.reserve(ds.flows.size());
  out.xi.reserve(ds.flows.size());
  out.ids.reserve(ds.flows.size());
  for (const auto& flow : ds.flows) {
    if (flow.packets.empty()) continue;
    std::vector<Vec2> zs;
    zs.reserve(flow.packets.size());
    for (const auto& p : flow.packets) zs.push_back(transform(norm, p));
    out.z.push_back(std::move(zs));
    out.xi.push_back(flow_length_feature(norm, flow.packets.size()));
    out.ids.push_back(flow.id);
  }
  return out;
}

}  // namespace tgen
