#include "tgen/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "tgen/errors.hpp"

namespace tgen {

namespace {

constexpr char kMagic[] = "TGENMODEL";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_f32(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(bits & 0xff), static_cast<unsigned char>((bits >> 8) & 0xff),
      static_cast<unsigned char>((bits >> 16) & 0xff),
      static_cast<unsigned char>((bits >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

double read_f32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw DataError("model file truncated in binary section");
  const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                             (static_cast<std::uint32_t>(bytes[1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[2]) << 16) |
                             (static_cast<std::uint32_t>(bytes[3]) << 24);
  return static_cast<double>(std::bit_cast<float>(bits));
}

void write_block(std::ostream& out, std::span<const double> values) {
  for (double v : values) write_f32(out, v);
}

void read_block(std::istream& in, std::span<double> values) {
  for (double& v : values) v = read_f32(in);
}

void write_vec2s(std::ostream& out, std::span<const Vec2> values) {
  for (const auto& v : values) {
    write_f32(out, v[0]);
    write_f32(out, v[1]);
  }
}

void read_vec2s(std::istream& in, std::span<Vec2> values) {
  for (auto& v : values) {
    v[0] = read_f32(in);
    v[1] = read_f32(in);
  }
}

std::size_t hmm_float_count(const HmmParams& hmm) {
  const std::size_t K = hmm.K;
  return K + K * K + 2 * K + 2 * K;
}

}  // namespace

std::size_t mdn_payload_bytes(const MdnParams& mdn) { return mdn.param_count() * 4; }

void save_model(const ModelBundle& bundle, const std::string& path) {
  if (bundle.hmm.K != bundle.mdn_config.K)
    throw DataError("save_model: HMM state count does not match MDN conditioning dimension");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file: " + path);

  const Normalizer& n = bundle.normalizer;
  out << kMagic << ' ' << bundle.format_version << '\n';
  out << "K " << bundle.hmm.K << '\n';
  out << "idle_active " << (bundle.hmm.idle_active ? 1 : 0) << '\n';
  out << "mdn_M " << bundle.mdn_config.M << '\n';
  out << "mdn_H " << bundle.mdn_config.H << '\n';
  out << "sigma_floor " << fmt17(bundle.mdn_config.sigma_floor) << '\n';
  out << "nu_floor " << fmt17(bundle.mdn_config.nu_floor) << '\n';
  out << "norm_m " << fmt17(n.m[0]) << ' ' << fmt17(n.m[1]) << '\n';
  out << "norm_r " << fmt17(n.r[0]) << ' ' << fmt17(n.r[1]) << '\n';
  out << "tail_log_threshold " << fmt17(n.tail_log_threshold) << '\n';
  out << "tail_norm_threshold " << fmt17(n.tail_norm_threshold) << '\n';
  out << "flow_len_mean " << fmt17(n.flow_len_mean) << '\n';
  out << "flow_len_std " << fmt17(n.flow_len_std) << '\n';
  out << "clip_payload " << fmt17(n.clip.payload_min) << ' ' << fmt17(n.clip.payload_max) << '\n';
  out << "clip_iat " << fmt17(n.clip.iat_min) << ' ' << fmt17(n.clip.iat_max) << '\n';
  out << "idle_temperature " << fmt17(bundle.idle_temperature) << '\n';

  const std::size_t n_floats = hmm_float_count(bundle.hmm) + bundle.mdn.param_count();
  out << "binary " << n_floats << '\n';
  write_block(out, bundle.hmm.alpha);
  write_block(out, bundle.hmm.A);
  write_vec2s(out, bundle.hmm.mu);
  write_vec2s(out, bundle.hmm.sigma);
  for (const auto* block : {&bundle.mdn.w1, &bundle.mdn.b1, &bundle.mdn.w2, &bundle.mdn.b2,
                            &bundle.mdn.w3, &bundle.mdn.b3}) {
    write_block(out, *block);
  }
  if (!out) throw IoError("short write on model file: " + path);
}

ModelBundle load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);

  std::string magic;
  int version = -1;
  in >> magic >> version;
  if (magic != kMagic) throw DataError("not a model file: " + path);
  if (version != ModelBundle::kModelFormatVersion)
    throw DataError("unsupported model format version " + std::to_string(version));

  ModelBundle bundle;
  bundle.format_version = version;
  Normalizer& n = bundle.normalizer;

  std::size_t n_floats = 0;
  std::string key;
  bool saw_binary = false;
  while (in >> key) {
    if (key == "K") in >> bundle.hmm.K;
    else if (key == "idle_active") {
      int v = 0;
      in >> v;
      bundle.hmm.idle_active = v != 0;
    } else if (key == "mdn_M") in >> bundle.mdn_config.M;
    else if (key == "mdn_H") in >> bundle.mdn_config.H;
    else if (key == "sigma_floor") in >> bundle.mdn_config.sigma_floor;
    else if (key == "nu_floor") in >> bundle.mdn_config.nu_floor;
    else if (key == "norm_m") in >> n.m[0] >> n.m[1];
    else if (key == "norm_r") in >> n.r[0] >> n.r[1];
    else if (key == "tail_log_threshold") in >> n.tail_log_threshold;
    else if (key == "tail_norm_threshold") in >> n.tail_norm_threshold;
    else if (key == "flow_len_mean") in >> n.flow_len_mean;
    else if (key == "flow_len_std") in >> n.flow_len_std;
    else if (key == "clip_payload") in >> n.clip.payload_min >> n.clip.payload_max;
    else if (key == "clip_iat") in >> n.clip.iat_min >> n.clip.iat_max;
    else if (key == "idle_temperature") in >> bundle.idle_temperature;
    else if (key == "binary") {
      in >> n_floats;
      saw_binary = true;
      break;
    } else {
      throw DataError("unknown model header field: " + key);
    }
    if (!in) throw DataError("malformed model header near field: " + key);
  }
  if (!saw_binary || !in) throw DataError("model file missing binary section");
  in.get();  // newline before the raw block

  const int K = bundle.hmm.K;
  if (K < 1) throw DataError("model file: invalid state count");
  bundle.mdn_config.K = K;

  bundle.hmm.alpha.resize(K);
  bundle.hmm.A.resize(static_cast<std::size_t>(K) * K);
  bundle.hmm.mu.resize(K);
  bundle.hmm.sigma.resize(K);
  bundle.mdn = zero_mdn_params(bundle.mdn_config);

  if (n_floats != hmm_float_count(bundle.hmm) + bundle.mdn.param_count())
    throw DataError("model file: binary float count does not match header dimensions");

  read_block(in, bundle.hmm.alpha);
  read_block(in, bundle.hmm.A);
  read_vec2s(in, bundle.hmm.mu);
  read_vec2s(in, bundle.hmm.sigma);
  for (auto* block :
       {&bundle.mdn.w1, &bundle.mdn.b1, &bundle.mdn.w2, &bundle.mdn.b2, &bundle.mdn.w3,
        &bundle.mdn.b3}) {
    read_block(in, *block);
  }
  return bundle;
}

}  // namespace tgen
