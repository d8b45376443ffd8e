#ifndef TGEN_MODEL_IO_HPP
#define TGEN_MODEL_IO_HPP

#include <cstddef>
#include <string>

#include "tgen/hmm.hpp"
#include "tgen/mdn.hpp"
#include "tgen/preprocess.hpp"

namespace tgen {

// Everything needed to regenerate traffic: the fitted normalizer, the HMM,
// the MDN, and the generation defaults. On disk this is a text header
// (decimal fields, 17 significant digits) followed by one little-endian
// float32 block holding the HMM and MDN arrays in documented order.
struct ModelBundle {
  int format_version = kModelFormatVersion;
  Normalizer normalizer;
  HmmParams hmm;
  MdnConfig mdn_config;
  MdnParams mdn;
  double idle_temperature = 1.2;

  static constexpr int kModelFormatVersion = 1;
};

// Binary block layout: hmm.alpha (K), hmm.A (K*K row-major), hmm.mu (K*2),
// hmm.sigma (K*2), then mdn w1, b1, w2, b2, w3, b3.
void save_model(const ModelBundle& bundle, const std::string& path);
ModelBundle load_model(const std::string& path);

// Serialized float32 footprint of the MDN weights alone.
std::size_t mdn_payload_bytes(const MdnParams& mdn);

}  // namespace tgen

#endif  // TGEN_MODEL_IO_HPP
