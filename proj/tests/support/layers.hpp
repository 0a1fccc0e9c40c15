#pragma once

#include <string>
#include <vector>

#include "coreplace/model.hpp"

namespace coreplace::testing {

inline LayerSpec conv(std::string id, std::int64_t c, std::int64_t k, std::int64_t kernel,
                      std::int64_t out, std::int64_t t = 4) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = LayerKind::kConv;
  l.in_channels = c;
  l.out_channels = k;
  l.kernel_h = l.kernel_w = kernel;
  l.out_h = l.out_w = out;
  l.timesteps = t;
  return l;
}

inline LayerSpec fc(std::string id, std::int64_t c, std::int64_t k, std::int64_t t = 4) {
  LayerSpec l = conv(std::move(id), c, k, 1, 1, t);
  l.kind = LayerKind::kFc;
  return l;
}

inline std::string data_path(const std::string& rel) {
  return std::string(COREPLACE_DATA_DIR) + "/" + rel;
}

}  // namespace coreplace::testing
