// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

#include <json.hpp>

#include "slar/ht.hpp"

namespace slar {

// Self-describing container: 8-byte magic, little-endian uint64 header
// length, JSON header (tree topology, shape, ranks, payload layout, optional
// metadata), then the raw little-endian complex-double payload of every
// frame and transfer in node-id order. Round-trips are bit-exact.
void save_ht(std::ostream& out, const HTTensor& t, const nlohmann::json& meta);
void save_ht_file(const std::string& path, const HTTensor& t, const nlohmann::json& meta);

struct LoadedHt {
  HTTensor tensor;
  nlohmann::json meta;
};

LoadedHt load_ht(std::istream& in);
LoadedHt load_ht_file(const std::string& path);

}  // namespace slar
