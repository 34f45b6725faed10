// SPDX-License-Identifier: Apache-2.0
#include "slar/ht_io.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace slar {

namespace {

constexpr char kMagic[8] = {'S', 'L', 'H', 'T', '0', '0', '0', '1'};

void write_u64(std::ostream& out, u64 v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

u64 read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<u64>(buf[i]) << (8 * i);
  return v;
}

void write_doubles(std::ostream& out, const double* data, i64 count) {
  static_assert(sizeof(double) == 8);
  for (i64 i = 0; i < count; ++i) {
    u64 bits;
    std::memcpy(&bits, data + i, 8);
    write_u64(out, bits);
  }
}

void read_doubles(std::istream& in, double* data, i64 count) {
  for (i64 i = 0; i < count; ++i) {
    const u64 bits = read_u64(in);
    std::memcpy(data + i, &bits, 8);
  }
}

}  // namespace

void save_ht(std::ostream& out, const HTTensor& t, const nlohmann::json& meta) {
  const DimensionTree& tree = t.tree();
  nlohmann::json header;
  header["format"] = "ht-tensor";
  header["version"] = 1;
  header["shape"] = t.shape();
  nlohmann::json nodes = nlohmann::json::array();
  for (int id = 0; id < tree.num_nodes(); ++id) {
    const auto& n = tree.node(id);
    nodes.push_back({{"modes", n.modes}, {"left", n.left}, {"right", n.right}});
  }
  header["tree"] = nodes;
  header["ranks"] = t.ranks();
  nlohmann::json blocks = nlohmann::json::array();
  for (int id = 0; id < tree.num_nodes(); ++id) {
    const bool leaf = tree.node(id).leaf();
    const MatX& m = leaf ? t.frame(id) : t.transfer(id);
    blocks.push_back({{"node", id},
                      {"kind", leaf ? "leaf" : "transfer"},
                      {"rows", m.rows()},
                      {"cols", m.cols()}});
  }
  header["blocks"] = blocks;
  if (!meta.is_null()) header["meta"] = meta;

  const std::string header_str = header.dump();
  out.write(kMagic, 8);
  write_u64(out, header_str.size());
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (int id = 0; id < tree.num_nodes(); ++id) {
    const MatX& m = tree.node(id).leaf() ? t.frame(id) : t.transfer(id);
    write_doubles(out, reinterpret_cast<const double*>(m.data()), 2 * m.size());
  }
  if (!out) throw std::runtime_error("save_ht: write failure");
}

void save_ht_file(const std::string& path, const HTTensor& t, const nlohmann::json& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_ht: cannot open " + path);
  save_ht(out, t, meta);
}

LoadedHt load_ht(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("load_ht: bad magic");
  const u64 header_len = read_u64(in);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("load_ht: truncated header");
  const nlohmann::json header = nlohmann::json::parse(header_str);

  std::vector<DimensionTree::Node> nodes;
  for (const auto& jn : header.at("tree")) {
    DimensionTree::Node n;
    n.modes = jn.at("modes").get<std::vector<int>>();
    n.left = jn.at("left").get<int>();
    n.right = jn.at("right").get<int>();
    nodes.push_back(std::move(n));
  }
  for (size_t id = 0; id < nodes.size(); ++id) {
    if (nodes[id].left >= 0) {
      nodes[static_cast<size_t>(nodes[id].left)].parent = static_cast<int>(id);
      nodes[static_cast<size_t>(nodes[id].right)].parent = static_cast<int>(id);
    }
  }
  auto tree = std::make_shared<const DimensionTree>(DimensionTree::from_nodes(std::move(nodes)));
  const auto shape = header.at("shape").get<std::vector<i64>>();

  std::vector<MatX> frames(static_cast<size_t>(tree->num_nodes()));
  std::vector<MatX> transfers(static_cast<size_t>(tree->num_nodes()));
  for (const auto& jb : header.at("blocks")) {
    const int id = jb.at("node").get<int>();
    const i64 rows = jb.at("rows").get<i64>();
    const i64 cols = jb.at("cols").get<i64>();
    MatX m(rows, cols);
    read_doubles(in, reinterpret_cast<double*>(m.data()), 2 * m.size());
    if (jb.at("kind").get<std::string>() == "leaf")
      frames[static_cast<size_t>(id)] = std::move(m);
    else
      transfers[static_cast<size_t>(id)] = std::move(m);
  }
  if (!in) throw std::runtime_error("load_ht: truncated payload");

  LoadedHt loaded{HTTensor(std::move(tree), shape, std::move(frames), std::move(transfers)),
                  header.contains("meta") ? header.at("meta") : nlohmann::json()};
  return loaded;
}

LoadedHt load_ht_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_ht: cannot open " + path);
  return load_ht(in);
}

}  // namespace slar
