#include "droq/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "droq/errors.hpp"

namespace droq {
namespace {

using json = nlohmann::json;

const std::array<std::pair<nn::LayerKind, const char*>, 7> kKindNames{{
    {nn::LayerKind::Linear, "Linear"},
    {nn::LayerKind::ReLU, "ReLU"},
    {nn::LayerKind::Dropout, "Dropout"},
    {nn::LayerKind::LayerNorm, "LayerNorm"},
    {nn::LayerKind::LayerNormNoVR, "LayerNormNoVR"},
    {nn::LayerKind::BatchNorm, "BatchNorm"},
    {nn::LayerKind::GroupNorm, "GroupNorm"},
}};

nn::LayerKind kind_from_string(const std::string& s) {
  for (const auto& [kind, name] : kKindNames) {
    if (s == name) return kind;
  }
  throw ConfigError("checkpoint: unknown layer kind '" + s + "'");
}

void write_le_double(std::ostream& os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> bytes{};
  for (std::size_t i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
  os.write(bytes.data(), 8);
}

double read_le_double(std::istream& is) {
  std::array<unsigned char, 8> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), 8);
  if (!is) throw ConfigError("checkpoint: truncated payload");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void Checkpoint::add_network(std::string name, const nn::Network& net) {
  Section s;
  s.name = std::move(name);
  s.is_network = true;
  s.layers = net.layers();
  s.tensors = net.parameters();
  for (const auto& b : net.buffers()) s.tensors.push_back(b);
  for (auto& t : s.tensors) t.drop_grad();
  sections_.push_back(std::move(s));
}

void Checkpoint::add_tensors(std::string name, std::vector<nn::Tensor> tensors) {
  Section s;
  s.name = std::move(name);
  s.tensors = std::move(tensors);
  sections_.push_back(std::move(s));
}

void Checkpoint::save(const std::filesystem::path& path) const {
  json header;
  header["format_version"] = kFormatVersion;
  header["sections"] = json::array();
  for (const Section& s : sections_) {
    json js;
    js["name"] = s.name;
    js["kind"] = s.is_network ? "network" : "tensors";
    js["layers"] = json::array();
    for (const auto& l : s.layers) {
      js["layers"].push_back({{"kind", l.name()}, {"in", l.in}, {"out", l.out}, {"rate", l.rate},
                              {"groups", l.groups}});
    }
    js["shapes"] = json::array();
    for (const auto& t : s.tensors) js["shapes"].push_back({t.rows(), t.cols()});
    header["sections"].push_back(std::move(js));
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("checkpoint: cannot open " + path.string() + " for writing");
  os << header.dump() << '\n';
  for (const Section& s : sections_) {
    for (const auto& t : s.tensors) {
      for (double v : t.values()) write_le_double(os, v);
    }
  }
  if (!os) throw ConfigError("checkpoint: write failed for " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("checkpoint: cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("checkpoint: missing header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (header.value("format_version", -1) != kFormatVersion) {
    throw ConfigError("checkpoint: unsupported format_version");
  }
  Checkpoint ckpt;
  for (const auto& js : header.at("sections")) {
    Section s;
    s.name = js.at("name").get<std::string>();
    s.is_network = js.at("kind").get<std::string>() == "network";
    for (const auto& jl : js.at("layers")) {
      nn::LayerSpec l;
      l.kind = kind_from_string(jl.at("kind").get<std::string>());
      l.in = jl.at("in").get<std::size_t>();
      l.out = jl.at("out").get<std::size_t>();
      l.rate = jl.at("rate").get<double>();
      l.groups = jl.at("groups").get<std::size_t>();
      s.layers.push_back(l);
    }
    for (const auto& shape : js.at("shapes")) {
      s.tensors.emplace_back(shape.at(0).get<std::size_t>(), shape.at(1).get<std::size_t>());
    }
    ckpt.sections_.push_back(std::move(s));
  }
  for (Section& s : ckpt.sections_) {
    for (auto& t : s.tensors) {
      for (double& v : t.values()) v = read_le_double(is);
    }
  }
  if (is.peek() != std::ifstream::traits_type::eof()) throw ConfigError("checkpoint: trailing bytes");
  return ckpt;
}

bool Checkpoint::contains(std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return true;
  }
  return false;
}

std::vector<std::string> Checkpoint::section_names() const {
  std::vector<std::string> names;
  for (const auto& s : sections_) names.push_back(s.name);
  return names;
}

const Checkpoint::Section& Checkpoint::find(std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return s;
  }
  throw ConfigError("checkpoint: no section '" + std::string(name) + "'");
}

nn::Network Checkpoint::network(std::string_view name) const {
  const Section& s = find(name);
  if (!s.is_network) throw ConfigError("checkpoint: section '" + s.name + "' is not a network");
  nn::Network net(s.layers);
  restore_into(name, net);
  return net;
}

void Checkpoint::restore_into(std::string_view name, nn::Network& net) const {
  const Section& s = find(name);
  if (!s.is_network || s.layers != net.layers()) {
    throw ConfigError("checkpoint: section '" + s.name + "' does not match network architecture");
  }
  const std::size_t np = net.parameters().size();
  if (s.tensors.size() != np + net.buffers().size()) throw ConfigError("checkpoint: tensor count mismatch");
  for (std::size_t i = 0; i < s.tensors.size(); ++i) {
    nn::Tensor& dst = i < np ? net.parameters()[i] : net.buffers()[i - np];
    if (dst.rows() != s.tensors[i].rows() || dst.cols() != s.tensors[i].cols()) {
      throw ConfigError("checkpoint: shape mismatch in section '" + s.name + "'");
    }
    std::copy(s.tensors[i].values().begin(), s.tensors[i].values().end(), dst.values().begin());
  }
}

const std::vector<nn::Tensor>& Checkpoint::tensors(std::string_view name) const { return find(name).tensors; }

}  // namespace droq
