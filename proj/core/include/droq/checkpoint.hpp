#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "droq/network.hpp"
#include "droq/tensor.hpp"

namespace droq {

// Single-file container of named sections.
//
// Layout: one line of JSON
//   {"format_version":1,"sections":[{"name":..,"kind":"network"|"tensors",
//     "layers":[..],"shapes":[[rows,cols],..]},..]}
// terminated by '\n', followed by every tensor of every section, in header
// order, as little-endian IEEE-754 binary64. Network sections store
// trainable parameters first, then buffers.
class Checkpoint {
 public:
  static constexpr int kFormatVersion = 1;

  void add_network(std::string name, const nn::Network& net);
  void add_tensors(std::string name, std::vector<nn::Tensor> tensors);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  bool contains(std::string_view name) const;
  std::vector<std::string> section_names() const;
  // Rebuilds a network with bit-identical parameters and buffers.
  nn::Network network(std::string_view name) const;
  // Copies a stored network section into an existing network of the same architecture.
  void restore_into(std::string_view name, nn::Network& net) const;
  const std::vector<nn::Tensor>& tensors(std::string_view name) const;

 private:
  struct Section {
    std::string name;
    bool is_network = false;
    std::vector<nn::LayerSpec> layers;
    std::vector<nn::Tensor> tensors;
  };
  const Section& find(std::string_view name) const;

  std::vector<Section> sections_;
};

}  // namespace droq
