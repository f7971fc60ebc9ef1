#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "layermig/domain.hpp"

namespace layermig {

struct Layer {
  LayerId id = 0;
  double size_mb = 0.0;
};

struct Image {
  ImageId id = 0;
  std::vector<LayerId> layer_ids;
};

struct Container {
  ContainerId id = 0;
  ImageId image_id = 0;
};

// Global layer set L, images M and containers C. Construction validates all
// references; ids must equal their position in the respective list.
class LayerCatalog {
 public:
  LayerCatalog() = default;
  LayerCatalog(std::vector<Layer> layers, std::vector<Image> images, std::vector<Container> containers);

  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_images() const { return images_.size(); }
  std::size_t num_containers() const { return containers_.size(); }

  const Layer& layer(LayerId id) const { return layers_.at(id); }
  const Image& image(ImageId id) const { return images_.at(id); }
  const Container& container(ContainerId id) const { return containers_.at(id); }
  std::span<const Layer> layers() const { return layers_; }
  std::span<const Image> images() const { return images_; }

  double layer_size_mb(LayerId id) const { return layers_.at(id).size_mb; }
  // L_c: the layers of the container's image.
  std::span<const LayerId> container_layers(ContainerId id) const;
  // x_c^l
  bool container_has_layer(ContainerId c, LayerId l) const;
  double image_size_mb(ImageId id) const;
  double container_size_mb(ContainerId id) const;
  double total_size_mb() const;

  // Number of images that include each layer.
  std::vector<int> layer_reuse_counts() const;

  nlohmann::json to_json() const;
  static LayerCatalog from_json(const nlohmann::json& doc);

  bool operator==(const LayerCatalog& other) const;

 private:
  std::vector<Layer> layers_;
  std::vector<Image> images_;
  std::vector<Container> containers_;
  std::vector<std::vector<std::uint8_t>> membership_;  // [container][layer]
};

struct CatalogConfig {
  int num_layers = 60;
  int num_images = 20;
  int min_layers_per_image = 2;
  int max_layers_per_image = 8;
  double min_layer_mb = 0.5;
  double max_image_mb = 100.0;
  // Zipf exponent over layer rank when choosing image layers; larger values
  // make a few base layers appear in many images. 0 = uniform.
  double popularity_skew = 1.0;
};

void validate(const CatalogConfig& config);

// Deterministic in (config, seed). Layer sizes are drawn from
// [min_layer_mb, max_image_mb / max_layers_per_image], so every image total
// lands in [min_layer_mb, max_image_mb]. One container per image.
LayerCatalog generate_catalog(const CatalogConfig& config, std::uint64_t seed);

}  // namespace layermig
