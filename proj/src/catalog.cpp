#include "layermig/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "layermig/random.hpp"

namespace layermig {

using nlohmann::json;

LayerCatalog::LayerCatalog(std::vector<Layer> layers, std::vector<Image> images, std::vector<Container> containers)
    : layers_(std::move(layers)), images_(std::move(images)), containers_(std::move(containers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].id != i) throw std::invalid_argument("catalog: layer id " + std::to_string(layers_[i].id) + " at position " + std::to_string(i));
    if (!(layers_[i].size_mb > 0.0) || !std::isfinite(layers_[i].size_mb)) {
      throw std::invalid_argument("catalog: layer " + std::to_string(i) + " has non-positive size");
    }
  }
  for (std::size_t i = 0; i < images_.size(); ++i) {
    const Image& image = images_[i];
    if (image.id != i) throw std::invalid_argument("catalog: image id " + std::to_string(image.id) + " at position " + std::to_string(i));
    if (image.layer_ids.empty()) throw std::invalid_argument("catalog: image " + std::to_string(i) + " has no layers");
    std::vector<LayerId> sorted = image.layer_ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("catalog: image " + std::to_string(i) + " lists a layer twice");
    }
    for (LayerId l : image.layer_ids) {
      if (l >= layers_.size()) throw std::invalid_argument("catalog: image " + std::to_string(i) + " references unknown layer " + std::to_string(l));
    }
  }
  membership_.reserve(containers_.size());
  for (std::size_t i = 0; i < containers_.size(); ++i) {
    if (containers_[i].id != i) throw std::invalid_argument("catalog: container id mismatch at position " + std::to_string(i));
    if (containers_[i].image_id >= images_.size()) {
      throw std::invalid_argument("catalog: container " + std::to_string(i) + " references unknown image");
    }
    std::vector<std::uint8_t> row(layers_.size(), 0);
    for (LayerId l : images_[containers_[i].image_id].layer_ids) row[l] = 1;
    membership_.push_back(std::move(row));
  }
}

std::span<const LayerId> LayerCatalog::container_layers(ContainerId id) const {
  return images_.at(containers_.at(id).image_id).layer_ids;
}

bool LayerCatalog::container_has_layer(ContainerId c, LayerId l) const { return membership_.at(c).at(l) != 0; }

double LayerCatalog::image_size_mb(ImageId id) const {
  double total = 0.0;
  for (LayerId l : images_.at(id).layer_ids) total += layers_[l].size_mb;
  return total;
}

double LayerCatalog::container_size_mb(ContainerId id) const { return image_size_mb(containers_.at(id).image_id); }

double LayerCatalog::total_size_mb() const {
  double total = 0.0;
  for (const auto& l : layers_) total += l.size_mb;
  return total;
}

std::vector<int> LayerCatalog::layer_reuse_counts() const {
  std::vector<int> counts(layers_.size(), 0);
  for (const auto& image : images_) {
    for (LayerId l : image.layer_ids) ++counts[l];
  }
  return counts;
}

json LayerCatalog::to_json() const {
  json layers = json::array();
  for (const auto& l : layers_) layers.push_back({{"id", l.id}, {"size_mb", l.size_mb}});
  json images = json::array();
  for (const auto& m : images_) images.push_back({{"id", m.id}, {"layers", m.layer_ids}});
  json containers = json::array();
  for (const auto& c : containers_) containers.push_back({{"id", c.id}, {"image", c.image_id}});
  return json{{"layers", layers}, {"images", images}, {"containers", containers}};
}

LayerCatalog LayerCatalog::from_json(const json& doc) {
  std::vector<Layer> layers;
  for (const auto& l : doc.at("layers")) layers.push_back({l.at("id").get<LayerId>(), l.at("size_mb").get<double>()});
  std::vector<Image> images;
  for (const auto& m : doc.at("images")) images.push_back({m.at("id").get<ImageId>(), m.at("layers").get<std::vector<LayerId>>()});
  std::vector<Container> containers;
  for (const auto& c : doc.at("containers")) containers.push_back({c.at("id").get<ContainerId>(), c.at("image").get<ImageId>()});
  return LayerCatalog(std::move(layers), std::move(images), std::move(containers));
}

bool LayerCatalog::operator==(const LayerCatalog& other) const {
  if (layers_.size() != other.layers_.size() || images_.size() != other.images_.size() ||
      containers_.size() != other.containers_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].size_mb != other.layers_[i].size_mb) return false;
  }
  for (std::size_t i = 0; i < images_.size(); ++i) {
    if (images_[i].layer_ids != other.images_[i].layer_ids) return false;
  }
  for (std::size_t i = 0; i < containers_.size(); ++i) {
    if (containers_[i].image_id != other.containers_[i].image_id) return false;
  }
  return true;
}

void validate(const CatalogConfig& c) {
  if (c.num_layers <= 0) throw std::invalid_argument("catalog config: num_layers must be positive");
  if (c.num_images <= 0) throw std::invalid_argument("catalog config: num_images must be positive");
  if (c.min_layers_per_image < 1 || c.max_layers_per_image < c.min_layers_per_image) {
    throw std::invalid_argument("catalog config: need 1 <= min_layers_per_image <= max_layers_per_image");
  }
  if (c.max_layers_per_image > c.num_layers) {
    throw std::invalid_argument("catalog config: max_layers_per_image exceeds num_layers");
  }
  if (!(c.min_layer_mb > 0.0)) throw std::invalid_argument("catalog config: min_layer_mb must be positive");
  if (c.max_image_mb / c.max_layers_per_image < c.min_layer_mb) {
    throw std::invalid_argument("catalog config: max_image_mb too small for max_layers_per_image");
  }
  if (c.popularity_skew < 0.0) throw std::invalid_argument("catalog config: popularity_skew must be >= 0");
}

LayerCatalog generate_catalog(const CatalogConfig& config, std::uint64_t seed) {
  validate(config);
  Rng rng(derive_seed(seed, 0xCA7A10ULL));

  const double max_layer_mb = config.max_image_mb / config.max_layers_per_image;
  std::vector<Layer> layers;
  layers.reserve(static_cast<std::size_t>(config.num_layers));
  for (int i = 0; i < config.num_layers; ++i) {
    layers.push_back({static_cast<LayerId>(i), rng.uniform(config.min_layer_mb, max_layer_mb)});
  }

  std::vector<double> popularity(layers.size());
  for (std::size_t i = 0; i < popularity.size(); ++i) {
    popularity[i] = 1.0 / std::pow(static_cast<double>(i + 1), config.popularity_skew);
  }

  std::vector<Image> images;
  std::vector<Container> containers;
  for (int m = 0; m < config.num_images; ++m) {
    const int k = rng.uniform_int(config.min_layers_per_image, config.max_layers_per_image);
    std::vector<double> weights = popularity;
    std::vector<LayerId> chosen;
    for (int j = 0; j < k; ++j) {
      const std::size_t pick = rng.weighted_index(weights);
      chosen.push_back(static_cast<LayerId>(pick));
      weights[pick] = 0.0;
    }
    std::sort(chosen.begin(), chosen.end());
    images.push_back({static_cast<ImageId>(m), std::move(chosen)});
    containers.push_back({static_cast<ContainerId>(m), static_cast<ImageId>(m)});
  }
  return LayerCatalog(std::move(layers), std::move(images), std::move(containers));
}

}  // namespace layermig
