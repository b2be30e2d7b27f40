#include "lf/prodfore/hierarchy.hpp"

#include <algorithm>
#include <string>

#include "lf/core/errors.hpp"

namespace lf::prodfore {

CategoryHierarchy::CategoryHierarchy(std::size_t level1, std::vector<std::size_t> parent2,
                                     std::vector<std::size_t> parent3, std::vector<std::size_t> product_category)
    : level1_(level1),
      parent2_(std::move(parent2)),
      parent3_(std::move(parent3)),
      product_category_(std::move(product_category)) {
  if (level1_ == 0 || parent2_.empty() || parent3_.empty() || product_category_.empty()) {
    throw ConfigError("category hierarchy: every level needs at least one node");
  }
  for (auto p : parent2_)
    if (p >= level1_) throw ConfigError("category hierarchy: level-2 parent " + std::to_string(p) + " out of range");
  for (auto p : parent3_)
    if (p >= parent2_.size()) throw ConfigError("category hierarchy: level-3 parent " + std::to_string(p) + " out of range");
  for (auto c : product_category_)
    if (c >= parent3_.size()) throw ConfigError("category hierarchy: product category " + std::to_string(c) + " out of range");
  index();
}

CategoryHierarchy CategoryHierarchy::blocks(std::size_t level1, std::size_t level2, std::size_t level3,
                                            std::size_t products) {
  if (level1 == 0 || level2 < level1 || level3 < level2 || products < level3) {
    throw ConfigError("category hierarchy: sizes must satisfy 0 < |C1| <= |C2| <= |C3| <= |p|");
  }
  std::vector<std::size_t> p2(level2), p3(level3), pc(products);
  for (std::size_t i = 0; i < level2; ++i) p2[i] = i * level1 / level2;
  for (std::size_t i = 0; i < level3; ++i) p3[i] = i * level2 / level3;
  for (std::size_t i = 0; i < products; ++i) pc[i] = i * level3 / products;
  return CategoryHierarchy(level1, std::move(p2), std::move(p3), std::move(pc));
}

void CategoryHierarchy::index() {
  children1_.assign(level1_, {});
  children2_.assign(parent2_.size(), {});
  products_.assign(parent3_.size(), {});
  for (std::size_t i = 0; i < parent2_.size(); ++i) children1_[parent2_[i]].push_back(i);
  for (std::size_t i = 0; i < parent3_.size(); ++i) children2_[parent3_[i]].push_back(i);
  for (std::size_t i = 0; i < product_category_.size(); ++i) products_[product_category_[i]].push_back(i);
}

std::size_t CategoryHierarchy::next_sibling(std::size_t c3) const {
  const auto& sib = children2_.at(parent3_.at(c3));
  auto it = std::find(sib.begin(), sib.end(), c3);
  ++it;
  return it == sib.end() ? sib.front() : *it;
}

ProductEvent CategoryHierarchy::event_for(std::size_t product) const {
  if (product >= product_category_.size()) throw IndexError("product id " + std::to_string(product) + " out of range");
  const std::size_t c3 = product_category_[product];
  const std::size_t c2 = parent3_[c3];
  return {product, parent2_[c2], c2, c3};
}

void CategoryHierarchy::validate(const ProductEvent& e) const {
  if (e.product >= product_count()) throw IndexError("product id " + std::to_string(e.product) + " out of range");
  if (e.c1 >= level1_) throw IndexError("level-1 category " + std::to_string(e.c1) + " out of range");
  if (e.c2 >= level2_size()) throw IndexError("level-2 category " + std::to_string(e.c2) + " out of range");
  if (e.c3 >= level3_size()) throw IndexError("level-3 category " + std::to_string(e.c3) + " out of range");
  if (parent3_[e.c3] != e.c2 || parent2_[e.c2] != e.c1 || product_category_[e.product] != e.c3) {
    throw SequenceError("event ids disagree with the category hierarchy (product " + std::to_string(e.product) + ")");
  }
}

nlohmann::json CategoryHierarchy::to_json() const {
  return {{"level_sizes", {level1_, level2_size(), level3_size()}},
          {"products", product_count()},
          {"level2_parent", parent2_},
          {"level3_parent", parent3_},
          {"product_category", product_category_}};
}

CategoryHierarchy CategoryHierarchy::from_json(const nlohmann::json& j) {
  try {
    return CategoryHierarchy(j.at("level_sizes").at(0).get<std::size_t>(),
                             j.at("level2_parent").get<std::vector<std::size_t>>(),
                             j.at("level3_parent").get<std::vector<std::size_t>>(),
                             j.at("product_category").get<std::vector<std::size_t>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("hierarchy: ") + e.what());
  }
}

}  // namespace lf::prodfore
