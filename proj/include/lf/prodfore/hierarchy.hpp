#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

namespace lf::prodfore {

struct ProductEvent {
  std::size_t product = 0;
  std::size_t c1 = 0;  // coarsest category
  std::size_t c2 = 0;
  std::size_t c3 = 0;  // finest category

  friend bool operator==(const ProductEvent&, const ProductEvent&) = default;
};

using ProductSequence = std::vector<ProductEvent>;

// Three-level category tree plus the product -> finest-category map.
class CategoryHierarchy {
 public:
  CategoryHierarchy() = default;
  CategoryHierarchy(std::size_t level1, std::vector<std::size_t> parent2, std::vector<std::size_t> parent3,
                    std::vector<std::size_t> product_category);

  // Contiguous blocks: level-2 node i belongs to level-1 node i * l1 / l2, etc.
  static CategoryHierarchy blocks(std::size_t level1, std::size_t level2, std::size_t level3, std::size_t products);

  std::size_t level1_size() const noexcept { return level1_; }
  std::size_t level2_size() const noexcept { return parent2_.size(); }
  std::size_t level3_size() const noexcept { return parent3_.size(); }
  std::size_t product_count() const noexcept { return product_category_.size(); }

  std::size_t parent_of_level2(std::size_t c2) const { return parent2_.at(c2); }
  std::size_t parent_of_level3(std::size_t c3) const { return parent3_.at(c3); }
  std::size_t category_of_product(std::size_t p) const { return product_category_.at(p); }

  const std::vector<std::size_t>& level2_children(std::size_t c1) const { return children1_.at(c1); }
  const std::vector<std::size_t>& level3_children(std::size_t c2) const { return children2_.at(c2); }
  const std::vector<std::size_t>& products_of(std::size_t c3) const { return products_.at(c3); }
  // Next level-3 node under the same level-2 parent, wrapping around.
  std::size_t next_sibling(std::size_t c3) const;

  // Full event for a product, looked up through the tree.
  ProductEvent event_for(std::size_t product) const;
  // Throws IndexError naming the level for out-of-range ids and
  // SequenceError when the ids disagree with the tree.
  void validate(const ProductEvent& e) const;

  nlohmann::json to_json() const;
  static CategoryHierarchy from_json(const nlohmann::json& j);

  friend bool operator==(const CategoryHierarchy& a, const CategoryHierarchy& b) {
    return a.level1_ == b.level1_ && a.parent2_ == b.parent2_ && a.parent3_ == b.parent3_ &&
           a.product_category_ == b.product_category_;
  }

 private:
  void index();

  std::size_t level1_ = 0;
  std::vector<std::size_t> parent2_;
  std::vector<std::size_t> parent3_;
  std::vector<std::size_t> product_category_;
  std::vector<std::vector<std::size_t>> children1_, children2_, products_;
};

}  // namespace lf::prodfore
