#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace lf::ranker {

// Categorical fields of a sample, in input order.
enum Field : std::size_t { kUser, kUserCategory, kAuthor, kRoomCategory, kCategoryMatch, kClickBucket, kFieldCount };

inline constexpr std::array<const char*, kFieldCount> kFieldNames = {
    "user_id", "user_category", "author_id", "room_category", "category_match", "click_bucket"};

struct RankSample {
  // user side
  std::size_t user_id = 0;
  std::size_t user_category = 0;  // user's favourite level-1 category
  // live side
  std::size_t author_id = 0;
  std::size_t room_category = 0;  // author's home level-1 category
  // cross
  std::size_t category_match = 0;  // user_category == room_category
  std::size_t click_bucket = 0;    // recent clicks in the room's category, capped
  // join keys for foresight features
  std::size_t room_id = 0;
  std::size_t bucket = 0;
  double exposure_weight = 1.0;
  std::vector<int> labels;  // one per task, aligned with RankDataset::tasks

  std::array<std::size_t, kFieldCount> fields() const {
    return {user_id, user_category, author_id, room_category, category_match, click_bucket};
  }

  friend bool operator==(const RankSample&, const RankSample&) = default;
};

struct RankDataset {
  std::vector<std::string> tasks;
  std::array<std::size_t, kFieldCount> vocab{};
  std::vector<RankSample> samples;

  std::size_t task_index(const std::string& task) const;
  // Throws LabelError / IndexError on non-binary labels or out-of-vocabulary ids.
  void validate() const;

  friend bool operator==(const RankDataset&, const RankDataset&) = default;
};

}  // namespace lf::ranker
