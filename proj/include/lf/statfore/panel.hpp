#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lf/core/tensor.hpp"

namespace lf::statfore {

enum class ChannelGroup { OutRoom, Convert, Interaction, InRoom };

inline constexpr ChannelGroup kAllGroups[] = {ChannelGroup::OutRoom, ChannelGroup::Convert,
                                              ChannelGroup::Interaction, ChannelGroup::InRoom};

std::string_view group_name(ChannelGroup group);
ChannelGroup parse_group(std::string_view name);

struct Channel {
  std::string name;
  ChannelGroup group = ChannelGroup::OutRoom;

  friend bool operator==(const Channel&, const Channel&) = default;
};

// The eight behaviour channels collected per room every 30 seconds.
std::vector<Channel> default_channels();

inline constexpr int kBucketSeconds = 30;

// N channels x T buckets of non-negative behaviour counts.
class StatPanel {
 public:
  StatPanel() = default;
  StatPanel(std::vector<Channel> channels, std::size_t length, std::vector<std::int64_t> values);

  const std::vector<Channel>& channels() const noexcept { return channels_; }
  std::size_t channel_count() const noexcept { return channels_.size(); }
  std::size_t length() const noexcept { return length_; }
  std::int64_t at(std::size_t channel, std::size_t bucket) const { return values_[channel * length_ + bucket]; }
  const std::vector<std::int64_t>& values() const noexcept { return values_; }

  // Buckets [begin, begin + count) as a real N x count matrix.
  core::Tensor window(std::size_t begin, std::size_t count) const;
  StatPanel slice(std::size_t begin, std::size_t count) const;
  std::size_t channel_index(std::string_view name) const;

  friend bool operator==(const StatPanel&, const StatPanel&) = default;

 private:
  std::vector<Channel> channels_;
  std::size_t length_ = 0;
  std::vector<std::int64_t> values_;
};

}  // namespace lf::statfore
