#include "lf/statfore/panel.hpp"

#include <set>

#include "lf/core/errors.hpp"

namespace lf::statfore {

std::string_view group_name(ChannelGroup group) {
  switch (group) {
    case ChannelGroup::OutRoom: return "out-room";
    case ChannelGroup::Convert: return "convert";
    case ChannelGroup::Interaction: return "interaction";
    case ChannelGroup::InRoom: return "in-room";
  }
  return "unknown";
}

ChannelGroup parse_group(std::string_view name) {
  for (auto g : kAllGroups)
    if (group_name(g) == name) return g;
  throw ParseError("unknown channel group '" + std::string(name) + "'");
}

std::vector<Channel> default_channels() {
  return {
      {"exposure", ChannelGroup::OutRoom},   {"audience-enter", ChannelGroup::OutRoom},
      {"gmv", ChannelGroup::Convert},        {"orders", ChannelGroup::Convert},
      {"gift-value", ChannelGroup::Convert}, {"comments", ChannelGroup::Interaction},
      {"likes", ChannelGroup::Interaction},  {"product-clicks", ChannelGroup::InRoom},
  };
}

StatPanel::StatPanel(std::vector<Channel> channels, std::size_t length, std::vector<std::int64_t> values)
    : channels_(std::move(channels)), length_(length), values_(std::move(values)) {
  if (channels_.empty()) throw DimensionError("stat panel needs at least one channel");
  if (length_ == 0) throw DimensionError("stat panel needs at least one bucket");
  if (values_.size() != channels_.size() * length_) {
    throw DimensionError("stat panel: " + std::to_string(values_.size()) + " values for " +
                         std::to_string(channels_.size()) + " channels x " + std::to_string(length_) + " buckets");
  }
  std::set<std::string> names;
  for (const auto& c : channels_) {
    if (!names.insert(c.name).second) throw ConfigError("stat panel: duplicate channel '" + c.name + "'");
  }
  for (auto v : values_) {
    if (v < 0) throw DatasetError("stat panel: negative count " + std::to_string(v));
  }
}

core::Tensor StatPanel::window(std::size_t begin, std::size_t count) const {
  if (count == 0 || begin + count > length_) {
    throw WindowError("window [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                      ") outside panel of " + std::to_string(length_) + " buckets");
  }
  core::Tensor out({channels_.size(), count});
  for (std::size_t c = 0; c < channels_.size(); ++c)
    for (std::size_t t = 0; t < count; ++t) out.at(c, t) = static_cast<double>(at(c, begin + t));
  return out;
}

StatPanel StatPanel::slice(std::size_t begin, std::size_t count) const {
  if (count == 0 || begin + count > length_) {
    throw WindowError("slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) + ") outside panel of " +
                      std::to_string(length_) + " buckets");
  }
  std::vector<std::int64_t> vals;
  vals.reserve(channels_.size() * count);
  for (std::size_t c = 0; c < channels_.size(); ++c)
    for (std::size_t t = 0; t < count; ++t) vals.push_back(at(c, begin + t));
  return StatPanel(channels_, count, std::move(vals));
}

std::size_t StatPanel::channel_index(std::string_view name) const {
  for (std::size_t i = 0; i < channels_.size(); ++i)
    if (channels_[i].name == name) return i;
  throw IndexError("stat panel has no channel '" + std::string(name) + "'");
}

}  // namespace lf::statfore
