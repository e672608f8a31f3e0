#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "topocf/types.hpp"

namespace topocf {

enum class FileFormat { kAuto, kTsv, kCsv };

struct InteractionRecord {
  std::string user_key;
  std::string item_key;
  std::optional<double> rating;
  std::optional<std::int64_t> timestamp;
};

// Parsed interaction log. Duplicate (user, item) pairs are collapsed to a
// single record keeping the earliest timestamp; ratings ride along as
// pass-through metadata.
struct InteractionSet {
  std::vector<InteractionRecord> records;
  std::size_t malformed_lines = 0;
  std::size_t duplicate_pairs = 0;

  bool has_timestamps() const;
};

// Bijections between opaque keys and dense contiguous indices.
struct IdMaps {
  std::vector<std::string> user_keys;  // index -> key
  std::vector<std::string> item_keys;
  std::unordered_map<std::string, Index> user_index;  // key -> index
  std::unordered_map<std::string, Index> item_index;

  std::size_t num_users() const { return user_keys.size(); }
  std::size_t num_items() const { return item_keys.size(); }

  // Restriction to a kept subset, re-densified. kept_* hold old indices in
  // their new order.
  IdMaps restrict(const std::vector<Index>& kept_users,
                  const std::vector<Index>& kept_items) const;

  static IdMaps from_keys(std::vector<std::string> users,
                          std::vector<std::string> items);
};

InteractionSet load_interactions(const std::string& path,
                                 FileFormat format = FileFormat::kAuto);

// Parses in-memory text; used by the file loader and by tests.
InteractionSet parse_interactions(const std::string& text, FileFormat format);

}  // namespace topocf
