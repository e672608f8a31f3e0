#include "topocf/interactions.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "topocf/error.hpp"

namespace topocf {

namespace {

bool parse_int64(const std::string& s, std::int64_t& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

char detect_separator(const std::string& text) {
  // First non-empty line decides: tab wins if present, else comma.
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(start, nl - start);
    if (!line.empty() && line.find_first_not_of(" \r") != std::string::npos) {
      if (line.find('\t') != std::string::npos) return '\t';
      if (line.find(',') != std::string::npos) return ',';
      return '\t';
    }
    start = nl + 1;
  }
  return '\t';
}

}  // namespace

bool InteractionSet::has_timestamps() const {
  if (records.empty()) return false;
  return std::all_of(records.begin(), records.end(),
                     [](const InteractionRecord& r) { return r.timestamp.has_value(); });
}

InteractionSet parse_interactions(const std::string& text, FileFormat format) {
  char sep = '\t';
  switch (format) {
    case FileFormat::kTsv: sep = '\t'; break;
    case FileFormat::kCsv: sep = ','; break;
    case FileFormat::kAuto: sep = detect_separator(text); break;
  }

  InteractionSet set;
  std::unordered_map<std::string, std::size_t> seen;  // "user\x1fitem" -> idx
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line, sep);
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) {
      ++set.malformed_lines;
      continue;
    }
    InteractionRecord rec;
    rec.user_key = fields[0];
    rec.item_key = fields[1];
    if (fields.size() >= 3 && !fields[2].empty()) {
      double rating = 0.0;
      if (parse_double(fields[2], rating)) {
        rec.rating = rating;
      } else {
        ++set.malformed_lines;
        continue;
      }
    }
    if (fields.size() >= 4 && !fields[3].empty()) {
      std::int64_t ts = 0;
      if (parse_int64(fields[3], ts)) {
        rec.timestamp = ts;
      } else {
        ++set.malformed_lines;
        continue;
      }
    }

    std::string key = rec.user_key;
    key.push_back('\x1f');
    key += rec.item_key;
    auto [it, inserted] = seen.emplace(std::move(key), set.records.size());
    if (inserted) {
      set.records.push_back(std::move(rec));
    } else {
      ++set.duplicate_pairs;
      InteractionRecord& kept = set.records[it->second];
      // Keep the earliest timestamp across duplicates.
      if (rec.timestamp &&
          (!kept.timestamp || *rec.timestamp < *kept.timestamp)) {
        kept.timestamp = rec.timestamp;
        kept.rating = rec.rating;
      }
    }
  }
  return set;
}

InteractionSet load_interactions(const std::string& path, FileFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open interaction file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  InteractionSet set = parse_interactions(buf.str(), format);
  if (set.records.empty()) {
    throw Error(ErrorCode::kZeroRecords, "no valid records in " + path);
  }
  return set;
}

IdMaps IdMaps::from_keys(std::vector<std::string> users,
                         std::vector<std::string> items) {
  IdMaps maps;
  maps.user_keys = std::move(users);
  maps.item_keys = std::move(items);
  maps.user_index.reserve(maps.user_keys.size());
  maps.item_index.reserve(maps.item_keys.size());
  for (std::size_t i = 0; i < maps.user_keys.size(); ++i) {
    maps.user_index.emplace(maps.user_keys[i], static_cast<Index>(i));
  }
  for (std::size_t i = 0; i < maps.item_keys.size(); ++i) {
    maps.item_index.emplace(maps.item_keys[i], static_cast<Index>(i));
  }
  return maps;
}

IdMaps IdMaps::restrict(const std::vector<Index>& kept_users,
                        const std::vector<Index>& kept_items) const {
  std::vector<std::string> users;
  users.reserve(kept_users.size());
  for (Index old : kept_users) users.push_back(user_keys[old]);
  std::vector<std::string> items;
  items.reserve(kept_items.size());
  for (Index old : kept_items) items.push_back(item_keys[old]);
  return from_keys(std::move(users), std::move(items));
}

}  // namespace topocf
