#include "topocf/graph_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "topocf/error.hpp"

namespace topocf {

namespace {

constexpr char kMagic[8] = {'T', 'C', 'F', 'G', 'R', 'P', 'H', '1'};
constexpr std::uint32_t kFlagTimestamps = 1u;

class ByteSink {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i64(std::int64_t v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    bytes_.insert(bytes_.end(), c, c + n);
  }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class ByteSource {
 public:
  explicit ByteSource(std::string bytes) : bytes_(std::move(bytes)) {}
  std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
  std::int64_t i64() { std::int64_t v; raw(&v, sizeof v); return v; }
  std::string str() {
    const std::uint32_t n = u32();
    check(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void raw(void* p, std::size_t n) {
    check(n);
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }

 private:
  void check(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorCode::kIo, "truncated graph file");
    }
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

std::string serialize(const InteractionMatrix& m, const IdMaps& maps) {
  ByteSink sink;
  sink.raw(kMagic, sizeof kMagic);
  sink.u32(m.has_timestamps() ? kFlagTimestamps : 0u);
  sink.u64(m.num_users());
  sink.u64(m.num_items());
  sink.u64(m.num_edges());
  for (const std::string& k : maps.user_keys) sink.str(k);
  for (const std::string& k : maps.item_keys) sink.str(k);
  for (EdgeId p : m.row_ptr()) sink.u64(p);
  for (Index i : m.items()) sink.u32(i);
  if (m.has_timestamps()) {
    for (std::int64_t t : m.timestamps()) sink.i64(t);
  }
  return sink.bytes();
}

}  // namespace

void save_graph(const std::string& path, const InteractionMatrix& matrix,
                const IdMaps& maps) {
  if (maps.num_users() != matrix.num_users() ||
      maps.num_items() != matrix.num_items()) {
    throw Error(ErrorCode::kDimensionMismatch, "id maps do not match matrix");
  }
  const std::string bytes = serialize(matrix, maps);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
}

LoadedGraph load_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  ByteSource src(buf.str());

  char magic[8];
  src.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::kIo, "not a graph file: " + path);
  }
  const std::uint32_t flags = src.u32();
  const std::uint64_t num_users = src.u64();
  const std::uint64_t num_items = src.u64();
  const std::uint64_t num_edges = src.u64();

  std::vector<std::string> user_keys(num_users);
  for (auto& k : user_keys) k = src.str();
  std::vector<std::string> item_keys(num_items);
  for (auto& k : item_keys) k = src.str();

  std::vector<EdgeId> row_ptr(num_users + 1);
  for (auto& p : row_ptr) p = src.u64();
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(num_edges);
  {
    std::uint64_t u = 0;
    for (std::uint64_t e = 0; e < num_edges; ++e) {
      while (u + 1 <= num_users && row_ptr[u + 1] <= e) ++u;
      edges.emplace_back(static_cast<Index>(u), static_cast<Index>(src.u32()));
    }
  }
  std::vector<std::int64_t> ts;
  const bool with_ts = (flags & kFlagTimestamps) != 0;
  if (with_ts) {
    ts.resize(num_edges);
    for (auto& t : ts) t = src.i64();
  }

  LoadedGraph out;
  out.matrix = InteractionMatrix::from_edges(
      static_cast<Index>(num_users), static_cast<Index>(num_items),
      std::move(edges), with_ts ? &ts : nullptr);
  out.maps = IdMaps::from_keys(std::move(user_keys), std::move(item_keys));
  if (out.matrix.num_edges() != num_edges) {
    throw Error(ErrorCode::kIo, "edge count mismatch in " + path);
  }
  return out;
}

std::uint64_t content_hash(const InteractionMatrix& matrix,
                           const IdMaps& maps) {
  const std::string bytes = serialize(matrix, maps);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void export_tsv(const std::string& path, const InteractionMatrix& matrix,
                const IdMaps& maps) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  const bool with_ts = matrix.has_timestamps();
  for (Index u = 0; u < matrix.num_users(); ++u) {
    for (EdgeId e = matrix.row_ptr()[u]; e < matrix.row_ptr()[u + 1]; ++e) {
      out << maps.user_keys[u] << '\t' << maps.item_keys[matrix.items()[e]];
      if (with_ts) out << '\t' << 1 << '\t' << matrix.timestamps()[e];
      out << '\n';
    }
  }
}

}  // namespace topocf
