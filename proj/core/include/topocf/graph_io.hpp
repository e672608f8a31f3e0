#pragma once

#include <cstdint>
#include <string>

#include "topocf/graph.hpp"
#include "topocf/interactions.hpp"

namespace topocf {

// Compact binary graph container (.tcg). Layout documented in
// docs/formats.md; round-trips matrices, key maps and timestamps losslessly.
void save_graph(const std::string& path, const InteractionMatrix& matrix,
                const IdMaps& maps);

struct LoadedGraph {
  InteractionMatrix matrix;
  IdMaps maps;
};

LoadedGraph load_graph(const std::string& path);

// FNV-1a over the serialized content; stable across runs and platforms.
std::uint64_t content_hash(const InteractionMatrix& matrix, const IdMaps& maps);

// One interaction per line, `user<TAB>item[<TAB>timestamp]`.
void export_tsv(const std::string& path, const InteractionMatrix& matrix,
                const IdMaps& maps);

}  // namespace topocf
