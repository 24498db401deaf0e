#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gproc/isa.hpp"
#include "gproc/kernels.hpp"
#include "gproc/partition.hpp"

namespace gproc {

enum class MappingMode : uint8_t { kNodeLevel, kClusterLevel };

const char* mapping_mode_name(MappingMode m);
MappingMode mapping_mode_from_name(const std::string& name);

// Wire message format between elements: two words, destination vertex id
// then payload. Vertex ids on the wire are the compiler's renumbered ids
// (clusters own contiguous ranges so routing compiles to compare chains).
// Value conventions shared by codegen and the result-gather stage:
constexpr uint32_t kInfDistance = 0x7FFFFFFFu;   // sssp/bfs "not yet reached"
constexpr uint32_t kDfsUnvisited = 1u << 28;     // dfs order sentinel
constexpr uint32_t kPrOne = 1u << 16;            // Q16.16 fixed-point 1.0

// Host-link control words (tag, value):
constexpr uint32_t kCtrlProbe = 1;
constexpr uint32_t kCtrlBarrier = 2;
constexpr uint32_t kCtrlStop = 3;
constexpr uint32_t kReplyIdleTag = 1;  // reply: tag, sent-count, recv-count

struct DispatchEntry {
  uint32_t nale;  // row * cols + col
  uint32_t vid;   // renumbered vertex id
  uint32_t payload;
};

struct CompiledApp {
  uint32_t rows = 1;
  uint32_t cols = 1;
  MappingMode mode = MappingMode::kClusterLevel;
  uint32_t cluster_count = 0;
  KernelSpec kernel;
  uint32_t vertex_count = 0;

  std::vector<uint32_t> new_of;   // original dense id -> renumbered id
  std::vector<uint32_t> orig_of;  // renumbered id -> original dense id

  std::vector<NaleProgram> programs;            // rows*cols entries
  std::vector<std::vector<uint8_t>> routing;    // per element: cluster -> port
  std::vector<DispatchEntry> dispatch;          // global manifest order
  std::vector<std::vector<uint32_t>> gather_vids;  // per element, owned vids

  bool protocol_waves = true;   // host probe/idle quiescence protocol
  uint32_t barrier_total = 0;   // pagerank iterations driven by the host
  uint32_t fifo_capacity_needed = 256;

  uint32_t nale_index(uint32_t row, uint32_t col) const {
    return row * cols + col;
  }
};

// Lowers a kernel over a partitioned, placed graph into per-element programs,
// routing tables and dispatch/gather manifests. The graph must be normalized.
CompiledApp codegen(const KernelSpec& kernel, const Graph& g,
                    const Partition& part, const Placement& pl,
                    MappingMode mode);

// Directory form: manifest.json, routing.json, dispatch.csv, nale_R_C.bin.
void save_compiled(const CompiledApp& app, const std::string& dir);
CompiledApp load_compiled(const std::string& dir);

}  // namespace gproc
