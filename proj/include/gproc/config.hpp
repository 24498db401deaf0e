#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "gproc/isa.hpp"

namespace gproc {

// Behavioral handshake model of one link: bounded slots, a forward latency
// per word and a backward latency for the credit return.
struct ChannelParams {
  uint32_t capacity = 4;
  uint64_t forward_latency = 2;   // Tf
  uint64_t backward_latency = 1;  // Tb
};

struct MemoryParams {
  uint64_t batch_latency = 100;  // L_mem per batch
  uint32_t batch_words = 64;     // B
};

struct LatencyTable {
  std::array<uint64_t, kOpcodeCount> cost;
  LatencyTable();
  uint64_t of(Opcode op) const { return cost[static_cast<int>(op)]; }
};

struct EnergyTable {
  std::array<double, kOpcodeCount> op;
  std::array<bool, kOpcodeCount> op_present;
  double transfer = 0.0;
  bool transfer_present = false;

  EnergyTable();  // empty table; defaults() for the complete one
  static EnergyTable defaults();
};

struct MachineConfig {
  uint32_t rows = 1;
  uint32_t cols = 1;
  ChannelParams channel;       // mesh and host links
  MemoryParams memory;
  LatencyTable latency;
  EnergyTable energy;
  uint64_t event_budget = 100000000;  // instructions + simulator events
  uint32_t internal_fifo_capacity = 256;
};

MachineConfig machine_config_from_json_text(const std::string& text);
MachineConfig machine_config_from_file(const std::string& path);
std::string machine_config_to_json_text(const MachineConfig& c);

// Resolves an optional path, then GPROC_CONFIG, then built-in defaults.
MachineConfig resolve_machine_config(const std::string& path_or_empty);

}  // namespace gproc
