#pragma once

#include "gproc/config.hpp"
#include "gproc/kernels.hpp"
#include "gproc/machine.hpp"

namespace gproc {

// Sequential baseline: runs the kernel's reference algorithm while charging
// the same per-opcode latency table per abstract operation, plus one memory
// batch (L_mem) per batch_words non-sequential vertex-state accesses. The
// exact charge schedule per kernel is documented in the README; it is a
// closed-form function of the graph, so results are bit-stable.
Metrics reference_model(const KernelSpec& kernel, const Graph& g,
                        const MachineConfig& cfg);

}  // namespace gproc
