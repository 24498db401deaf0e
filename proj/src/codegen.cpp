#include "gproc/codegen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace gproc {

using nlohmann::json;

const char* mapping_mode_name(MappingMode m) {
  return m == MappingMode::kNodeLevel ? "node" : "cluster";
}

MappingMode mapping_mode_from_name(const std::string& name) {
  if (name == "node") return MappingMode::kNodeLevel;
  if (name == "cluster") return MappingMode::kClusterLevel;
  throw ConfigError("unknown mapping mode '" + name + "' (node|cluster)");
}

namespace {

// Register conventions shared by every generated program:
//   r0..r6   scratch
//   r7       kernel state (miniTri count / dfs tag constant / node value)
//   r8       out-cell discriminator 2^30 (cluster) or pagerank accumulator (node)
//   r9       cell tag 2^31
//   r10      pending cell count
//   r11      work flag for the current poll cycle
//   r12      probe pending
//   r13/r14  sent / received mesh message counts (quiescence protocol)
//   r15      try-op status (hardware)
constexpr uint8_t r0 = 0, r1 = 1, r2 = 2, r3 = 3, r4 = 4, r5 = 5, r6 = 6,
                  r7 = 7, r8 = 8, r9 = 9, r10 = 10, r11 = 11, r12 = 12,
                  r13 = 13, r14 = 14;

Operand RG(uint8_t r) { return Operand::reg(r); }
Operand IM(uint32_t v) { return Operand::imm(v); }

struct Builder {
  std::vector<Instruction> code;
  std::map<std::string, uint32_t> labels;
  struct Fix {
    size_t at;
    std::string label;
  };
  std::vector<Fix> fixes;
  int counter = 0;

  std::string fresh(const char* stem) {
    return std::string(stem) + "_" + std::to_string(counter++);
  }
  void label(const std::string& name) {
    if (labels.count(name)) throw CompileError("codegen: duplicate label " + name);
    labels[name] = static_cast<uint32_t>(code.size());
  }
  void emit(const Instruction& i) { code.push_back(i); }
  void jmp(const std::string& l) {
    fixes.push_back({code.size(), l});
    code.push_back(ins::jmp(0));
  }
  void jz(uint8_t r, const std::string& l) {
    fixes.push_back({code.size(), l});
    code.push_back(ins::jz(r, 0));
  }
  void jnz(uint8_t r, const std::string& l) {
    fixes.push_back({code.size(), l});
    code.push_back(ins::jnz(r, 0));
  }
  NaleProgram finish() {
    for (const Fix& f : fixes) {
      auto it = labels.find(f.label);
      if (it == labels.end())
        throw CompileError("codegen: unresolved label " + f.label);
      code[f.at].b = IM(it->second);
    }
    if (!code.empty())
      for (const Instruction& i : code)
        if ((i.op == Opcode::kJmp || i.op == Opcode::kJz ||
             i.op == Opcode::kJnz) &&
            i.b.value >= code.size())
          throw CompileError("codegen: branch target outside program");
    NaleProgram p;
    p.code = std::move(code);
    p.labels = std::move(labels);
    return p;
  }

  // Loads a 32-bit constant that may not fit an immediate.
  void load_const(uint8_t dst, uint32_t value) {
    if (value <= 0xFFFF) {
      emit(ins::ldi(dst, value));
      return;
    }
    emit(ins::ldi(dst, value >> 16));
    emit(ins::alu(Opcode::kMul, dst, RG(dst), IM(256)));
    emit(ins::alu(Opcode::kMul, dst, RG(dst), IM(256)));
    if (value & 0xFFFF)
      emit(ins::alu(Opcode::kAdd, dst, RG(dst), IM(value & 0xFFFF)));
  }
};

struct Adjacency {
  VertexId target;  // renumbered
  uint32_t weight;
};

// Everything codegen derives once per compilation.
struct Plan {
  const Graph* g = nullptr;
  KernelSpec kernel;
  MappingMode mode = MappingMode::kClusterLevel;
  uint32_t k = 0, rows = 0, cols = 0, vcount = 0;
  std::vector<uint32_t> new_of, orig_of;
  std::vector<uint32_t> cluster_of_new;           // new vid -> cluster
  std::vector<uint32_t> lo, hi;                   // cluster vid ranges
  std::vector<std::pair<uint32_t, uint32_t>> coord;  // cluster -> (row,col)
  std::vector<int> cluster_at;                    // nale -> cluster or -1
  std::vector<std::vector<Adjacency>> out;        // send targets, by new vid
  std::vector<std::vector<Adjacency>> scan;       // dfs order (original ids)
  uint32_t rec_words = 2;
  uint32_t source_new = 0;   // renumbered source (sssp/bfs/dfs)
  uint32_t pr_init = 0;      // Q16.16 starting rank
  uint32_t pr_base = 0;      // Q16.16 (1-d)/V
  std::vector<uint32_t> pr_k;  // per new vid: Q16.16 d/outdeg (or d/V dangling)
  std::vector<uint32_t> pr_cinit;  // first-iteration contribution
};

uint8_t xy_port(uint32_t fr, uint32_t fc, uint32_t tr, uint32_t tc) {
  if (tc > fc) return static_cast<uint8_t>(Port::kEast);
  if (tc < fc) return static_cast<uint8_t>(Port::kWest);
  if (tr > fr) return static_cast<uint8_t>(Port::kSouth);
  if (tr < fr) return static_cast<uint8_t>(Port::kNorth);
  return 0xFF;  // self
}

// Fixed-point helpers; the generated shift code reproduces exactly this
// arithmetic (round half up), so compile-time and run-time contributions
// agree bit for bit.
uint32_t fx(double x) {
  return static_cast<uint32_t>(std::llround(x * 65536.0));
}
uint32_t fx_contrib(uint32_t rank, uint32_t k_const) {
  uint64_t p = static_cast<uint64_t>(rank) * k_const + 32768;
  return static_cast<uint32_t>((p & 0xFFFFFFFFull) >> 16);
}

struct NaleCtx {
  uint32_t row = 0, col = 0;
  int cluster = -1;
  uint32_t lo = 0, hi = 0, n_c = 0;
  uint32_t cell_words = 2;  // FIFO cell width for this program
  bool node_path = false;   // register-resident single-vertex lowering
  std::vector<uint32_t> owned;  // new vids ascending
  bool has_north = false, has_south = false, has_east = false, has_west = false;
};

bool in_range(const NaleCtx& nc, uint32_t vid) {
  return vid >= nc.lo && vid < nc.hi;
}

std::vector<Port> mesh_ports(const NaleCtx& nc) {
  std::vector<Port> ports;
  if (nc.has_north) ports.push_back(Port::kNorth);
  if (nc.has_south) ports.push_back(Port::kSouth);
  if (nc.has_east) ports.push_back(Port::kEast);
  if (nc.has_west) ports.push_back(Port::kWest);
  return ports;
}

// --- shared emission pieces -------------------------------------------------

void emit_const_init(Builder& b, const Plan& plan, const NaleCtx& nc) {
  // r9 = 2^31
  b.emit(ins::ldi(r9, 32768));
  b.emit(ins::alu(Opcode::kMul, r9, RG(r9), IM(256)));
  b.emit(ins::alu(Opcode::kMul, r9, RG(r9), IM(256)));
  if (!nc.node_path) {
    // r8 = 2^30
    b.emit(ins::ldi(r8, 16384));
    b.emit(ins::alu(Opcode::kMul, r8, RG(r8), IM(256)));
    b.emit(ins::alu(Opcode::kMul, r8, RG(r8), IM(256)));
  } else if (plan.kernel.kind == KernelKind::kPagerank) {
    b.emit(ins::ldi(r8, 0));  // accumulator
  }
  if (plan.kernel.kind == KernelKind::kDfs) {
    // r7 = 2^28 (payload tag unit and the undiscovered sentinel)
    b.emit(ins::ldi(r7, 4096));
    b.emit(ins::alu(Opcode::kMul, r7, RG(r7), IM(256)));
    b.emit(ins::alu(Opcode::kMul, r7, RG(r7), IM(256)));
  } else {
    b.emit(ins::ldi(r7, 0));
  }
  for (uint8_t r : {r10, r11, r12, r13, r14}) b.emit(ins::ldi(r, 0));
}

// Queue one cell (already-built word1 in w1reg, payload in payreg).
void emit_push_cell(Builder& b, const NaleCtx& nc, uint8_t w1reg, uint8_t payreg) {
  b.emit(ins::pushi(RG(w1reg)));
  b.emit(ins::pushi(RG(payreg)));
  for (uint32_t j = 2; j < nc.cell_words; ++j) b.emit(ins::pushi(IM(0)));
  b.emit(ins::alu(Opcode::kAdd, r10, RG(r10), IM(1)));
}

// Queue a message to a compile-time target; payload from a register.
void emit_queue_static(Builder& b, const Plan& plan, const NaleCtx& nc,
                       uint32_t target, uint8_t payreg, uint8_t scratch) {
  (void)plan;
  b.emit(ins::ldi(scratch, target));
  b.emit(ins::alu(Opcode::kAdd, scratch, RG(scratch), RG(r9)));
  bool local = in_range(nc, target);
  if (!local && !nc.node_path)
    b.emit(ins::alu(Opcode::kAdd, scratch, RG(scratch), RG(r8)));
  emit_push_cell(b, nc, scratch, payreg);
}

// Queue a message whose target vid sits in a register (dfs replies).
void emit_queue_runtime(Builder& b, const Plan& plan, const NaleCtx& nc,
                        uint8_t target_reg, uint8_t payreg, uint8_t scratch) {
  std::string remote = b.fresh("qr_rem");
  std::string done = b.fresh("qr_done");
  if (nc.lo > 0) {
    b.emit(ins::alu(Opcode::kCmp3, scratch, RG(target_reg), IM(nc.lo)));
    b.emit(ins::alu(Opcode::kAdd, scratch, RG(scratch), IM(1)));
    b.jz(scratch, remote);
  }
  b.emit(ins::alu(Opcode::kCmp3, scratch, RG(target_reg), IM(nc.hi)));
  b.emit(ins::alu(Opcode::kAdd, scratch, RG(scratch), IM(1)));
  b.jnz(scratch, remote);
  b.emit(ins::alu(Opcode::kAdd, scratch, RG(target_reg), RG(r9)));
  emit_push_cell(b, nc, scratch, payreg);
  b.jmp(done);
  b.label(remote);
  b.emit(ins::alu(Opcode::kAdd, scratch, RG(target_reg), RG(r9)));
  b.emit(ins::alu(Opcode::kAdd, scratch, RG(scratch), RG(r8)));
  emit_push_cell(b, nc, scratch, payreg);
  b.label(done);
}

// Drain every mesh port once: received messages become in-cells (local) or
// out-cells (to forward). Scratch: r1..r3. Never blocks on sends, so ingress
// keeps moving even while this element waits for egress credits.
void emit_drain_ports(Builder& b, const Plan& plan, const NaleCtx& nc,
                      const std::function<void(Builder&, Port)>& local_handler) {
  (void)plan;
  for (Port p : mesh_ports(nc)) {
    std::string next = b.fresh("dp_next");
    std::string fwd = b.fresh("dp_fwd");
    b.emit(ins::tryrecv(r1, p));
    b.jz(15, next);
    b.emit(ins::alu(Opcode::kAdd, r14, RG(r14), IM(1)));
    b.emit(ins::recv(r2, p));  // payload word of the pair
    if (nc.n_c > 0) {
      if (nc.lo > 0) {
        b.emit(ins::alu(Opcode::kCmp3, r3, RG(r1), IM(nc.lo)));
        b.emit(ins::alu(Opcode::kAdd, r3, RG(r3), IM(1)));
        b.jz(r3, fwd);
      }
      b.emit(ins::alu(Opcode::kCmp3, r3, RG(r1), IM(nc.hi)));
      b.emit(ins::alu(Opcode::kAdd, r3, RG(r3), IM(1)));
      b.jnz(r3, fwd);
      if (nc.node_path) {
        local_handler(b, p);  // consumes (r1=vid, r2=payload)
      } else {
        b.emit(ins::alu(Opcode::kAdd, r1, RG(r1), RG(r9)));
        emit_push_cell(b, nc, r1, r2);
      }
      b.emit(ins::ldi(r11, 1));
      b.jmp(next);
    }
    b.label(fwd);
    b.emit(ins::alu(Opcode::kAdd, r1, RG(r1), RG(r9)));
    if (!nc.node_path)
      b.emit(ins::alu(Opcode::kAdd, r1, RG(r1), RG(r8)));
    emit_push_cell(b, nc, r1, r2);
    b.emit(ins::ldi(r11, 1));
    b.label(next);
  }
}

// The single egress site: route the out-cell in (r5=vid, r6=payload), retry
// each word with TRYSEND and drain ingress between attempts (deadlock
// avoidance: a stalled sender keeps consuming).
void emit_do_out(Builder& b, const Plan& plan, const NaleCtx& nc,
                 const std::string& main_label,
                 const std::function<void(Builder&, Port)>& local_handler) {
  if (plan.k <= 1) {  // single cluster: nothing is ever remote
    b.jmp(main_label);
    return;
  }
  std::array<std::string, 4> port_label;
  std::array<bool, 4> port_used{};
  for (int i = 0; i < 4; ++i) port_label[i] = b.fresh("op");

  for (uint32_t c = 0; c < plan.k; ++c) {
    uint8_t port = xy_port(nc.row, nc.col, plan.coord[c].first,
                           plan.coord[c].second);
    std::string target;
    if (port == 0xFF) {
      target = b.fresh("op_self");  // own range: unreachable by construction
    } else {
      target = port_label[port];
      port_used[port] = true;
    }
    if (c + 1 == plan.k) {
      b.jmp(target);
    } else {
      b.emit(ins::alu(Opcode::kCmp3, r3, RG(r5), IM(plan.hi[c])));
      b.emit(ins::alu(Opcode::kAdd, r3, RG(r3), IM(1)));
      b.jz(r3, target);
    }
    if (port == 0xFF) {
      std::string skip = b.fresh("op_skip");
      b.jmp(skip);
      b.label(target);
      b.jmp(target);  // routing to self never happens; spin marks the bug
      b.label(skip);
    }
  }
  for (int p = 0; p < 4; ++p) {
    if (!port_used[p]) continue;
    Port port = static_cast<Port>(p);
    b.label(port_label[p]);
    for (uint8_t word_reg : {r5, r6}) {
      std::string retry = b.fresh("op_retry");
      std::string sent = b.fresh("op_sent");
      b.label(retry);
      b.emit(ins::trysend(port, RG(word_reg)));
      b.jnz(15, sent);
      emit_drain_ports(b, plan, nc, local_handler);
      b.jmp(retry);
      b.label(sent);
    }
    b.emit(ins::alu(Opcode::kAdd, r13, RG(r13), IM(1)));
    b.jmp(main_label);
  }
}

void emit_idle_and_control(Builder& b, const std::string& main_label,
                           const std::string& flush_label,
                           const std::string& barrier_label) {
  // Reached with no pending cells; reply to an outstanding probe, then wait
  // on the host link (the next control word always arrives eventually).
  std::string blockw = b.fresh("blockw");
  std::string bw2 = b.fresh("bw2");
  b.jnz(r11, main_label);
  b.jz(r12, blockw);
  b.emit(ins::send(Port::kHost, IM(kReplyIdleTag)));
  b.emit(ins::send(Port::kHost, RG(r13)));
  b.emit(ins::send(Port::kHost, RG(r14)));
  b.emit(ins::ldi(r12, 0));
  b.label(blockw);
  b.emit(ins::recv(r1, Port::kHost));
  b.emit(ins::recv(r2, Port::kHost));
  b.emit(ins::alu(Opcode::kCmp3, r3, RG(r1), IM(kCtrlProbe)));
  b.jnz(r3, bw2);
  b.emit(ins::ldi(r12, 1));
  b.jmp(main_label);
  b.label(bw2);
  b.emit(ins::alu(Opcode::kCmp3, r3, RG(r1), IM(kCtrlStop)));
  b.jz(r3, flush_label);
  b.jmp(barrier_label);  // tag 2
}

void emit_host_poll(Builder& b, const std::string& ports_label,
                    const std::string& flush_label,
                    const std::string& barrier_label) {
  std::string hp2 = b.fresh("hp2");
  b.emit(ins::tryrecv(r1, Port::kHost));
  b.jz(15, ports_label);
  b.emit(ins::recv(r2, Port::kHost));
  b.emit(ins::alu(Opcode::kCmp3, r3, RG(r1), IM(kCtrlProbe)));
  b.jnz(r3, hp2);
  b.emit(ins::ldi(r12, 1));
  b.jmp(ports_label);
  b.label(hp2);
  b.emit(ins::alu(Opcode::kCmp3, r3, RG(r1), IM(kCtrlStop)));
  b.jz(r3, flush_label);
  b.jmp(barrier_label);
}

// floor(p / 2^16) via 15 unrolled probe steps plus a top-bit fixup; p is
// consumed, the quotient lands in q. Uses two scratch registers.
void emit_shift16(Builder& b, uint8_t p, uint8_t q, uint8_t s1, uint8_t s2) {
  std::string pos = b.fresh("shp");
  b.emit(ins::ldi(q, 0));
  b.emit(ins::alu(Opcode::kCmp3, s1, RG(p), IM(0)));
  b.emit(ins::alu(Opcode::kAdd, s1, RG(s1), IM(1)));
  b.jnz(s1, pos);
  b.emit(ins::alu(Opcode::kSub, p, RG(p), RG(r9)));
  b.emit(ins::ldi(q, 32768));
  b.label(pos);
  for (int bit = 14; bit >= 0; --bit) {
    std::string skip = b.fresh("shb");
    b.emit(ins::alu(Opcode::kAdd, s1, RG(q), IM(1u << bit)));
    b.emit(ins::alu(Opcode::kMul, s2, RG(s1), IM(256)));
    b.emit(ins::alu(Opcode::kMul, s2, RG(s2), IM(256)));
    b.emit(ins::alu(Opcode::kCmp3, s2, RG(p), RG(s2)));
    b.emit(ins::alu(Opcode::kAdd, s2, RG(s2), IM(1)));
    b.jz(s2, skip);
    b.emit(ins::alu(Opcode::kAdd, q, RG(q), IM(1u << bit)));
    b.label(skip);
  }
}

// --- cluster-mode kernels ---------------------------------------------------

// Relaxation update shared by sssp/bfs/cc: find the record, keep the minimum,
// fan out on improvement.
void emit_relax_handle_in(Builder& b, const Plan& plan, const NaleCtx& nc,
                          const std::string& main_label) {
  std::string loop = b.fresh("hb");
  std::string match = b.fresh("hm");
  std::string keep = b.fresh("hk");
  std::string send = b.fresh("hs");
  b.emit(ins::ldi(r4, nc.n_c));
  b.emit(ins::alu(Opcode::kAdd, r4, RG(r4), RG(r10)));
  b.label(loop);
  b.emit(ins::popi(r0));
  b.emit(ins::popi(r1));
  b.emit(ins::alu(Opcode::kCmp3, r3, RG(r0), RG(r5)));
  b.jz(r3, match);
  b.emit(ins::pushi(RG(r0)));
  b.emit(ins::pushi(RG(r1)));
  b.emit(ins::alu(Opcode::kSub, r4, RG(r4), IM(1)));
  b.jnz(r4, loop);
  b.jmp(main_label);  // record not found: cannot happen
  b.label(match);
  b.emit(ins::alu(Opcode::kCmp3, r3, RG(r6), RG(r1)));
  b.emit(ins::alu(Opcode::kAdd, r3, RG(r3), IM(1)));
  b.jnz(r3, keep);
  b.emit(ins::mov(r1, r6));
  b.emit(ins::pushi(RG(r0)));
  b.emit(ins::pushi(RG(r1)));
  b.jmp(send);
  b.label(keep);
  b.emit(ins::pushi(RG(r0)));
  b.emit(ins::pushi(RG(r1)));
  b.jmp(main_label);

  // improved: fan out r6 via the per-vertex send table
  b.label(send);
  std::vector<std::string> blocks(nc.owned.size());
  for (size_t i = 0; i < nc.owned.size(); ++i) {
    blocks[i] = b.fresh("sb");
    if (i + 1 == nc.owned.size()) {
      b.jmp(blocks[i]);
    } else {
      b.emit(ins::alu(Opcode::kCmp3, r3, RG(r5), IM(nc.owned[i])));
      b.jz(r3, blocks[i]);
    }
  }
  if (nc.owned.empty()) b.jmp(main_label);
  for (size_t i = 0; i < nc.owned.size(); ++i) {
    b.label(blocks[i]);
    for (const Adjacency& a : plan.out[nc.owned[i]]) {
      switch (plan.kernel.kind) {
        case KernelKind::kSssp:
          b.emit(ins::alu(Opcode::kAdd, r1, RG(r6), IM(a.weight)));
          break;
        case KernelKind::kBfs:
          b.emit(ins::alu(Opcode::kAdd, r1, RG(r6), IM(1)));
          break;
        default:  // cc propagates the label unchanged
          b.emit(ins::mov(r1, r6));
      }
      emit_queue_static(b, plan, nc, a.target, r1, r0);
    }
    b.jmp(main_label);
  }
}

void emit_pr_handle_in(Builder& b, const Plan& plan, const NaleCtx& nc,
                       const std::string& main_label) {
  std::string loop = b.fresh("pb");
  std::string match = b.fresh("pm");
  b.emit(ins::ldi(r4, nc.n_c));
  b.emit(ins::alu(Opcode::kAdd, r4, RG(r4), RG(r10)));
  b.label(loop);
  b.emit(ins::popi(r0));
  b.emit(ins::popi(r1));
  b.emit(ins::popi(r2));
  b.emit(ins::alu(Opcode::kCmp3, r3, RG(r0), RG(r5)));
  b.jz(r3, match);
  b.emit(ins::pushi(RG(r0)));
  b.emit(ins::pushi(RG(r1)));
  b.emit(ins::pushi(RG(r2)));
  b.emit(ins::alu(Opcode::kSub, r4, RG(r4), IM(1)));
  b.jnz(r4, loop);
  b.jmp(main_label);
  b.label(match);
  b.emit(ins::alu(Opcode::kAdd, r2, RG(r2), RG(r6)));
  b.emit(ins::pushi(RG(r0)));
  b.emit(ins::pushi(RG(r1)));
  b.emit(ins::pushi(RG(r2)));
  b.jmp(main_label);
}

void emit_pr_barrier(Builder& b, const Plan& plan, const NaleCtx& nc,
                     const std::string& main_label) {
  // r2 carries the barrier's iteration number on entry.
  std::string loop = b.fresh("prb");
  std::string msgcell = b.fresh("prm");
  std::string done = b.fresh("prd");
  std::string rotate = b.fresh("prr");
  b.emit(ins::mov(r7, r2));  // iteration index
  b.emit(ins::ldi(r4, nc.n_c));
  b.emit(ins::alu(Opcode::kAdd, r4, RG(r4), RG(r10)));
  if (nc.n_c == 0) {
    b.emit(ins::ldi(r11, 1));
    b.jmp(main_label);
    return;
  }
  b.label(loop);
  b.jz(r4, done);
  b.emit(ins::alu(Opcode::kSub, r4, RG(r4), IM(1)));
  b.emit(ins::popi(r0));
  b.emit(ins::popi(r1));
  b.emit(ins::popi(r2));
  b.emit(ins::alu(Opcode::kCmp3, r3, RG(r0), IM(0)));
  b.emit(ins::alu(Opcode::kAdd, r3, RG(r3), IM(1)));
  b.jz(r3, msgcell);
  // record: rank <- base + acc, acc <- 0
  b.emit(ins::ldi(r3, plan.pr_base));
  b.emit(ins::alu(Opcode::kAdd, r1, RG(r3), RG(r2)));
  b.emit(ins::pushi(RG(r0)));
  b.emit(ins::pushi(RG(r1)));
  b.emit(ins::pushi(IM(0)));
  // last iteration: ranks final, no further contributions
  b.emit(ins::alu(Opcode::kCmp3, r3, RG(r7), IM(plan.kernel.iterations)));
  b.jz(r3, rotate);
  // per-vertex K constant
  std::vector<std::string> kblocks(nc.owned.size());
  std::string mul = b.fresh("prmul");
  for (size_t i = 0; i < nc.owned.size(); ++i) {
    kblocks[i] = b.fresh("prk");
    if (i + 1 == nc.owned.size()) {
      b.jmp(kblocks[i]);
    } else {
      b.emit(ins::alu(Opcode::kCmp3, r3, RG(r0), IM(nc.owned[i])));
      b.jz(r3, kblocks[i]);
    }
  }
  for (size_t i = 0; i < nc.owned.size(); ++i) {
    b.label(kblocks[i]);
    b.emit(ins::ldi(r6, plan.pr_k[nc.owned[i]]));
    b.jmp(mul);
  }
  b.label(mul);
  b.emit(ins::alu(Opcode::kMul, r5, RG(r1), RG(r6)));
  b.emit(ins::alu(Opcode::kAdd, r5, RG(r5), IM(32768)));
  emit_shift16(b, r5, r6, r3, r2);  // contribution lands in r6
  // per-vertex fan-out of r6
  std::vector<std::string> sblocks(nc.owned.size());
  for (size_t i = 0; i < nc.owned.size(); ++i) {
    sblocks[i] = b.fresh("prs");
    if (i + 1 == nc.owned.size()) {
      b.jmp(sblocks[i]);
    } else {
      b.emit(ins::alu(Opcode::kCmp3, r3, RG(r0), IM(nc.owned[i])));
      b.jz(r3, sblocks[i]);
    }
  }
  for (size_t i = 0; i < nc.owned.size(); ++i) {
    b.label(sblocks[i]);
    for (const Adjacency& a : plan.out[nc.owned[i]])
      emit_queue_static(b, plan, nc, a.target, r6, r3);
    b.jmp(rotate);
  }
  b.label(rotate);
  b.jmp(loop);
  b.label(msgcell);
  b.emit(ins::pushi(RG(r0)));
  b.emit(ins::pushi(RG(r1)));
  b.emit(ins::pushi(RG(r2)));
  b.jmp(loop);
  b.label(done);
  b.emit(ins::ldi(r11, 1));
  b.jmp(main_label);
}

void emit_minitri_handle_in(Builder& b, const Plan& plan, const NaleCtx& nc,
                            const std::string& main_label) {
  // (r5 = v, r6 = candidate w): count when w is adjacent to v.
  std::string hit = b.fresh("mth");
  std::vector<std::string> blocks(nc.owned.size());
  for (size_t i = 0; i < nc.owned.size(); ++i) {
    blocks[i] = b.fresh("mt");
    if (i + 1 == nc.owned.size()) {
      b.jmp(blocks[i]);
    } else {
      b.emit(ins::alu(Opcode::kCmp3, r3, RG(r5), IM(nc.owned[i])));
      b.jz(r3, blocks[i]);
    }
  }
  if (nc.owned.empty()) b.jmp(main_label);
  for (size_t i = 0; i < nc.owned.size(); ++i) {
    b.label(blocks[i]);
    for (const Adjacency& a : plan.out[nc.owned[i]]) {
      b.emit(ins::alu(Opcode::kCmp3, r3, RG(r6), IM(a.target)));
      b.jz(r3, hit);
    }
    b.jmp(main_label);
  }
  b.label(hit);
  b.emit(ins::alu(Opcode::kAdd, r7, RG(r7), IM(1)));
  b.jmp(main_label);
}

void emit_dfs_handle_in(Builder& b, const Plan& plan, const NaleCtx& nc,
                        const std::string& main_label) {
  // Message payload layout: kind * 2^28 + value, kind 1=parent-set 2=try
  // 3=reply. Record: (vid, order, scan, parent, prober).
  std::string find = b.fresh("db");
  std::string match = b.fresh("dm");
  std::string h_parent = b.fresh("dpar");
  std::string h_try = b.fresh("dtry");
  std::string h_new = b.fresh("dnew");
  std::string h_scan = b.fresh("dscan");
  std::string put = b.fresh("dput");

  b.label(find);
  b.emit(ins::popi(r0));
  b.emit(ins::alu(Opcode::kCmp3, r3, RG(r0), RG(r5)));
  b.jz(r3, match);
  b.emit(ins::pushi(RG(r0)));
  for (int j = 0; j < 4; ++j) {
    b.emit(ins::popi(r1));
    b.emit(ins::pushi(RG(r1)));
  }
  b.jmp(find);

  b.label(match);
  b.emit(ins::popi(r1));  // order
  b.emit(ins::popi(r2));  // scan
  b.emit(ins::popi(r3));  // parent
  b.emit(ins::popi(r4));  // prober
  b.emit(ins::alu(Opcode::kSub, r6, RG(r6), RG(r7)));
  b.emit(ins::alu(Opcode::kCmp3, r5, RG(r6), RG(r7)));
  b.emit(ins::alu(Opcode::kAdd, r5, RG(r5), IM(1)));
  b.jz(r5, h_parent);
  b.emit(ins::alu(Opcode::kSub, r6, RG(r6), RG(r7)));
  b.emit(ins::alu(Opcode::kCmp3, r5, RG(r6), RG(r7)));
  b.emit(ins::alu(Opcode::kAdd, r5, RG(r5), IM(1)));
  b.jz(r5, h_try);
  b.emit(ins::alu(Opcode::kSub, r6, RG(r6), RG(r7)));  // reply: r6 = counter
  b.jmp(h_scan);

  b.label(h_parent);
  b.emit(ins::mov(r4, r6));
  b.jmp(put);

  b.label(h_try);
  b.emit(ins::alu(Opcode::kCmp3, r5, RG(r1), RG(r7)));
  b.jz(r5, h_new);  // undiscovered (order == 2^28)
  // already visited: bounce the token back to the prober
  b.emit(ins::alu(Opcode::kAdd, r6, RG(r6), RG(r7)));
  b.emit(ins::alu(Opcode::kAdd, r6, RG(r6), RG(r7)));
  b.emit(ins::alu(Opcode::kAdd, r6, RG(r6), RG(r7)));
  emit_queue_runtime(b, plan, nc, r4, r6, r5);
  b.jmp(put);

  b.label(h_new);
  b.emit(ins::mov(r1, r6));  // preorder index
  b.emit(ins::mov(r3, r4));  // tree parent
  b.emit(ins::alu(Opcode::kAdd, r6, RG(r6), IM(1)));
  b.emit(ins::ldi(r2, 0));
  b.jmp(h_scan);

  // Resume the neighbor scan of vertex r0: position r2, counter r6.
  b.label(h_scan);
  std::vector<std::string> vblocks(nc.owned.size());
  for (size_t i = 0; i < nc.owned.size(); ++i) {
    vblocks[i] = b.fresh("dsc");
    if (i + 1 == nc.owned.size()) {
      b.jmp(vblocks[i]);
    } else {
      b.emit(ins::alu(Opcode::kCmp3, r5, RG(r0), IM(nc.owned[i])));
      b.jz(r5, vblocks[i]);
    }
  }
  if (nc.owned.empty()) b.jmp(put);
  for (size_t i = 0; i < nc.owned.size(); ++i) {
    uint32_t v = nc.owned[i];
    const auto& nbrs = plan.scan[v];
    b.label(vblocks[i]);
    std::string vdone = b.fresh("dvd");
    std::vector<std::string> steps(nbrs.size());
    for (size_t jx = 0; jx < nbrs.size(); ++jx) {
      steps[jx] = b.fresh("dst");
      b.emit(ins::alu(Opcode::kCmp3, r5, RG(r2), IM(static_cast<uint32_t>(jx))));
      b.jz(r5, steps[jx]);
    }
    // scan exhausted: return to the parent unless this is the root
    b.emit(ins::alu(Opcode::kCmp3, r5, RG(r3), IM(plan.vcount)));
    b.jz(r5, put);
    b.emit(ins::alu(Opcode::kAdd, r6, RG(r6), RG(r7)));
    b.emit(ins::alu(Opcode::kAdd, r6, RG(r6), RG(r7)));
    b.emit(ins::alu(Opcode::kAdd, r6, RG(r6), RG(r7)));
    emit_queue_runtime(b, plan, nc, r3, r6, r5);
    b.jmp(put);
    for (size_t jx = 0; jx < nbrs.size(); ++jx) {
      uint32_t w = nbrs[jx].target;
      b.label(steps[jx]);
      b.emit(ins::alu(Opcode::kAdd, r2, RG(r2), IM(1)));
      // parent-set first, then the try token (FIFO keeps them ordered)
      b.emit(ins::mov(r4, r7));
      b.emit(ins::alu(Opcode::kAdd, r4, RG(r4), IM(v)));
      emit_queue_static(b, plan, nc, w, r4, r5);
      b.emit(ins::mov(r4, r7));
      b.emit(ins::alu(Opcode::kAdd, r4, RG(r4), RG(r7)));
      b.emit(ins::alu(Opcode::kAdd, r4, RG(r4), RG(r6)));
      emit_queue_static(b, plan, nc, w, r4, r5);
      b.jmp(put);
    }
  }
  b.label(put);
  b.emit(ins::pushi(RG(r0)));
  b.emit(ins::pushi(RG(r1)));
  b.emit(ins::pushi(RG(r2)));
  b.emit(ins::pushi(RG(r3)));
  b.emit(ins::pushi(RG(r4)));
  b.jmp(main_label);
}

// --- program assembly per element -------------------------------------------

NaleProgram build_cluster_program(const Plan& plan, const NaleCtx& nc) {
  Builder b;
  std::string main_l = "main";
  std::string ports_l = "ports";
  std::string flush_l = "flush";
  std::string barrier_l = "barrier";
  std::string idle_l = "idle";

  emit_const_init(b, plan, nc);

  // load phase: one record per owned vertex, dispatch order
  if (nc.n_c > 0) {
    std::string ld = b.fresh("ld");
    std::string ldone = b.fresh("ldone");
    b.emit(ins::ldi(r1, nc.n_c));
    b.label(ld);
    b.jz(r1, ldone);
    b.emit(ins::recv(r2, Port::kHost));
    b.emit(ins::recv(r3, Port::kHost));
    b.emit(ins::pushi(RG(r2)));
    b.emit(ins::pushi(RG(r3)));
    for (uint32_t j = 2; j < nc.cell_words; ++j) b.emit(ins::pushi(IM(0)));
    b.emit(ins::alu(Opcode::kSub, r1, RG(r1), IM(1)));
    b.jmp(ld);
    b.label(ldone);
  }

  // phase I: initial activity
  switch (plan.kernel.kind) {
    case KernelKind::kSssp:
    case KernelKind::kBfs:
      if (in_range(nc, plan.source_new)) {
        for (const Adjacency& a : plan.out[plan.source_new]) {
          uint32_t pay = plan.kernel.kind == KernelKind::kSssp ? a.weight : 1;
          b.emit(ins::ldi(r1, pay));
          emit_queue_static(b, plan, nc, a.target, r1, r0);
        }
      }
      break;
    case KernelKind::kCc:
      for (uint32_t v : nc.owned)
        for (const Adjacency& a : plan.out[v]) {
          b.emit(ins::ldi(r1, plan.orig_of[v]));
          emit_queue_static(b, plan, nc, a.target, r1, r0);
        }
      break;
    case KernelKind::kMiniTri:
      for (uint32_t u : nc.owned) {
        const auto& nb = plan.out[u];
        for (size_t i = 0; i < nb.size(); ++i) {
          if (nb[i].target <= u) continue;
          for (size_t j = i + 1; j < nb.size(); ++j) {
            b.emit(ins::ldi(r1, nb[j].target));
            emit_queue_static(b, plan, nc, nb[i].target, r1, r0);
          }
        }
      }
      break;
    case KernelKind::kPagerank:
      for (uint32_t u : nc.owned)
        for (const Adjacency& a : plan.out[u]) {
          b.emit(ins::ldi(r1, plan.pr_cinit[u]));
          emit_queue_static(b, plan, nc, a.target, r1, r0);
        }
      break;
    case KernelKind::kDfs:
      if (in_range(nc, plan.source_new)) {
        // self-injected parent-set (no parent) + try(counter 0)
        b.emit(ins::ldi(r1, plan.source_new));
        b.emit(ins::alu(Opcode::kAdd, r1, RG(r1), RG(r9)));
        b.emit(ins::mov(r2, r7));
        b.emit(ins::alu(Opcode::kAdd, r2, RG(r2), IM(plan.vcount)));
        emit_push_cell(b, nc, r1, r2);
        b.emit(ins::ldi(r1, plan.source_new));
        b.emit(ins::alu(Opcode::kAdd, r1, RG(r1), RG(r9)));
        b.emit(ins::mov(r2, r7));
        b.emit(ins::alu(Opcode::kAdd, r2, RG(r2), RG(r7)));
        emit_push_cell(b, nc, r1, r2);
      }
      break;
  }

  auto no_local = [](Builder&, Port) {};

  b.label(main_l);
  b.emit(ins::ldi(r11, 0));
  emit_host_poll(b, ports_l, flush_l, barrier_l);
  b.label(ports_l);
  emit_drain_ports(b, plan, nc, no_local);

  std::string have_cell = b.fresh("cell");
  b.jnz(r10, have_cell);
  b.jmp(idle_l);

  // extraction: rotate to the first pending cell, classify in/out
  b.label(have_cell);
  {
    std::string exa = b.fresh("exA");
    std::string got = b.fresh("exgot");
    std::string handle_in = b.fresh("hin");
    std::string out_l = b.fresh("hout");
    b.emit(ins::ldi(r4, nc.n_c));
    b.emit(ins::alu(Opcode::kAdd, r4, RG(r4), RG(r10)));
    b.label(exa);
    b.emit(ins::popi(r0));
    b.emit(ins::alu(Opcode::kCmp3, r3, RG(r0), IM(0)));
    b.emit(ins::alu(Opcode::kAdd, r3, RG(r3), IM(1)));
    b.jz(r3, got);
    b.emit(ins::pushi(RG(r0)));
    for (uint32_t j = 1; j < nc.cell_words; ++j) {
      b.emit(ins::popi(r1));
      b.emit(ins::pushi(RG(r1)));
    }
    b.emit(ins::alu(Opcode::kSub, r4, RG(r4), IM(1)));
    b.jnz(r4, exa);
    b.jmp(main_l);
    b.label(got);
    b.emit(ins::alu(Opcode::kSub, r5, RG(r0), RG(r9)));
    b.emit(ins::popi(r6));
    for (uint32_t j = 2; j < nc.cell_words; ++j) b.emit(ins::popi(r0));
    b.emit(ins::alu(Opcode::kSub, r10, RG(r10), IM(1)));
    b.emit(ins::ldi(r11, 1));
    b.emit(ins::alu(Opcode::kCmp3, r3, RG(r5), RG(r8)));
    b.emit(ins::alu(Opcode::kAdd, r3, RG(r3), IM(1)));
    b.jz(r3, handle_in);
    b.emit(ins::alu(Opcode::kSub, r5, RG(r5), RG(r8)));
    b.jmp(out_l);

    b.label(handle_in);
    if (nc.n_c == 0) {
      b.jmp(main_l);  // forwarders only ever queue out-cells
    } else {
      switch (plan.kernel.kind) {
        case KernelKind::kSssp:
        case KernelKind::kBfs:
        case KernelKind::kCc:
          emit_relax_handle_in(b, plan, nc, main_l);
          break;
        case KernelKind::kPagerank:
          emit_pr_handle_in(b, plan, nc, main_l);
          break;
        case KernelKind::kMiniTri:
          emit_minitri_handle_in(b, plan, nc, main_l);
          break;
        case KernelKind::kDfs:
          emit_dfs_handle_in(b, plan, nc, main_l);
          break;
      }
    }
    b.label(out_l);
    emit_do_out(b, plan, nc, main_l, no_local);
  }

  b.label(idle_l);
  emit_idle_and_control(b, main_l, flush_l, barrier_l);

  b.label(barrier_l);
  if (plan.kernel.kind == KernelKind::kPagerank) {
    emit_pr_barrier(b, plan, nc, main_l);
  } else {
    b.jmp(main_l);
  }

  b.label(flush_l);
  if (nc.n_c > 0) {
    std::string fl = b.fresh("fl");
    std::string fldone = b.fresh("fld");
    b.emit(ins::ldi(r4, nc.n_c));
    if (plan.kernel.kind == KernelKind::kMiniTri) b.emit(ins::ldi(r1, 1));
    b.label(fl);
    b.jz(r4, fldone);
    b.emit(ins::alu(Opcode::kSub, r4, RG(r4), IM(1)));
    b.emit(ins::popi(r0));
    b.emit(ins::popi(r2));
    for (uint32_t j = 2; j < nc.cell_words; ++j) b.emit(ins::popi(r3));
    b.emit(ins::send(Port::kHost, RG(r0)));
    if (plan.kernel.kind == KernelKind::kMiniTri) {
      std::string zero = b.fresh("flz");
      std::string next = b.fresh("fln");
      b.jz(r1, zero);
      b.emit(ins::send(Port::kHost, RG(r7)));
      b.emit(ins::ldi(r1, 0));
      b.jmp(next);
      b.label(zero);
      b.emit(ins::send(Port::kHost, IM(0)));
      b.label(next);
    } else {
      b.emit(ins::send(Port::kHost, RG(r2)));
    }
    b.jmp(fl);
    b.label(fldone);
  }
  b.emit(ins::halt());
  return b.finish();
}

NaleProgram build_node_program(const Plan& plan, const NaleCtx& nc) {
  // One vertex per element, state held in registers:
  //   r7 value (distance / level / label / rank / triangle count)
  //   r8 pagerank accumulator
  Builder b;
  std::string main_l = "main";
  std::string ports_l = "ports";
  std::string flush_l = "flush";
  std::string barrier_l = "barrier";
  std::string idle_l = "idle";
  uint32_t me = nc.owned.front();

  emit_const_init(b, plan, nc);
  b.emit(ins::recv(r0, Port::kHost));  // vid (known statically)
  b.emit(ins::recv(r7, Port::kHost));  // initial value

  // phase I
  switch (plan.kernel.kind) {
    case KernelKind::kSssp:
    case KernelKind::kBfs:
      if (me == plan.source_new)
        for (const Adjacency& a : plan.out[me]) {
          uint32_t pay = plan.kernel.kind == KernelKind::kSssp ? a.weight : 1;
          b.emit(ins::ldi(r1, pay));
          emit_queue_static(b, plan, nc, a.target, r1, r0);
        }
      break;
    case KernelKind::kCc:
      for (const Adjacency& a : plan.out[me]) {
        b.emit(ins::ldi(r1, plan.orig_of[me]));
        emit_queue_static(b, plan, nc, a.target, r1, r0);
      }
      break;
    case KernelKind::kMiniTri: {
      const auto& nb = plan.out[me];
      for (size_t i = 0; i < nb.size(); ++i) {
        if (nb[i].target <= me) continue;
        for (size_t j = i + 1; j < nb.size(); ++j) {
          b.emit(ins::ldi(r1, nb[j].target));
          emit_queue_static(b, plan, nc, nb[i].target, r1, r0);
        }
      }
      break;
    }
    case KernelKind::kPagerank:
      for (const Adjacency& a : plan.out[me]) {
        if (a.target == me) {  // dangling self-share accumulates directly
          b.emit(ins::ldi(r1, plan.pr_cinit[me]));
          b.emit(ins::alu(Opcode::kAdd, r8, RG(r8), RG(r1)));
          continue;
        }
        b.emit(ins::ldi(r1, plan.pr_cinit[me]));
        emit_queue_static(b, plan, nc, a.target, r1, r0);
      }
      break;
    case KernelKind::kDfs:
      break;  // handled by the cluster path
  }

  // inline handler for locally addressed messages (r1=vid, r2=payload)
  auto local_handler = [&plan, me](Builder& bb, Port) {
    switch (plan.kernel.kind) {
      case KernelKind::kSssp:
      case KernelKind::kBfs:
      case KernelKind::kCc: {
        std::string keep = bb.fresh("nk");
        bb.emit(ins::alu(Opcode::kCmp3, r3, RG(r2), RG(r7)));
        bb.emit(ins::alu(Opcode::kAdd, r3, RG(r3), IM(1)));
        bb.jnz(r3, keep);
        bb.emit(ins::mov(r7, r2));
        for (const Adjacency& a : plan.out[me]) {
          switch (plan.kernel.kind) {
            case KernelKind::kSssp:
              bb.emit(ins::alu(Opcode::kAdd, r2, RG(r7), IM(a.weight)));
              break;
            case KernelKind::kBfs:
              bb.emit(ins::alu(Opcode::kAdd, r2, RG(r7), IM(1)));
              break;
            default:
              bb.emit(ins::mov(r2, r7));
          }
          bb.emit(ins::ldi(r3, a.target));
          bb.emit(ins::alu(Opcode::kAdd, r3, RG(r3), RG(r9)));
          bb.emit(ins::pushi(RG(r3)));
          bb.emit(ins::pushi(RG(r2)));
          bb.emit(ins::alu(Opcode::kAdd, r10, RG(r10), IM(1)));
        }
        bb.label(keep);
        break;
      }
      case KernelKind::kPagerank:
        bb.emit(ins::alu(Opcode::kAdd, r8, RG(r8), RG(r2)));
        break;
      case KernelKind::kMiniTri: {
        std::string hit = bb.fresh("nh");
        std::string miss = bb.fresh("nm");
        for (const Adjacency& a : plan.out[me]) {
          bb.emit(ins::alu(Opcode::kCmp3, r3, RG(r2), IM(a.target)));
          bb.jz(r3, hit);
        }
        bb.jmp(miss);
        bb.label(hit);
        bb.emit(ins::alu(Opcode::kAdd, r7, RG(r7), IM(1)));
        bb.label(miss);
        break;
      }
      case KernelKind::kDfs:
        break;
    }
  };

  b.label(main_l);
  b.emit(ins::ldi(r11, 0));
  emit_host_poll(b, ports_l, flush_l, barrier_l);
  b.label(ports_l);
  emit_drain_ports(b, plan, nc, local_handler);

  std::string have = b.fresh("cell");
  b.jnz(r10, have);
  b.jmp(idle_l);
  b.label(have);
  b.emit(ins::popi(r0));
  b.emit(ins::popi(r6));
  b.emit(ins::alu(Opcode::kSub, r5, RG(r0), RG(r9)));
  b.emit(ins::alu(Opcode::kSub, r10, RG(r10), IM(1)));
  b.emit(ins::ldi(r11, 1));
  emit_do_out(b, plan, nc, main_l, local_handler);

  b.label(idle_l);
  emit_idle_and_control(b, main_l, flush_l, barrier_l);

  b.label(barrier_l);
  if (plan.kernel.kind == KernelKind::kPagerank) {
    std::string skip = b.fresh("nbd");
    b.emit(ins::ldi(r3, plan.pr_base));
    b.emit(ins::alu(Opcode::kAdd, r7, RG(r3), RG(r8)));
    b.emit(ins::ldi(r8, 0));
    b.emit(ins::alu(Opcode::kCmp3, r3, RG(r2), IM(plan.kernel.iterations)));
    b.jz(r3, skip);
    b.emit(ins::alu(Opcode::kMul, r5, RG(r7), IM(plan.pr_k[me])));
    b.emit(ins::alu(Opcode::kAdd, r5, RG(r5), IM(32768)));
    emit_shift16(b, r5, r6, r3, r4);
    for (const Adjacency& a : plan.out[me]) {
      if (a.target == me) {
        b.emit(ins::alu(Opcode::kAdd, r8, RG(r8), RG(r6)));
        continue;
      }
      b.emit(ins::ldi(r3, a.target));
      b.emit(ins::alu(Opcode::kAdd, r3, RG(r3), RG(r9)));
      b.emit(ins::pushi(RG(r3)));
      b.emit(ins::pushi(RG(r6)));
      b.emit(ins::alu(Opcode::kAdd, r10, RG(r10), IM(1)));
    }
    b.label(skip);
    b.emit(ins::ldi(r11, 1));
    b.jmp(main_l);
  } else {
    b.jmp(main_l);
  }

  b.label(flush_l);
  b.emit(ins::send(Port::kHost, IM(me)));
  b.emit(ins::send(Port::kHost, RG(r7)));
  b.emit(ins::halt());
  return b.finish();
}

}  // namespace

CompiledApp codegen(const KernelSpec& kernel, const Graph& g,
                    const Partition& part, const Placement& pl,
                    MappingMode mode) {
  uint32_t V = g.vertex_count;
  if (V == 0) throw CompileError("codegen: empty graph");
  if (V > 0xFFFF)
    throw CompileError("codegen: vertex count exceeds the 16-bit immediate "
                       "range of the instruction set");
  for (uint32_t w : g.weights)
    if (w > 0xFFFF)
      throw CompileError("codegen: edge weight exceeds 16-bit immediates");
  if (mode == MappingMode::kNodeLevel && part.cluster_count != V)
    throw CompileError("codegen: node-level mapping requires k == V");
  if (kernel.kind == KernelKind::kMiniTri && g.directed)
    throw DomainError("minitri expects an undirected graph");
  if (kernel.kind == KernelKind::kPagerank && kernel.damping > 0.99)
    throw DomainError("pagerank damping above 0.99 risks fixed-point overflow");

  Plan plan;
  plan.g = &g;
  plan.kernel = kernel;
  plan.mode = mode;
  plan.k = part.cluster_count;
  plan.rows = pl.rows;
  plan.cols = pl.cols;
  plan.vcount = V;

  // Renumber so each cluster owns a contiguous id range.
  std::vector<uint32_t> order(V);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return part.cluster_of[a] < part.cluster_of[b];
  });
  plan.orig_of = order;
  plan.new_of.resize(V);
  for (uint32_t i = 0; i < V; ++i) plan.new_of[order[i]] = i;
  plan.cluster_of_new.resize(V);
  for (uint32_t i = 0; i < V; ++i)
    plan.cluster_of_new[i] = part.cluster_of[order[i]];
  plan.lo.assign(plan.k, 0);
  plan.hi.assign(plan.k, 0);
  for (uint32_t i = 0; i < V; ++i) plan.hi[plan.cluster_of_new[i]] = i + 1;
  for (uint32_t c = 1; c < plan.k; ++c) plan.lo[c] = plan.hi[c - 1];

  plan.coord.resize(plan.k);
  for (uint32_t c = 0; c < plan.k; ++c) plan.coord[c] = pl.coord_of[c];
  plan.cluster_at.assign(plan.rows * plan.cols, -1);
  for (uint32_t c = 0; c < plan.k; ++c)
    plan.cluster_at[plan.coord[c].first * plan.cols + plan.coord[c].second] =
        static_cast<int>(c);

  // Send adjacency in renumbered space. cc treats edges as undirected.
  bool symmetric = kernel.kind == KernelKind::kCc && g.directed;
  plan.out.assign(V, {});
  for (VertexId u = 0; u < V; ++u) {
    uint32_t nu = plan.new_of[u];
    for (uint64_t i = g.offsets[u]; i < g.offsets[u + 1]; ++i) {
      uint32_t nv = plan.new_of[g.targets[i]];
      plan.out[nu].push_back({nv, g.weights[i]});
      if (symmetric) plan.out[nv].push_back({nu, g.weights[i]});
    }
  }
  for (auto& nbrs : plan.out) {
    std::sort(nbrs.begin(), nbrs.end(),
              [](const Adjacency& a, const Adjacency& b) {
                return a.target < b.target;
              });
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end(),
                           [](const Adjacency& a, const Adjacency& b) {
                             return a.target == b.target;
                           }),
               nbrs.end());
  }

  if (kernel.kind == KernelKind::kDfs) {
    // Token scan follows ascending original ids, exactly like the oracle.
    plan.scan.assign(V, {});
    for (uint32_t nv = 0; nv < V; ++nv) {
      plan.scan[nv] = plan.out[nv];
      std::sort(plan.scan[nv].begin(), plan.scan[nv].end(),
                [&](const Adjacency& a, const Adjacency& b) {
                  return plan.orig_of[a.target] < plan.orig_of[b.target];
                });
    }
  }

  bool needs_source = kernel.kind == KernelKind::kSssp ||
                      kernel.kind == KernelKind::kBfs ||
                      kernel.kind == KernelKind::kDfs;
  if (needs_source) {
    if (kernel.source >= V) throw DomainError("codegen: source out of range");
    plan.source_new = plan.new_of[kernel.source];
  }

  switch (kernel.kind) {
    case KernelKind::kSssp:
    case KernelKind::kBfs:
      plan.rec_words = 2;
      break;
    case KernelKind::kCc:
    case KernelKind::kMiniTri:
      plan.rec_words = 2;
      break;
    case KernelKind::kPagerank:
      plan.rec_words = 3;
      break;
    case KernelKind::kDfs:
      plan.rec_words = 5;
      break;
  }

  if (kernel.kind == KernelKind::kPagerank) {
    plan.pr_init = fx(1.0 / V);
    plan.pr_base = fx((1.0 - kernel.damping) / V);
    plan.pr_k.resize(V);
    plan.pr_cinit.resize(V);
    for (uint32_t nv = 0; nv < V; ++nv) {
      size_t deg = plan.out[nv].size();
      plan.pr_k[nv] =
          deg == 0 ? fx(kernel.damping / V) : fx(kernel.damping / deg);
      plan.pr_cinit[nv] = fx_contrib(plan.pr_init, plan.pr_k[nv]);
    }
    // Dangling vertices spread their share to every vertex.
    for (uint32_t nv = 0; nv < V; ++nv) {
      if (!plan.out[nv].empty()) continue;
      plan.out[nv].clear();
      for (uint32_t t = 0; t < V; ++t) plan.out[nv].push_back({t, 0});
    }
  }

  CompiledApp app;
  app.rows = plan.rows;
  app.cols = plan.cols;
  app.mode = mode;
  app.cluster_count = plan.k;
  app.kernel = kernel;
  app.vertex_count = V;
  app.new_of = plan.new_of;
  app.orig_of = plan.orig_of;
  app.protocol_waves = true;
  app.barrier_total =
      kernel.kind == KernelKind::kPagerank ? kernel.iterations : 0;

  // Routing tables (also compiled into the programs as compare chains).
  app.routing.assign(plan.rows * plan.cols,
                     std::vector<uint8_t>(plan.k, 0xFF));
  for (uint32_t r = 0; r < plan.rows; ++r)
    for (uint32_t c2 = 0; c2 < plan.cols; ++c2)
      for (uint32_t c = 0; c < plan.k; ++c)
        app.routing[r * plan.cols + c2][c] =
            xy_port(r, c2, plan.coord[c].first, plan.coord[c].second);

  // Dispatch manifest: ascending renumbered id == cluster-major order.
  for (uint32_t nv = 0; nv < V; ++nv) {
    uint32_t cl = plan.cluster_of_new[nv];
    uint32_t nale = plan.coord[cl].first * plan.cols + plan.coord[cl].second;
    uint32_t payload = 0;
    switch (kernel.kind) {
      case KernelKind::kSssp:
      case KernelKind::kBfs:
        payload = nv == plan.source_new ? 0 : kInfDistance;
        break;
      case KernelKind::kCc:
        payload = plan.orig_of[nv];
        break;
      case KernelKind::kPagerank:
        payload = plan.pr_init;
        break;
      case KernelKind::kDfs:
        payload = kDfsUnvisited;
        break;
      case KernelKind::kMiniTri:
        payload = 0;
        break;
    }
    app.dispatch.push_back({nale, nv, payload});
  }

  app.gather_vids.assign(plan.rows * plan.cols, {});
  for (uint32_t nv = 0; nv < V; ++nv) {
    uint32_t cl = plan.cluster_of_new[nv];
    app.gather_vids[plan.coord[cl].first * plan.cols + plan.coord[cl].second]
        .push_back(nv);
  }

  // Internal FIFO sizing: records + phase-one traffic + slack for queued
  // cells; overflow faults loudly rather than corrupting.
  uint64_t edge_records = g.edge_records();
  uint64_t minitri_cand = 0;
  if (kernel.kind == KernelKind::kMiniTri)
    for (uint32_t u = 0; u < V; ++u) {
      const auto& nb = plan.out[u];
      for (size_t i = 0; i < nb.size(); ++i) {
        if (nb[i].target <= u) continue;
        minitri_cand += nb.size() - i - 1;
      }
    }
  uint64_t pr_targets = 0;
  if (kernel.kind == KernelKind::kPagerank)
    for (uint32_t u = 0; u < V; ++u) pr_targets += plan.out[u].size();
  uint64_t cells = 16ull * (edge_records + V) + minitri_cand + pr_targets + 1024;
  app.fifo_capacity_needed = static_cast<uint32_t>(
      std::min<uint64_t>(plan.rec_words * (V + cells), 64ull << 20));

  // Programs.
  app.programs.resize(plan.rows * plan.cols);
  for (uint32_t r = 0; r < plan.rows; ++r)
    for (uint32_t c = 0; c < plan.cols; ++c) {
      uint32_t idx = r * plan.cols + c;
      NaleCtx nc;
      nc.row = r;
      nc.col = c;
      nc.cluster = plan.cluster_at[idx];
      nc.has_north = r > 0;
      nc.has_south = r + 1 < plan.rows;
      nc.has_west = c > 0;
      nc.has_east = c + 1 < plan.cols;
      if (nc.cluster >= 0) {
        nc.lo = plan.lo[nc.cluster];
        nc.hi = plan.hi[nc.cluster];
        nc.n_c = nc.hi - nc.lo;
        for (uint32_t v = nc.lo; v < nc.hi; ++v) nc.owned.push_back(v);
      }
      nc.node_path = mode == MappingMode::kNodeLevel && nc.n_c == 1 &&
                     kernel.kind != KernelKind::kDfs;
      nc.cell_words = nc.node_path ? 2 : plan.rec_words;
      app.programs[idx] = nc.node_path ? build_node_program(plan, nc)
                                       : build_cluster_program(plan, nc);
    }
  return app;
}

// ---------------------------------------------------------------------------
// Directory serialization

void save_compiled(const CompiledApp& app, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  json manifest;
  manifest["dims"] = {{"rows", app.rows}, {"cols", app.cols}};
  manifest["mode"] = mapping_mode_name(app.mode);
  manifest["k"] = app.cluster_count;
  manifest["kernel"] = kernel_name(app.kernel.kind);
  manifest["source"] = app.kernel.source;
  manifest["damping"] = app.kernel.damping;
  manifest["iterations"] = app.kernel.iterations;
  manifest["vertex_count"] = app.vertex_count;
  manifest["orig_of"] = app.orig_of;
  manifest["gather"] = app.gather_vids;
  manifest["protocol_waves"] = app.protocol_waves;
  manifest["barrier_total"] = app.barrier_total;
  manifest["fifo_capacity"] = app.fifo_capacity_needed;
  std::ofstream mf(dir + "/manifest.json", std::ios::binary);
  mf << manifest.dump(2) << "\n";

  json routing = app.routing;
  std::ofstream rf(dir + "/routing.json", std::ios::binary);
  rf << routing.dump() << "\n";

  std::ofstream df(dir + "/dispatch.csv", std::ios::binary);
  df << "nale,vid,payload\n";
  for (const DispatchEntry& e : app.dispatch)
    df << e.nale << "," << e.vid << "," << e.payload << "\n";

  for (uint32_t r = 0; r < app.rows; ++r)
    for (uint32_t c = 0; c < app.cols; ++c) {
      std::string path = dir + "/nale_" + std::to_string(r) + "_" +
                         std::to_string(c) + ".bin";
      save_program_file(app.programs[app.nale_index(r, c)], path);
    }
}

CompiledApp load_compiled(const std::string& dir) {
  std::ifstream mf(dir + "/manifest.json");
  if (!mf) throw ConfigError("cannot open " + dir + "/manifest.json");
  json manifest = json::parse(mf);

  CompiledApp app;
  app.rows = manifest["dims"]["rows"].get<uint32_t>();
  app.cols = manifest["dims"]["cols"].get<uint32_t>();
  app.mode = mapping_mode_from_name(manifest["mode"].get<std::string>());
  app.cluster_count = manifest["k"].get<uint32_t>();
  app.kernel.kind = kernel_from_name(manifest["kernel"].get<std::string>());
  app.kernel.source = manifest["source"].get<uint32_t>();
  app.kernel.damping = manifest["damping"].get<double>();
  app.kernel.iterations = manifest["iterations"].get<uint32_t>();
  app.vertex_count = manifest["vertex_count"].get<uint32_t>();
  app.orig_of = manifest["orig_of"].get<std::vector<uint32_t>>();
  app.new_of.resize(app.vertex_count);
  for (uint32_t i = 0; i < app.vertex_count; ++i) app.new_of[app.orig_of[i]] = i;
  app.gather_vids = manifest["gather"].get<std::vector<std::vector<uint32_t>>>();
  app.protocol_waves = manifest["protocol_waves"].get<bool>();
  app.barrier_total = manifest["barrier_total"].get<uint32_t>();
  app.fifo_capacity_needed = manifest["fifo_capacity"].get<uint32_t>();

  std::ifstream rf(dir + "/routing.json");
  if (!rf) throw ConfigError("cannot open " + dir + "/routing.json");
  json routing = json::parse(rf);
  app.routing = routing.get<std::vector<std::vector<uint8_t>>>();

  std::ifstream df(dir + "/dispatch.csv");
  if (!df) throw ConfigError("cannot open " + dir + "/dispatch.csv");
  std::string line;
  std::getline(df, line);  // header
  while (std::getline(df, line)) {
    if (line.empty()) continue;
    DispatchEntry e;
    if (std::sscanf(line.c_str(), "%u,%u,%u", &e.nale, &e.vid, &e.payload) != 3)
      throw ParseError("dispatch.csv: bad row: " + line);
    app.dispatch.push_back(e);
  }

  app.programs.resize(app.rows * app.cols);
  for (uint32_t r = 0; r < app.rows; ++r)
    for (uint32_t c = 0; c < app.cols; ++c)
      app.programs[app.nale_index(r, c)] = load_program_file(
          dir + "/nale_" + std::to_string(r) + "_" + std::to_string(c) + ".bin");
  return app;
}

}  // namespace gproc
