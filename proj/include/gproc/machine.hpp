#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "gproc/codegen.hpp"
#include "gproc/config.hpp"

namespace gproc {

using Word = uint32_t;
using SimTime = uint64_t;

struct Metrics {
  SimTime makespan = 0;
  std::array<uint64_t, kOpcodeCount> op_counts{};
  uint64_t words_moved = 0;  // words delivered over mesh + host links
  uint64_t mem_batches = 0;
  uint64_t events = 0;  // executed instructions + simulator events
  std::vector<uint64_t> busy;  // per element, time spent executing

  uint64_t total_ops() const {
    uint64_t s = 0;
    for (uint64_t c : op_counts) s += c;
    return s;
  }
};

// Pure function of the metrics; missing table entries for counted activity
// are a config error.
double estimate_energy(const Metrics& m, const EnergyTable& table);

struct TimeoutError : std::runtime_error {
  Metrics partial;
  explicit TimeoutError(Metrics m)
      : std::runtime_error("simulation exceeded event budget (livelock or "
                           "deadlock in the compiled program)"),
        partial(std::move(m)) {}
};

struct FaultError : std::runtime_error {
  uint32_t row, col, pc;
  FaultError(uint32_t r, uint32_t c, uint32_t at, const std::string& why)
      : std::runtime_error("machine fault at element (" + std::to_string(r) +
                           "," + std::to_string(c) + ") pc=" +
                           std::to_string(at) + ": " + why),
        row(r), col(c), pc(at) {}
};

struct RunOutput {
  Metrics metrics;
  // Per-vertex values indexed by original dense id; sentinel translation
  // already applied (kUnreached for unreachable/undiscovered).
  std::vector<Word> values;
  uint64_t scalar = 0;  // miniTri triangle total
};

struct StepReport {
  SimTime t = 0;
  std::string what;
};

enum class NaleStatus : uint8_t { kRunning, kBlockedRecv, kBlockedSend, kHalted };

class Machine {
 public:
  explicit Machine(const MachineConfig& config);

  // Installs programs and queues the dispatch manifest through the host
  // links in memory batches.
  void load(const CompiledApp& app);

  // For fault-path tests: raw words, decoded lazily so undefined words fault
  // at execution time.
  void load_raw_program(uint32_t row, uint32_t col,
                        const std::vector<uint32_t>& words);

  // Runs to quiescence (all halted, channels empty) and gathers results.
  RunOutput run();

  // Processes one simulator event; nullopt when already quiescent.
  std::optional<StepReport> step();

  bool quiescent() const;
  // Structural invariant check (channel conservation, occupancy, statuses).
  void validate_invariants() const;

  const Metrics& metrics() const { return metrics_; }
  NaleStatus status_of(uint32_t row, uint32_t col) const;

 private:
  struct DecodedOp {
    uint8_t op;  // 0xFF = undefined word (faults on execution)
    uint8_t dst;
    uint8_t a_imm, b_imm;
    uint32_t a, b;
    uint8_t port;
  };

  struct Channel {
    int src = -1;  // element index, -1 = host side
    int dst = -1;
    uint8_t dst_port = 0;  // receiving port
    uint32_t credits = 0;
    uint32_t credits_pending = 0;  // scheduled credit returns
    struct Flying {
      Word word;
      SimTime at;
      uint64_t seq;
    };
    std::deque<Flying> in_flight;
    std::deque<std::pair<Word, uint64_t>> buffer;  // delivered, awaiting recv
    uint64_t sent = 0, delivered = 0, consumed = 0, credits_back = 0;
  };

  struct Nale {
    std::vector<DecodedOp> program;
    uint32_t pc = 0;
    std::array<Word, 16> regs{};
    std::deque<Word> fifo;
    NaleStatus status = NaleStatus::kHalted;  // stays halted if unprogrammed
    uint8_t blocked_port = 0;
    SimTime local_time = 0;
    std::array<int, kPortCount> chan_in;
    std::array<int, kPortCount> chan_out;
  };

  struct Event {
    SimTime t;
    uint32_t actor;
    uint64_t seq;
    uint8_t kind;
    uint32_t arg;
    bool operator>(const Event& o) const {
      if (t != o.t) return t > o.t;
      if (actor != o.actor) return actor > o.actor;
      return seq > o.seq;
    }
  };

  enum EventKind : uint8_t { kEvResume, kEvDeliver, kEvCredit, kEvMemTick };

  // Host-side controller: dispatch injection, probe waves, barriers, stop,
  // gather collection.
  struct HostCtl {
    bool protocol = false;
    bool waves_started = false;
    bool stopping = false;
    uint32_t wave = 0;
    uint32_t barriers_done = 0;
    uint32_t barrier_total = 0;
    uint64_t prev_sent = UINT64_MAX, prev_recv = UINT64_MAX;
    uint32_t replies_pending = 0;
    std::vector<std::deque<std::pair<Word, SimTime>>> inject;  // word, ready at
    std::vector<std::vector<Word>> reply_buf;
    std::vector<uint64_t> rep_sent, rep_recv;
    std::vector<uint8_t> replied;
    std::vector<std::vector<Word>> gather;
    std::vector<std::pair<uint32_t, Word>> dispatch_words;
    uint32_t batches_released = 0, batches_total = 0;
  };

  // -- wiring
  uint32_t index_of(uint32_t r, uint32_t c) const { return r * cols_ + c; }
  uint32_t host_actor() const {
    return count_ + static_cast<uint32_t>(channels_.size());
  }
  void build_topology();
  void schedule(SimTime t, uint32_t actor, uint8_t kind, uint32_t arg);
  bool heap_blocks(SimTime t, uint32_t actor) const;
  void maybe_start_waves(SimTime now);

  // -- execution
  void resume_nale(uint32_t id, SimTime now);
  void exec_channel_op(uint32_t id, Nale& n, const DecodedOp& op, SimTime& now,
                       bool& yielded);
  void deliver(uint32_t chan_id, SimTime now);
  void credit(uint32_t chan_id, SimTime now);
  void mem_tick(uint32_t batch, SimTime now);
  void try_inject(uint32_t nale, SimTime now);
  void host_consume(uint32_t nale, Word w, SimTime now);
  void wave_start(SimTime now);
  void wave_decide(SimTime now);
  void host_send_ctrl(uint32_t nale, Word tag, Word value, SimTime now);
  void note_time(SimTime t);
  [[noreturn]] void fault(uint32_t id, uint32_t pc, const std::string& why);
  void charge(Opcode op, uint32_t id, SimTime& now);
  Word operand(const Nale& n, uint8_t is_imm, uint32_t v) const {
    return is_imm ? v : n.regs[v & 15];
  }
  void check_budget();

  RunOutput assemble_results();

  MachineConfig cfg_;
  uint32_t rows_ = 1, cols_ = 1, count_ = 1;
  uint32_t fifo_capacity_ = 256;
  std::vector<Nale> nales_;
  std::vector<Channel> channels_;
  std::vector<int> host_in_, host_out_;  // per element channel ids
  std::priority_queue<Event, std::vector<Event>, std::greater<>> heap_;
  uint64_t seq_ = 0;
  SimTime last_event_t_ = 0;
  HostCtl host_;
  Metrics metrics_;
  const CompiledApp* app_ = nullptr;
  bool loaded_ = false;
  uint32_t halted_count_ = 0;
  uint32_t programmed_count_ = 0;
};

}  // namespace gproc
