#include "gproc/machine.hpp"

#include <algorithm>

namespace gproc {

double estimate_energy(const Metrics& m, const EnergyTable& table) {
  double total = 0.0;
  for (int i = 0; i < kOpcodeCount; ++i) {
    if (m.op_counts[i] == 0) continue;
    if (!table.op_present[i])
      throw ConfigError(std::string("energy table missing entry for '") +
                        opcode_name(static_cast<Opcode>(i)) + "'");
    total += static_cast<double>(m.op_counts[i]) * table.op[i];
  }
  if (m.words_moved) {
    if (!table.transfer_present)
      throw ConfigError("energy table missing 'transfer' entry");
    total += static_cast<double>(m.words_moved) * table.transfer;
  }
  return total;
}

Machine::Machine(const MachineConfig& config) : cfg_(config) {
  rows_ = cfg_.rows;
  cols_ = cfg_.cols;
  count_ = rows_ * cols_;
  build_topology();
  metrics_.busy.assign(count_, 0);
}

void Machine::build_topology() {
  nales_.assign(count_, {});
  for (auto& n : nales_) {
    n.chan_in.fill(-1);
    n.chan_out.fill(-1);
  }
  auto add_channel = [&](int src, int dst, Port dst_port) {
    Channel ch;
    ch.src = src;
    ch.dst = dst;
    ch.dst_port = static_cast<uint8_t>(dst_port);
    ch.credits = cfg_.channel.capacity;
    channels_.push_back(ch);
    return static_cast<int>(channels_.size() - 1);
  };
  auto opposite = [](Port p) {
    switch (p) {
      case Port::kNorth: return Port::kSouth;
      case Port::kSouth: return Port::kNorth;
      case Port::kEast: return Port::kWest;
      default: return Port::kEast;
    }
  };
  for (uint32_t r = 0; r < rows_; ++r)
    for (uint32_t c = 0; c < cols_; ++c) {
      uint32_t me = index_of(r, c);
      auto link = [&](Port out_port, uint32_t other) {
        int ch = add_channel(me, other, opposite(out_port));
        nales_[me].chan_out[static_cast<int>(out_port)] = ch;
        nales_[other].chan_in[static_cast<int>(opposite(out_port))] = ch;
      };
      if (r > 0) link(Port::kNorth, index_of(r - 1, c));
      if (r + 1 < rows_) link(Port::kSouth, index_of(r + 1, c));
      if (c > 0) link(Port::kWest, index_of(r, c - 1));
      if (c + 1 < cols_) link(Port::kEast, index_of(r, c + 1));
    }
  host_in_.resize(count_);
  host_out_.resize(count_);
  for (uint32_t i = 0; i < count_; ++i) {
    host_in_[i] = add_channel(-1, static_cast<int>(i), Port::kHost);
    nales_[i].chan_in[static_cast<int>(Port::kHost)] = host_in_[i];
    host_out_[i] = add_channel(static_cast<int>(i), -1, Port::kHost);
    nales_[i].chan_out[static_cast<int>(Port::kHost)] = host_out_[i];
  }
}

void Machine::schedule(SimTime t, uint32_t actor, uint8_t kind, uint32_t arg) {
  heap_.push(Event{t, actor, seq_++, kind, arg});
}

bool Machine::heap_blocks(SimTime t, uint32_t actor) const {
  if (heap_.empty()) return false;
  const Event& top = heap_.top();
  return top.t < t || (top.t == t && top.actor < actor);
}

void Machine::note_time(SimTime t) {
  if (t > metrics_.makespan) metrics_.makespan = t;
}

void Machine::check_budget() {
  if (metrics_.events > cfg_.event_budget) throw TimeoutError(metrics_);
}

void Machine::fault(uint32_t id, uint32_t pc, const std::string& why) {
  throw FaultError(id / cols_, id % cols_, pc, why);
}

NaleStatus Machine::status_of(uint32_t row, uint32_t col) const {
  return nales_[index_of(row, col)].status;
}

// ---------------------------------------------------------------------------
// Loading

void Machine::load(const CompiledApp& app) {
  if (app.rows > rows_ || app.cols > cols_)
    throw LoadError("load: app dims " + std::to_string(app.rows) + "x" +
                    std::to_string(app.cols) + " exceed machine " +
                    std::to_string(rows_) + "x" + std::to_string(cols_));
  app_ = &app;
  uint32_t fifo_cap = std::max(cfg_.internal_fifo_capacity,
                               app.fifo_capacity_needed);

  for (uint32_t r = 0; r < app.rows; ++r)
    for (uint32_t c = 0; c < app.cols; ++c) {
      const NaleProgram& prog = app.programs[app.nale_index(r, c)];
      Nale& n = nales_[index_of(r, c)];
      n.program.clear();
      n.program.reserve(prog.code.size());
      for (const Instruction& i : prog.code) {
        DecodedOp d{};
        d.op = static_cast<uint8_t>(i.op);
        d.dst = i.dst;
        d.a_imm = i.a.kind == Operand::Kind::kImm;
        d.a = i.a.value;
        d.b_imm = i.b.kind == Operand::Kind::kImm;
        d.b = i.b.value;
        d.port = i.port;
        n.program.push_back(d);
      }
      if (!n.program.empty()) {
        n.status = NaleStatus::kRunning;
        ++programmed_count_;
        schedule(0, index_of(r, c), kEvResume, 0);
      }
    }
  for (auto& n : nales_) n.fifo.clear();
  fifo_capacity_ = fifo_cap;

  host_.protocol = app.protocol_waves;
  host_.barrier_total = app.barrier_total;
  host_.inject.assign(count_, {});
  host_.reply_buf.assign(count_, {});
  host_.rep_sent.assign(count_, 0);
  host_.rep_recv.assign(count_, 0);
  host_.replied.assign(count_, 0);
  host_.gather.assign(count_, {});

  host_.dispatch_words.clear();
  for (const DispatchEntry& e : app.dispatch) {
    uint32_t idx = index_of(e.nale / app.cols, e.nale % app.cols);
    host_.dispatch_words.push_back({idx, e.vid});
    host_.dispatch_words.push_back({idx, e.payload});
  }
  uint32_t B = cfg_.memory.batch_words;
  host_.batches_total =
      static_cast<uint32_t>((host_.dispatch_words.size() + B - 1) / B);
  host_.batches_released = 0;
  if (host_.batches_total > 0)
    schedule(0, host_actor(), kEvMemTick, 0);
  else if (host_.protocol)
    wave_start(0);
  loaded_ = true;
}

void Machine::load_raw_program(uint32_t row, uint32_t col,
                               const std::vector<uint32_t>& words) {
  Nale& n = nales_[index_of(row, col)];
  n.program.clear();
  for (uint32_t w : words) {
    DecodedOp d{};
    try {
      Instruction i = decode(w);
      d.op = static_cast<uint8_t>(i.op);
      d.dst = i.dst;
      d.a_imm = i.a.kind == Operand::Kind::kImm;
      d.a = i.a.value;
      d.b_imm = i.b.kind == Operand::Kind::kImm;
      d.b = i.b.value;
      d.port = i.port;
    } catch (const DecodeError&) {
      d.op = 0xFF;  // faults when executed
    }
    n.program.push_back(d);
  }
  if (n.status != NaleStatus::kRunning && !n.program.empty()) {
    n.status = NaleStatus::kRunning;
    ++programmed_count_;
    schedule(0, index_of(row, col), kEvResume, 0);
  }
  if (host_.inject.empty()) {
    host_.inject.assign(count_, {});
    host_.gather.assign(count_, {});
    host_.reply_buf.assign(count_, {});
  }
  loaded_ = true;
}

// ---------------------------------------------------------------------------
// Host side: dispatch injection, waves, gather

void Machine::mem_tick(uint32_t batch, SimTime now) {
  uint32_t B = cfg_.memory.batch_words;
  if (batch > 0) {
    size_t lo = static_cast<size_t>(batch - 1) * B;
    size_t hi = std::min(host_.dispatch_words.size(), lo + B);
    for (size_t i = lo; i < hi; ++i) {
      auto [nale, word] = host_.dispatch_words[i];
      host_.inject[nale].push_back({word, now});
    }
    host_.batches_released = batch;
    for (size_t i = lo; i < hi; ++i) try_inject(host_.dispatch_words[i].first, now);
  }
  if (batch < host_.batches_total) {
    ++metrics_.mem_batches;
    schedule(now + cfg_.memory.batch_latency, host_actor(), kEvMemTick,
             batch + 1);
  }
  maybe_start_waves(now);
}

void Machine::try_inject(uint32_t nale, SimTime now) {
  Channel& ch = channels_[host_in_[nale]];
  auto& q = host_.inject[nale];
  while (!q.empty() && q.front().second <= now && ch.credits > 0) {
    Word w = q.front().first;
    q.pop_front();
    ch.credits--;
    ch.in_flight.push_back({w, now + cfg_.channel.forward_latency, ch.sent++});
    schedule(now + cfg_.channel.forward_latency,
             count_ + static_cast<uint32_t>(host_in_[nale]), kEvDeliver,
             host_in_[nale]);
  }
  maybe_start_waves(now);
}

void Machine::maybe_start_waves(SimTime now) {
  if (!host_.protocol || host_.waves_started) return;
  if (host_.batches_released != host_.batches_total) return;
  for (const auto& q : host_.inject)
    if (!q.empty()) return;
  wave_start(now);
}

void Machine::host_send_ctrl(uint32_t nale, Word tag, Word value, SimTime now) {
  host_.inject[nale].push_back({tag, now});
  host_.inject[nale].push_back({value, now});
  try_inject(nale, now);
}

void Machine::wave_start(SimTime now) {
  host_.waves_started = true;
  host_.wave++;
  host_.replies_pending = 0;
  std::fill(host_.replied.begin(), host_.replied.end(), 0);
  for (uint32_t i = 0; i < count_; ++i) {
    if (nales_[i].program.empty() || nales_[i].status == NaleStatus::kHalted)
      continue;
    ++host_.replies_pending;
  }
  for (uint32_t i = 0; i < count_; ++i) {
    if (nales_[i].program.empty() || nales_[i].status == NaleStatus::kHalted)
      continue;
    host_send_ctrl(i, kCtrlProbe, host_.wave, now);
  }
  if (host_.replies_pending == 0) host_.stopping = true;  // nothing to run
}

void Machine::wave_decide(SimTime now) {
  uint64_t sent = 0, recv = 0;
  for (uint32_t i = 0; i < count_; ++i) {
    sent += host_.rep_sent[i];
    recv += host_.rep_recv[i];
  }
  bool settled = sent == host_.prev_sent && recv == host_.prev_recv &&
                 sent == recv;
  host_.prev_sent = sent;
  host_.prev_recv = recv;
  if (settled && host_.barriers_done < host_.barrier_total) {
    ++host_.barriers_done;
    for (uint32_t i = 0; i < count_; ++i)
      if (!nales_[i].program.empty() && nales_[i].status != NaleStatus::kHalted)
        host_send_ctrl(i, kCtrlBarrier, host_.barriers_done, now);
    wave_start(now);
    return;
  }
  if (settled) {
    host_.stopping = true;
    for (uint32_t i = 0; i < count_; ++i)
      if (!nales_[i].program.empty() && nales_[i].status != NaleStatus::kHalted)
        host_send_ctrl(i, kCtrlStop, 0, now);
    return;
  }
  wave_start(now);
}

void Machine::host_consume(uint32_t nale, Word w, SimTime now) {
  if (!host_.protocol || host_.stopping) {
    host_.gather[nale].push_back(w);
    return;
  }
  auto& buf = host_.reply_buf[nale];
  buf.push_back(w);
  if (buf.size() < 3) return;
  if (buf[0] != kReplyIdleTag)
    fault(nale, 0, "malformed idle reply on host link");
  uint64_t s = buf[1], r = buf[2];
  buf.clear();
  if (host_.replied[nale]) fault(nale, 0, "duplicate idle reply in one wave");
  host_.replied[nale] = 1;
  host_.rep_sent[nale] = s;
  host_.rep_recv[nale] = r;
  if (--host_.replies_pending == 0) wave_decide(now);
}

// ---------------------------------------------------------------------------
// Channels

void Machine::deliver(uint32_t chan_id, SimTime now) {
  Channel& ch = channels_[chan_id];
  if (ch.in_flight.empty() || ch.in_flight.front().at != now)
    throw std::logic_error("channel delivery out of order");
  auto fly = ch.in_flight.front();
  ch.in_flight.pop_front();
  if (fly.seq != ch.delivered)
    throw std::logic_error("channel FIFO order violated");
  ++ch.delivered;
  ++metrics_.words_moved;
  if (ch.dst < 0) {
    // Output logic consumes immediately; credit returns after Tb.
    ++ch.consumed;
    ++ch.credits_pending;
    schedule(now + cfg_.channel.backward_latency, count_ + chan_id, kEvCredit,
             chan_id);
    host_consume(static_cast<uint32_t>(ch.src), fly.word, now);
    return;
  }
  ch.buffer.push_back({fly.word, fly.seq});
  Nale& n = nales_[ch.dst];
  if (n.status == NaleStatus::kBlockedRecv && n.blocked_port == ch.dst_port) {
    n.status = NaleStatus::kRunning;
    schedule(now, static_cast<uint32_t>(ch.dst), kEvResume, 0);
  }
}

void Machine::credit(uint32_t chan_id, SimTime now) {
  Channel& ch = channels_[chan_id];
  ++ch.credits;
  ++ch.credits_back;
  --ch.credits_pending;
  if (ch.credits > cfg_.channel.capacity)
    throw std::logic_error("channel credits exceed capacity");
  if (ch.src < 0) {
    try_inject(static_cast<uint32_t>(ch.dst), now);
    return;
  }
  Nale& n = nales_[ch.src];
  if (n.status == NaleStatus::kBlockedSend &&
      n.chan_out[n.blocked_port] == static_cast<int>(chan_id)) {
    n.status = NaleStatus::kRunning;
    schedule(now, static_cast<uint32_t>(ch.src), kEvResume, 0);
  }
}

// ---------------------------------------------------------------------------
// Element execution

void Machine::charge(Opcode op, uint32_t id, SimTime& now) {
  uint64_t lat = cfg_.latency.of(op);
  ++metrics_.op_counts[static_cast<int>(op)];
  metrics_.busy[id] += lat;
  ++metrics_.events;
  now += lat;
  note_time(now);
}

void Machine::exec_channel_op(uint32_t id, Nale& n, const DecodedOp& op,
                              SimTime& now, bool& yielded) {
  Opcode oc = static_cast<Opcode>(op.op);
  Port p = static_cast<Port>(op.port);

  if (oc == Opcode::kSend || oc == Opcode::kTrySend) {
    Word w = operand(n, op.a_imm, op.a);
    if (p == Port::kInternal) {
      if (n.fifo.size() >= fifo_capacity_) {
        if (oc == Opcode::kTrySend) {
          n.regs[kStatusRegister] = 0;
        } else {
          fault(id, n.pc, "internal FIFO overflow");
        }
      } else {
        n.fifo.push_back(w);
        if (oc == Opcode::kTrySend) n.regs[kStatusRegister] = 1;
      }
      ++n.pc;
      charge(oc, id, now);
      return;
    }
    int ci = n.chan_out[static_cast<int>(p)];
    if (ci < 0) fault(id, n.pc, std::string("send on missing port ") + port_name(p));
    Channel& ch = channels_[ci];
    if (ch.credits == 0) {
      if (oc == Opcode::kTrySend) {
        n.regs[kStatusRegister] = 0;
        ++n.pc;
        charge(oc, id, now);
        return;
      }
      n.status = NaleStatus::kBlockedSend;
      n.blocked_port = op.port;
      n.local_time = now;
      yielded = true;
      return;
    }
    ch.credits--;
    ch.in_flight.push_back({w, now + cfg_.channel.forward_latency, ch.sent++});
    schedule(now + cfg_.channel.forward_latency, count_ + ci, kEvDeliver, ci);
    if (oc == Opcode::kTrySend) n.regs[kStatusRegister] = 1;
    ++n.pc;
    charge(oc, id, now);
    return;
  }

  // kRecv / kTryRecv
  if (p == Port::kInternal) {
    if (n.fifo.empty()) {
      if (oc == Opcode::kRecv)
        fault(id, n.pc, "recv on empty internal FIFO can never complete");
      n.regs[kStatusRegister] = 0;
    } else {
      n.regs[op.dst] = n.fifo.front();
      n.fifo.pop_front();
      if (oc == Opcode::kTryRecv) n.regs[kStatusRegister] = 1;
    }
    ++n.pc;
    charge(oc, id, now);
    return;
  }
  int ci = n.chan_in[static_cast<int>(p)];
  if (ci < 0) fault(id, n.pc, std::string("recv on missing port ") + port_name(p));
  Channel& ch = channels_[ci];
  if (ch.buffer.empty()) {
    if (oc == Opcode::kTryRecv) {
      n.regs[kStatusRegister] = 0;
      ++n.pc;
      charge(oc, id, now);
      return;
    }
    n.status = NaleStatus::kBlockedRecv;
    n.blocked_port = op.port;
    n.local_time = now;
    yielded = true;
    return;
  }
  auto [w, seq] = ch.buffer.front();
  if (seq != ch.consumed) throw std::logic_error("channel consume out of order");
  ch.buffer.pop_front();
  ++ch.consumed;
  ++ch.credits_pending;
  schedule(now + cfg_.channel.backward_latency, count_ + ci, kEvCredit, ci);
  n.regs[op.dst] = w;
  if (oc == Opcode::kTryRecv) n.regs[kStatusRegister] = 1;
  ++n.pc;
  charge(oc, id, now);
}

void Machine::resume_nale(uint32_t id, SimTime now) {
  Nale& n = nales_[id];
  if (n.status == NaleStatus::kHalted) return;
  n.status = NaleStatus::kRunning;
  SimTime t = std::max(n.local_time, now);

  for (;;) {
    if (n.pc >= n.program.size()) {  // running off the end halts
      n.status = NaleStatus::kHalted;
      ++halted_count_;
      note_time(t);
      return;
    }
    const DecodedOp& op = n.program[n.pc];
    if (op.op == 0xFF) fault(id, n.pc, "undefined instruction word");
    Opcode oc = static_cast<Opcode>(op.op);

    bool is_channel =
        oc == Opcode::kSend || oc == Opcode::kTrySend || oc == Opcode::kRecv ||
        oc == Opcode::kTryRecv;
    if (is_channel) {
      // Channel state is shared; synchronize with the event horizon first.
      if (heap_blocks(t, id)) {
        n.local_time = t;
        schedule(t, id, kEvResume, 0);
        return;
      }
      bool yielded = false;
      exec_channel_op(id, n, op, t, yielded);
      if (yielded) return;
      check_budget();
      continue;
    }

    // Private ops run ahead of the heap; they cannot observe other actors.
    switch (oc) {
      case Opcode::kNop:
        ++n.pc;
        break;
      case Opcode::kHalt:
        charge(oc, id, t);
        n.status = NaleStatus::kHalted;
        ++halted_count_;
        n.local_time = t;
        return;
      case Opcode::kLdi:
        n.regs[op.dst] = op.a;
        ++n.pc;
        break;
      case Opcode::kMov:
        n.regs[op.dst] = n.regs[op.a & 15];
        ++n.pc;
        break;
      case Opcode::kAdd:
        n.regs[op.dst] = operand(n, op.a_imm, op.a) + operand(n, op.b_imm, op.b);
        ++n.pc;
        break;
      case Opcode::kSub:
        n.regs[op.dst] = operand(n, op.a_imm, op.a) - operand(n, op.b_imm, op.b);
        ++n.pc;
        break;
      case Opcode::kMul:
        n.regs[op.dst] = static_cast<Word>(
            static_cast<uint64_t>(operand(n, op.a_imm, op.a)) *
            operand(n, op.b_imm, op.b));
        ++n.pc;
        break;
      case Opcode::kMac:
        n.regs[op.dst] += static_cast<Word>(
            static_cast<uint64_t>(operand(n, op.a_imm, op.a)) *
            operand(n, op.b_imm, op.b));
        ++n.pc;
        break;
      case Opcode::kCmp3: {
        int32_t a = static_cast<int32_t>(operand(n, op.a_imm, op.a));
        int32_t b = static_cast<int32_t>(operand(n, op.b_imm, op.b));
        n.regs[op.dst] = a < b ? 0xFFFFFFFFu : (a == b ? 0 : 1);
        ++n.pc;
        break;
      }
      case Opcode::kMin: {
        int32_t a = static_cast<int32_t>(operand(n, op.a_imm, op.a));
        int32_t b = static_cast<int32_t>(operand(n, op.b_imm, op.b));
        n.regs[op.dst] = static_cast<Word>(a < b ? a : b);
        ++n.pc;
        break;
      }
      case Opcode::kJmp:
        n.pc = op.b;
        break;
      case Opcode::kJz:
        n.pc = n.regs[op.a & 15] == 0 ? op.b : n.pc + 1;
        break;
      case Opcode::kJnz:
        n.pc = n.regs[op.a & 15] != 0 ? op.b : n.pc + 1;
        break;
      case Opcode::kPushi:
        if (n.fifo.size() >= fifo_capacity_)
          fault(id, n.pc, "internal FIFO overflow");
        n.fifo.push_back(operand(n, op.a_imm, op.a));
        ++n.pc;
        break;
      case Opcode::kPopi:
        if (n.fifo.empty()) fault(id, n.pc, "pop from empty internal FIFO");
        n.regs[op.dst] = n.fifo.front();
        n.fifo.pop_front();
        ++n.pc;
        break;
      case Opcode::kIteri:
        if (!n.fifo.empty()) {
          n.fifo.push_back(n.fifo.front());
          n.fifo.pop_front();
        }
        ++n.pc;
        break;
      default:
        fault(id, n.pc, "unreachable opcode");
    }
    charge(oc, id, t);
    check_budget();
  }
}

// ---------------------------------------------------------------------------
// Driving

std::optional<StepReport> Machine::step() {
  if (!loaded_) throw LoadError("step before load");
  if (heap_.empty()) return std::nullopt;
  Event e = heap_.top();
  heap_.pop();
  if (e.t < last_event_t_)
    throw std::logic_error("event time monotonicity violated");
  last_event_t_ = e.t;
  ++metrics_.events;
  check_budget();
  note_time(e.t);

  StepReport rep;
  rep.t = e.t;
  switch (e.kind) {
    case kEvResume:
      rep.what = "resume element " + std::to_string(e.actor / cols_) + "," +
                 std::to_string(e.actor % cols_);
      resume_nale(e.actor, e.t);
      break;
    case kEvDeliver:
      rep.what = "deliver on channel " + std::to_string(e.arg);
      deliver(e.arg, e.t);
      break;
    case kEvCredit:
      rep.what = "credit on channel " + std::to_string(e.arg);
      credit(e.arg, e.t);
      break;
    case kEvMemTick:
      rep.what = "memory batch " + std::to_string(e.arg);
      mem_tick(e.arg, e.t);
      break;
    default:
      throw std::logic_error("unknown event kind");
  }
  return rep;
}

bool Machine::quiescent() const {
  if (!heap_.empty()) return false;
  for (const auto& n : nales_)
    if (!n.program.empty() && n.status != NaleStatus::kHalted) return false;
  for (const auto& ch : channels_)
    if (!ch.in_flight.empty() || !ch.buffer.empty() || ch.credits_pending != 0)
      return false;
  for (const auto& q : host_.inject)
    if (!q.empty()) return false;
  return true;
}

void Machine::validate_invariants() const {
  for (size_t i = 0; i < channels_.size(); ++i) {
    const Channel& ch = channels_[i];
    uint64_t occupancy = ch.in_flight.size() + ch.buffer.size();
    if (occupancy > cfg_.channel.capacity)
      throw std::logic_error("channel occupancy exceeds capacity");
    if (ch.credits + ch.credits_pending + occupancy != cfg_.channel.capacity)
      throw std::logic_error("channel credit conservation violated");
    if (ch.sent != ch.delivered + ch.in_flight.size())
      throw std::logic_error("channel word conservation violated (forward)");
    if (ch.delivered != ch.consumed + ch.buffer.size())
      throw std::logic_error("channel word conservation violated (buffer)");
    uint64_t expect = ch.consumed;
    for (const auto& [w, seq] : ch.buffer)
      if (seq != expect++) throw std::logic_error("channel FIFO order broken");
  }
}

RunOutput Machine::run() {
  if (!loaded_) throw LoadError("run before load");
  while (step()) {
  }
  validate_invariants();
  if (!quiescent())
    throw TimeoutError(metrics_);  // stalled: blocked elements, empty queue
  return assemble_results();
}

RunOutput Machine::assemble_results() {
  RunOutput out;
  out.metrics = metrics_;
  if (!app_) {
    for (uint32_t i = 0; i < count_; ++i)
      for (Word w : host_.gather[i]) out.values.push_back(w);
    return out;
  }
  const CompiledApp& app = *app_;
  out.values.assign(app.vertex_count, 0);
  for (uint32_t r = 0; r < app.rows; ++r)
    for (uint32_t c = 0; c < app.cols; ++c) {
      uint32_t app_idx = app.nale_index(r, c);
      uint32_t idx = index_of(r, c);
      const auto& words = host_.gather[idx];
      size_t expect = app.gather_vids[app_idx].size() * 2;
      if (words.size() != expect)
        fault(idx, 0,
              "gather mismatch: got " + std::to_string(words.size()) +
                  " words, expected " + std::to_string(expect));
      for (size_t i = 0; i + 1 < words.size(); i += 2) {
        Word vid = words[i], value = words[i + 1];
        if (vid >= app.vertex_count) fault(idx, 0, "gather: bad vertex id");
        Word orig = app.orig_of[vid];
        switch (app.kernel.kind) {
          case KernelKind::kSssp:
          case KernelKind::kBfs:
            out.values[orig] = value == kInfDistance ? kUnreached : value;
            break;
          case KernelKind::kDfs:
            out.values[orig] = value == kDfsUnvisited ? kUnreached : value;
            break;
          case KernelKind::kMiniTri:
            out.values[orig] = value;
            out.scalar += value;
            break;
          default:
            out.values[orig] = value;
        }
      }
    }
  return out;
}

}  // namespace gproc
