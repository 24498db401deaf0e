#include "gproc/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gproc {

using nlohmann::json;

LatencyTable::LatencyTable() {
  cost.fill(1);
  cost[static_cast<int>(Opcode::kMac)] = 2;  // the datapath favors MAC, still 2 ticks
}

EnergyTable::EnergyTable() {
  op.fill(0.0);
  op_present.fill(false);
}

EnergyTable EnergyTable::defaults() {
  EnergyTable t;
  auto set = [&](Opcode o, double e) {
    t.op[static_cast<int>(o)] = e;
    t.op_present[static_cast<int>(o)] = true;
  };
  set(Opcode::kNop, 0.1);
  set(Opcode::kHalt, 0.1);
  set(Opcode::kLdi, 0.4);
  set(Opcode::kMov, 0.4);
  set(Opcode::kAdd, 1.0);
  set(Opcode::kSub, 1.0);
  set(Opcode::kMul, 3.0);
  set(Opcode::kMac, 4.0);
  set(Opcode::kCmp3, 0.8);
  set(Opcode::kMin, 0.8);
  set(Opcode::kJmp, 0.3);
  set(Opcode::kJz, 0.4);
  set(Opcode::kJnz, 0.4);
  set(Opcode::kSend, 1.5);
  set(Opcode::kRecv, 1.5);
  set(Opcode::kTryRecv, 0.9);
  set(Opcode::kPushi, 0.6);
  set(Opcode::kPopi, 0.6);
  set(Opcode::kIteri, 0.5);
  set(Opcode::kTrySend, 1.0);
  t.transfer = 2.0;
  t.transfer_present = true;
  return t;
}

namespace {

int opcode_index(const std::string& name) {
  for (int i = 0; i < kOpcodeCount; ++i)
    if (name == opcode_name(static_cast<Opcode>(i))) return i;
  throw ConfigError("config: unknown opcode '" + name + "'");
}

MachineConfig from_json(const json& j) {
  MachineConfig c;
  c.energy = EnergyTable::defaults();
  try {
    if (j.contains("dims")) {
      c.rows = j["dims"].at("rows").get<uint32_t>();
      c.cols = j["dims"].at("cols").get<uint32_t>();
    }
    if (j.contains("channel")) {
      const auto& ch = j["channel"];
      if (ch.contains("capacity")) c.channel.capacity = ch["capacity"].get<uint32_t>();
      if (ch.contains("forward_latency"))
        c.channel.forward_latency = ch["forward_latency"].get<uint64_t>();
      if (ch.contains("backward_latency"))
        c.channel.backward_latency = ch["backward_latency"].get<uint64_t>();
    }
    if (j.contains("memory")) {
      const auto& m = j["memory"];
      if (m.contains("batch_latency"))
        c.memory.batch_latency = m["batch_latency"].get<uint64_t>();
      if (m.contains("batch_words"))
        c.memory.batch_words = m["batch_words"].get<uint32_t>();
    }
    if (j.contains("latency"))
      for (const auto& [name, v] : j["latency"].items())
        c.latency.cost[opcode_index(name)] = v.get<uint64_t>();
    if (j.contains("energy")) {
      EnergyTable t;  // explicit table replaces the defaults entirely
      for (const auto& [name, v] : j["energy"].items()) {
        if (name == "transfer") {
          t.transfer = v.get<double>();
          t.transfer_present = true;
        } else {
          int idx = opcode_index(name);
          t.op[idx] = v.get<double>();
          t.op_present[idx] = true;
        }
      }
      c.energy = t;
    }
    if (j.contains("event_budget"))
      c.event_budget = j["event_budget"].get<uint64_t>();
    if (j.contains("internal_fifo_capacity"))
      c.internal_fifo_capacity = j["internal_fifo_capacity"].get<uint32_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("machine config: ") + e.what());
  }
  if (c.rows == 0 || c.cols == 0) throw ConfigError("machine config: zero dims");
  if (c.channel.capacity == 0)
    throw ConfigError("machine config: channel capacity must be positive");
  if (c.memory.batch_words == 0)
    throw ConfigError("machine config: batch_words must be positive");
  return c;
}

}  // namespace

MachineConfig machine_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("machine config: bad JSON: ") + e.what());
  }
  return from_json(j);
}

MachineConfig machine_config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open machine config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return machine_config_from_json_text(ss.str());
}

std::string machine_config_to_json_text(const MachineConfig& c) {
  json j;
  j["dims"] = {{"rows", c.rows}, {"cols", c.cols}};
  j["channel"] = {{"capacity", c.channel.capacity},
                  {"forward_latency", c.channel.forward_latency},
                  {"backward_latency", c.channel.backward_latency}};
  j["memory"] = {{"batch_latency", c.memory.batch_latency},
                 {"batch_words", c.memory.batch_words}};
  json lat;
  for (int i = 0; i < kOpcodeCount; ++i)
    lat[opcode_name(static_cast<Opcode>(i))] = c.latency.cost[i];
  j["latency"] = lat;
  json en;
  for (int i = 0; i < kOpcodeCount; ++i)
    if (c.energy.op_present[i])
      en[opcode_name(static_cast<Opcode>(i))] = c.energy.op[i];
  if (c.energy.transfer_present) en["transfer"] = c.energy.transfer;
  j["energy"] = en;
  j["event_budget"] = c.event_budget;
  j["internal_fifo_capacity"] = c.internal_fifo_capacity;
  return j.dump(2) + "\n";
}

MachineConfig resolve_machine_config(const std::string& path_or_empty) {
  if (!path_or_empty.empty()) return machine_config_from_file(path_or_empty);
  const char* env = std::getenv("GPROC_CONFIG");
  if (env && *env) return machine_config_from_file(env);
  MachineConfig c;
  c.energy = EnergyTable::defaults();
  return c;
}

}  // namespace gproc
