#include "gproc/isa.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace gproc {

namespace {

const char* const kOpcodeNames[kOpcodeCount] = {
    "nop",  "halt", "ldi",  "mov",     "add",   "sub",  "mul",
    "mac",  "cmp3", "min",  "jmp",     "jz",    "jnz",  "send",
    "recv", "tryrecv", "pushi", "popi", "iteri", "trysend"};

const char* const kPortNames[kPortCount] = {"NORTH", "SOUTH",    "EAST",
                                            "WEST",  "INTERNAL", "HOST"};

enum class ASlot : uint8_t { kNone, kReg, kImm, kAny, kPort };
enum class BSlot : uint8_t { kNone, kAny, kImm };

struct Format {
  bool has_dst;      // dst field holds a register
  bool dst_is_port;  // dst field holds a port (SEND)
  ASlot a;
  BSlot b;
};

constexpr Format kFormats[kOpcodeCount] = {
    /* nop     */ {false, false, ASlot::kNone, BSlot::kNone},
    /* halt    */ {false, false, ASlot::kNone, BSlot::kNone},
    /* ldi     */ {true, false, ASlot::kImm, BSlot::kNone},
    /* mov     */ {true, false, ASlot::kReg, BSlot::kNone},
    /* add     */ {true, false, ASlot::kAny, BSlot::kAny},
    /* sub     */ {true, false, ASlot::kAny, BSlot::kAny},
    /* mul     */ {true, false, ASlot::kAny, BSlot::kAny},
    /* mac     */ {true, false, ASlot::kAny, BSlot::kAny},
    /* cmp3    */ {true, false, ASlot::kAny, BSlot::kAny},
    /* min     */ {true, false, ASlot::kAny, BSlot::kAny},
    /* jmp     */ {false, false, ASlot::kNone, BSlot::kImm},
    /* jz      */ {false, false, ASlot::kReg, BSlot::kImm},
    /* jnz     */ {false, false, ASlot::kReg, BSlot::kImm},
    /* send    */ {false, true, ASlot::kAny, BSlot::kNone},
    /* recv    */ {true, false, ASlot::kPort, BSlot::kNone},
    /* tryrecv */ {true, false, ASlot::kPort, BSlot::kNone},
    /* pushi   */ {false, false, ASlot::kAny, BSlot::kNone},
    /* popi    */ {true, false, ASlot::kNone, BSlot::kNone},
    /* iteri   */ {false, false, ASlot::kNone, BSlot::kNone},
    /* trysend */ {false, true, ASlot::kAny, BSlot::kNone},
};

void check_reg(uint32_t r, const char* what) {
  if (r > 15)
    throw EncodeError(std::string("encode: ") + what + " register out of range");
}

void check_imm(uint32_t v, const char* what) {
  if (v > 0xFFFFu)
    throw EncodeError(std::string("encode: ") + what +
                      " immediate does not fit in 16 bits");
}

}  // namespace

const char* opcode_name(Opcode op) {
  return kOpcodeNames[static_cast<int>(op)];
}

const char* port_name(Port p) { return kPortNames[static_cast<int>(p)]; }

uint32_t encode(const Instruction& i) {
  int opv = static_cast<int>(i.op);
  if (opv < 0 || opv >= kOpcodeCount)
    throw EncodeError("encode: undefined opcode");
  const Format& f = kFormats[opv];

  uint32_t dst_field = 0;
  if (f.has_dst) {
    check_reg(i.dst, "dst");
    dst_field = i.dst;
  } else if (f.dst_is_port) {
    if (i.port >= kPortCount) throw EncodeError("encode: port out of range");
    dst_field = i.port;
  } else if (i.dst != 0) {
    throw EncodeError("encode: dst not allowed for this opcode");
  }

  uint32_t mode_a = 0, field_a = 0, mode_b = 0, field_b = 0;

  switch (f.a) {
    case ASlot::kNone:
      if (i.a.kind != Operand::Kind::kNone)
        throw EncodeError("encode: srcA not allowed for this opcode");
      break;
    case ASlot::kPort:
      if (i.port >= kPortCount) throw EncodeError("encode: port out of range");
      field_a = i.port;
      break;
    case ASlot::kReg:
      if (i.a.kind != Operand::Kind::kReg)
        throw EncodeError("encode: srcA must be a register");
      check_reg(i.a.value, "srcA");
      field_a = i.a.value;
      break;
    case ASlot::kImm:
      if (i.a.kind != Operand::Kind::kImm)
        throw EncodeError("encode: srcA must be an immediate");
      check_imm(i.a.value, "srcA");
      mode_a = 1;
      field_a = i.a.value >> 12;
      field_b = (i.a.value & 0xFFFu) << 4;
      break;
    case ASlot::kAny:
      if (i.a.kind == Operand::Kind::kReg) {
        check_reg(i.a.value, "srcA");
        field_a = i.a.value;
      } else if (i.a.kind == Operand::Kind::kImm) {
        check_imm(i.a.value, "srcA");
        mode_a = 1;
        field_a = i.a.value >> 12;
        field_b = (i.a.value & 0xFFFu) << 4;
      } else {
        throw EncodeError("encode: missing srcA operand");
      }
      break;
  }

  switch (f.b) {
    case BSlot::kNone:
      if (i.b.kind != Operand::Kind::kNone)
        throw EncodeError("encode: srcB not allowed for this opcode");
      break;
    case BSlot::kImm:
      if (i.b.kind != Operand::Kind::kImm)
        throw EncodeError("encode: srcB must be an immediate");
      check_imm(i.b.value, "srcB");
      mode_b = 1;
      field_b = i.b.value;
      break;
    case BSlot::kAny:
      if (i.b.kind == Operand::Kind::kReg) {
        check_reg(i.b.value, "srcB");
        field_b |= i.b.value;
      } else if (i.b.kind == Operand::Kind::kImm) {
        if (mode_a)
          throw EncodeError("encode: at most one immediate operand");
        check_imm(i.b.value, "srcB");
        mode_b = 1;
        field_b = i.b.value;
      } else {
        throw EncodeError("encode: missing srcB operand");
      }
      break;
  }

  return (static_cast<uint32_t>(opv) << 26) | (dst_field << 22) |
         (mode_a << 21) | (field_a << 17) | (mode_b << 16) | field_b;
}

Instruction decode(uint32_t word) {
  uint32_t opv = word >> 26;
  if (opv >= kOpcodeCount)
    throw DecodeError("decode: undefined opcode field " + std::to_string(opv));
  const Format& f = kFormats[opv];

  uint32_t dst_field = (word >> 22) & 0xF;
  uint32_t mode_a = (word >> 21) & 1;
  uint32_t field_a = (word >> 17) & 0xF;
  uint32_t mode_b = (word >> 16) & 1;
  uint32_t field_b = word & 0xFFFF;

  Instruction i;
  i.op = static_cast<Opcode>(opv);
  if (f.has_dst) i.dst = static_cast<uint8_t>(dst_field);
  if (f.dst_is_port) i.port = static_cast<uint8_t>(dst_field);

  switch (f.a) {
    case ASlot::kNone:
      break;
    case ASlot::kPort:
      i.port = static_cast<uint8_t>(field_a);
      break;
    case ASlot::kReg:
      i.a = Operand::reg(field_a);
      break;
    case ASlot::kImm:
    case ASlot::kAny:
      if (mode_a)
        i.a = Operand::imm((field_a << 12) | (field_b >> 4));
      else
        i.a = Operand::reg(field_a);
      break;
  }

  switch (f.b) {
    case BSlot::kNone:
      break;
    case BSlot::kImm:
      i.b = Operand::imm(field_b);
      break;
    case BSlot::kAny:
      if (mode_b)
        i.b = Operand::imm(field_b);
      else
        i.b = Operand::reg(field_b & 0xF);
      break;
  }

  // Round-trip re-encode rejects every non-canonical or malformed word, so
  // decode's accepted set is exactly encode's image.
  uint32_t back;
  try {
    back = encode(i);
  } catch (const EncodeError& e) {
    throw DecodeError(std::string("decode: malformed operand encoding (") +
                      e.what() + ")");
  }
  if (back != word)
    throw DecodeError("decode: malformed operand encoding (non-canonical word)");
  return i;
}

// ---------------------------------------------------------------------------
// Assembler / disassembler

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool parse_u32(const std::string& s, uint32_t& out) {
  if (s.empty()) return false;
  uint64_t v = 0;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    v = v * 10 + (c - '0');
    if (v > 0xFFFFFFFFull) return false;
  }
  out = static_cast<uint32_t>(v);
  return true;
}

struct AsmCtx {
  uint64_t line_no;
  const std::map<std::string, uint32_t>* labels;  // null in pass 1
};

[[noreturn]] void asm_fail(const AsmCtx& ctx, const std::string& msg) {
  throw AssembleError("assemble: line " + std::to_string(ctx.line_no) + ": " +
                      msg);
}

int find_opcode(const std::string& mn) {
  for (int i = 0; i < kOpcodeCount; ++i)
    if (mn == kOpcodeNames[i]) return i;
  return -1;
}

int find_port(const std::string& tok) {
  std::string up = tok;
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  for (int i = 0; i < kPortCount; ++i)
    if (up == kPortNames[i]) return i;
  return -1;
}

uint8_t parse_reg(const AsmCtx& ctx, const std::string& tok) {
  uint32_t n;
  if (tok.size() < 2 || (tok[0] != 'r' && tok[0] != 'R') ||
      !parse_u32(tok.substr(1), n) || n > 15)
    asm_fail(ctx, "expected register r0..r15, got '" + tok + "'");
  return static_cast<uint8_t>(n);
}

Operand parse_reg_or_imm(const AsmCtx& ctx, const std::string& tok) {
  if (!tok.empty() && tok[0] == '#') {
    uint32_t v;
    if (!parse_u32(tok.substr(1), v) || v > 0xFFFF)
      asm_fail(ctx, "bad immediate '" + tok + "' (expected #0..#65535)");
    return Operand::imm(v);
  }
  return Operand::reg(parse_reg(ctx, tok));
}

Port parse_port(const AsmCtx& ctx, const std::string& tok) {
  int p = find_port(tok);
  if (p < 0) asm_fail(ctx, "expected port name, got '" + tok + "'");
  return static_cast<Port>(p);
}

uint32_t parse_target(const AsmCtx& ctx, const std::string& tok,
                      size_t program_len) {
  uint32_t v;
  if (!tok.empty() && tok[0] == '#') {
    if (!parse_u32(tok.substr(1), v)) asm_fail(ctx, "bad branch target");
  } else if (parse_u32(tok, v)) {
    // bare integer target
  } else {
    if (!ctx.labels) return 0;  // pass 1: only counting
    auto it = ctx.labels->find(tok);
    if (it == ctx.labels->end())
      asm_fail(ctx, "undefined label '" + tok + "'");
    v = it->second;
  }
  if (ctx.labels && v >= program_len)
    asm_fail(ctx, "branch target " + std::to_string(v) +
                      " outside program of length " + std::to_string(program_len));
  return v;
}

std::vector<std::string> split_operands(const std::string& rest) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : rest) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  for (auto& s : out) {
    size_t b = s.find_first_not_of(" \t");
    size_t e = s.find_last_not_of(" \t");
    s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

Instruction parse_instruction(const AsmCtx& ctx, const std::string& mnemonic,
                              const std::vector<std::string>& ops,
                              size_t program_len) {
  int opv = find_opcode(lower(mnemonic));
  if (opv < 0) asm_fail(ctx, "unknown mnemonic '" + mnemonic + "'");
  Opcode op = static_cast<Opcode>(opv);

  auto want = [&](size_t n) {
    if (ops.size() != n)
      asm_fail(ctx, std::string(opcode_name(op)) + " expects " +
                        std::to_string(n) + " operand(s), got " +
                        std::to_string(ops.size()));
  };

  switch (op) {
    case Opcode::kNop:
    case Opcode::kHalt:
    case Opcode::kIteri:
      want(0);
      return Instruction{op, 0, {}, {}, 0};
    case Opcode::kLdi: {
      want(2);
      uint8_t d = parse_reg(ctx, ops[0]);
      Operand a = parse_reg_or_imm(ctx, ops[1]);
      if (a.kind != Operand::Kind::kImm)
        asm_fail(ctx, "ldi requires an immediate operand");
      return ins::ldi(d, a.value);
    }
    case Opcode::kMov:
      want(2);
      return ins::mov(parse_reg(ctx, ops[0]), parse_reg(ctx, ops[1]));
    case Opcode::kAdd:
    case Opcode::kSub:
    case Opcode::kMul:
    case Opcode::kMac:
    case Opcode::kCmp3:
    case Opcode::kMin: {
      want(3);
      Operand a = parse_reg_or_imm(ctx, ops[1]);
      Operand b = parse_reg_or_imm(ctx, ops[2]);
      if (a.kind == Operand::Kind::kImm && b.kind == Operand::Kind::kImm)
        asm_fail(ctx, "at most one immediate operand");
      return ins::alu(op, parse_reg(ctx, ops[0]), a, b);
    }
    case Opcode::kJmp:
      want(1);
      return ins::jmp(parse_target(ctx, ops[0], program_len));
    case Opcode::kJz:
    case Opcode::kJnz: {
      want(2);
      uint8_t t = parse_reg(ctx, ops[0]);
      uint32_t tgt = parse_target(ctx, ops[1], program_len);
      return op == Opcode::kJz ? ins::jz(t, tgt) : ins::jnz(t, tgt);
    }
    case Opcode::kSend:
      want(2);
      return ins::send(parse_port(ctx, ops[0]), parse_reg_or_imm(ctx, ops[1]));
    case Opcode::kTrySend:
      want(2);
      return ins::trysend(parse_port(ctx, ops[0]), parse_reg_or_imm(ctx, ops[1]));
    case Opcode::kRecv:
      want(2);
      return ins::recv(parse_reg(ctx, ops[0]), parse_port(ctx, ops[1]));
    case Opcode::kTryRecv:
      want(2);
      return ins::tryrecv(parse_reg(ctx, ops[0]), parse_port(ctx, ops[1]));
    case Opcode::kPushi:
      want(1);
      return ins::pushi(parse_reg_or_imm(ctx, ops[0]));
    case Opcode::kPopi:
      want(1);
      return ins::popi(parse_reg(ctx, ops[0]));
  }
  asm_fail(ctx, "unreachable");
}

struct Line {
  uint64_t no;
  std::vector<std::string> label_defs;
  std::string mnemonic;
  std::vector<std::string> operands;
};

std::vector<Line> scan_lines(const std::string& text) {
  std::vector<Line> out;
  std::istringstream in(text);
  std::string raw;
  uint64_t no = 0;
  while (std::getline(in, raw)) {
    ++no;
    size_t sc = raw.find(';');
    if (sc != std::string::npos) raw.resize(sc);
    Line line{no, {}, "", {}};
    std::istringstream ls(raw);
    std::string tok;
    while (ls >> tok) {
      if (line.mnemonic.empty() && tok.back() == ':') {
        line.label_defs.push_back(tok.substr(0, tok.size() - 1));
        continue;
      }
      if (line.mnemonic.empty()) {
        line.mnemonic = tok;
        std::string rest;
        std::getline(ls, rest);
        line.operands = split_operands(rest);
        break;
      }
    }
    if (!line.label_defs.empty() || !line.mnemonic.empty())
      out.push_back(std::move(line));
  }
  return out;
}

}  // namespace

NaleProgram assemble(const std::string& text) {
  std::vector<Line> lines = scan_lines(text);

  NaleProgram p;
  uint32_t index = 0;
  for (const Line& line : lines) {
    for (const std::string& label : line.label_defs) {
      if (label.empty())
        throw AssembleError("assemble: line " + std::to_string(line.no) +
                            ": empty label name");
      if (p.labels.count(label))
        throw AssembleError("assemble: line " + std::to_string(line.no) +
                            ": duplicate label '" + label + "'");
      p.labels[label] = index;
    }
    if (!line.mnemonic.empty()) ++index;
  }

  p.code.reserve(index);
  for (const Line& line : lines) {
    if (line.mnemonic.empty()) continue;
    AsmCtx ctx{line.no, &p.labels};
    p.code.push_back(parse_instruction(ctx, line.mnemonic, line.operands, index));
  }
  return p;
}

std::string disassemble(const NaleProgram& p) {
  std::set<uint32_t> targets;
  for (const Instruction& i : p.code)
    if (i.op == Opcode::kJmp || i.op == Opcode::kJz || i.op == Opcode::kJnz)
      targets.insert(i.b.value);

  std::map<uint32_t, std::string> names;
  int n = 0;
  for (uint32_t t : targets) names[t] = "L" + std::to_string(n++);

  auto operand_str = [](const Operand& o) {
    return o.kind == Operand::Kind::kImm ? "#" + std::to_string(o.value)
                                         : "r" + std::to_string(o.value);
  };

  std::ostringstream out;
  for (uint32_t idx = 0; idx < p.code.size(); ++idx) {
    if (names.count(idx)) out << names[idx] << ":\n";
    const Instruction& i = p.code[idx];
    out << "  " << opcode_name(i.op);
    switch (i.op) {
      case Opcode::kNop:
      case Opcode::kHalt:
      case Opcode::kIteri:
        break;
      case Opcode::kLdi:
        out << " r" << int(i.dst) << ", #" << i.a.value;
        break;
      case Opcode::kMov:
        out << " r" << int(i.dst) << ", r" << i.a.value;
        break;
      case Opcode::kAdd:
      case Opcode::kSub:
      case Opcode::kMul:
      case Opcode::kMac:
      case Opcode::kCmp3:
      case Opcode::kMin:
        out << " r" << int(i.dst) << ", " << operand_str(i.a) << ", "
            << operand_str(i.b);
        break;
      case Opcode::kJmp:
        out << " " << names[i.b.value];
        break;
      case Opcode::kJz:
      case Opcode::kJnz:
        out << " r" << i.a.value << ", " << names[i.b.value];
        break;
      case Opcode::kSend:
      case Opcode::kTrySend:
        out << " " << kPortNames[i.port] << ", " << operand_str(i.a);
        break;
      case Opcode::kRecv:
      case Opcode::kTryRecv:
        out << " r" << int(i.dst) << ", " << kPortNames[i.port];
        break;
      case Opcode::kPushi:
        out << " " << operand_str(i.a);
        break;
      case Opcode::kPopi:
        out << " r" << int(i.dst);
        break;
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Binary container

namespace {
constexpr char kMagic[4] = {'N', 'A', 'L', 'E'};
constexpr uint8_t kVersion = 1;

void put_u32_le(std::ostream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF),
               static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

uint32_t get_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DecodeError("program file truncated");
  return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
         (uint32_t(b[3]) << 24);
}
}  // namespace

void save_program(const NaleProgram& p, std::ostream& out) {
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  put_u32_le(out, static_cast<uint32_t>(p.code.size()));
  for (const Instruction& i : p.code) put_u32_le(out, encode(i));
}

NaleProgram load_program(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4))
    throw DecodeError("program file: bad magic");
  int version = in.get();
  if (version != kVersion)
    throw DecodeError("program file: unsupported version " +
                      std::to_string(version));
  uint32_t count = get_u32_le(in);
  NaleProgram p;
  p.code.reserve(count);
  for (uint32_t k = 0; k < count; ++k) p.code.push_back(decode(get_u32_le(in)));
  return p;
}

void save_program_file(const NaleProgram& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open program file for write: " + path);
  save_program(p, out);
}

NaleProgram load_program_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open program file: " + path);
  return load_program(in);
}

// ---------------------------------------------------------------------------

namespace ins {
Instruction nop() { return {}; }
Instruction halt() { return {Opcode::kHalt, 0, {}, {}, 0}; }
Instruction ldi(uint8_t dst, uint32_t imm) {
  return {Opcode::kLdi, dst, Operand::imm(imm), {}, 0};
}
Instruction mov(uint8_t dst, uint8_t src) {
  return {Opcode::kMov, dst, Operand::reg(src), {}, 0};
}
Instruction alu(Opcode op, uint8_t dst, Operand a, Operand b) {
  return {op, dst, a, b, 0};
}
Instruction jmp(uint32_t target) {
  return {Opcode::kJmp, 0, {}, Operand::imm(target), 0};
}
Instruction jz(uint8_t test, uint32_t target) {
  return {Opcode::kJz, 0, Operand::reg(test), Operand::imm(target), 0};
}
Instruction jnz(uint8_t test, uint32_t target) {
  return {Opcode::kJnz, 0, Operand::reg(test), Operand::imm(target), 0};
}
Instruction send(Port port, Operand value) {
  return {Opcode::kSend, 0, value, {}, static_cast<uint8_t>(port)};
}
Instruction trysend(Port port, Operand value) {
  return {Opcode::kTrySend, 0, value, {}, static_cast<uint8_t>(port)};
}
Instruction recv(uint8_t dst, Port port) {
  return {Opcode::kRecv, dst, {}, {}, static_cast<uint8_t>(port)};
}
Instruction tryrecv(uint8_t dst, Port port) {
  return {Opcode::kTryRecv, dst, {}, {}, static_cast<uint8_t>(port)};
}
Instruction pushi(Operand value) {
  return {Opcode::kPushi, 0, value, {}, 0};
}
Instruction popi(uint8_t dst) { return {Opcode::kPopi, dst, {}, {}, 0}; }
Instruction iteri() { return {Opcode::kIteri, 0, {}, {}, 0}; }
}  // namespace ins

}  // namespace gproc
