#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gproc/errors.hpp"

namespace gproc {

// Processing-element instruction set. One fixed 32-bit word per instruction:
//
//   [31:26] opcode   [25:22] dst    [21] modeA   [20:17] fieldA
//   [16]    modeB    [15:0]  fieldB
//
// Operand packing:
//   srcA register        modeA=0, fieldA = reg
//   srcA 16-bit imm      modeA=1, fieldA = imm[15:12], fieldB[15:4] = imm[11:0]
//   srcB register        fieldB[3:0] = reg
//   srcB 16-bit imm      modeB=1, fieldB = imm  (requires modeA=0)
//   at most one immediate operand per instruction
//   SEND carries its port in the dst field; RECV/TRYRECV carry it in fieldA.
// Unused fields must be zero; decode rejects non-canonical words, so
// encode/decode are inverse bijections on the valid set.

enum class Opcode : uint8_t {
  kNop = 0,
  kHalt = 1,
  kLdi = 2,   // dst <- imm16 (zero-extended)
  kMov = 3,   // dst <- srcA (register)
  kAdd = 4,
  kSub = 5,
  kMul = 6,   // low 32 bits of the product
  kMac = 7,   // dst <- dst + srcA * srcB (wrapping)
  kCmp3 = 8,  // dst <- -1 / 0 / +1 for srcA < = > srcB (signed)
  kMin = 9,   // signed minimum
  kJmp = 10,
  kJz = 11,   // branch if srcA == 0
  kJnz = 12,
  kSend = 13,    // send srcA to port (blocks on full channel)
  kRecv = 14,    // blocking receive into dst
  kTryRecv = 15, // non-blocking receive; r15 <- 1 on success else 0
  kPushi = 16,   // push srcA to the internal FIFO
  kPopi = 17,    // pop internal FIFO head into dst
  kIteri = 18,   // rotate internal FIFO head to tail
  kTrySend = 19, // non-blocking send; r15 <- 1 on success else 0
};

constexpr int kOpcodeCount = 20;
constexpr uint8_t kStatusRegister = 15;  // written by TRYRECV

const char* opcode_name(Opcode op);

enum class Port : uint8_t {
  kNorth = 0,
  kSouth = 1,
  kEast = 2,
  kWest = 3,
  kInternal = 4,
  kHost = 5,
};

constexpr int kPortCount = 6;
const char* port_name(Port p);

struct Operand {
  enum class Kind : uint8_t { kNone, kReg, kImm };
  Kind kind = Kind::kNone;
  uint32_t value = 0;

  static Operand none() { return {}; }
  static Operand reg(uint32_t r) { return {Kind::kReg, r}; }
  static Operand imm(uint32_t v) { return {Kind::kImm, v}; }
  bool operator==(const Operand&) const = default;
};

struct Instruction {
  Opcode op = Opcode::kNop;
  uint8_t dst = 0;        // destination register where the format has one
  Operand a;              // srcA
  Operand b;              // srcB
  uint8_t port = 0;       // SEND/RECV/TRYRECV only

  bool operator==(const Instruction&) const = default;
};

struct EncodeError : CompileError {
  explicit EncodeError(const std::string& what) : CompileError(what) {}
};
struct DecodeError : CompileError {
  explicit DecodeError(const std::string& what) : CompileError(what) {}
};
struct AssembleError : CompileError {
  explicit AssembleError(const std::string& what) : CompileError(what) {}
};

uint32_t encode(const Instruction& i);
Instruction decode(uint32_t word);

struct NaleProgram {
  std::vector<Instruction> code;
  std::map<std::string, uint32_t> labels;  // assembler-level only

  bool operator==(const NaleProgram& other) const { return code == other.code; }
};

// Two-pass assembler. One instruction or "label:" per line (a label may be
// followed by an instruction on the same line); ';' starts a comment.
NaleProgram assemble(const std::string& text);
std::string disassemble(const NaleProgram& p);

// Binary container: magic "NALE", version byte, uint32 count, LE words.
void save_program(const NaleProgram& p, std::ostream& out);
NaleProgram load_program(std::istream& in);
void save_program_file(const NaleProgram& p, const std::string& path);
NaleProgram load_program_file(const std::string& path);

// Convenience constructors used by codegen and tests.
namespace ins {
Instruction nop();
Instruction halt();
Instruction ldi(uint8_t dst, uint32_t imm);
Instruction mov(uint8_t dst, uint8_t src);
Instruction alu(Opcode op, uint8_t dst, Operand a, Operand b);
Instruction jmp(uint32_t target);
Instruction jz(uint8_t test, uint32_t target);
Instruction jnz(uint8_t test, uint32_t target);
Instruction send(Port port, Operand value);
Instruction trysend(Port port, Operand value);
Instruction recv(uint8_t dst, Port port);
Instruction tryrecv(uint8_t dst, Port port);
Instruction pushi(Operand value);
Instruction popi(uint8_t dst);
Instruction iteri();
}  // namespace ins

}  // namespace gproc
